#include "fixtures.hpp"

#include <algorithm>
#include <limits>

#include "mjls/riccati.hpp"

namespace mjls::fixtures {

ChannelBank example_bank(double v1, double v2, double mu1, double mu2) {
  return ChannelBank{{{v1, mu1}, {v2, mu2}}};
}

MjlsModel example_model(double v1, double v2, double mu1, double mu2) {
  Matrix A1(3, 3), A2(3, 3), B(3, 2), D1 = Matrix::Ones(3, 1), C = Matrix::Zero(3, 3);
  A1 << 1, 2, 1, 0, 1, 1, 1, 0, 2;
  A2 << 1, 0, 1, 0, 1, 0, 1, 0, 2;
  B << 1, 2, 1, 0, 0, 1;
  C.row(2).setOnes();
  Matrix Dm1(3, 2), Dm2(3, 2);
  Dm1 << 1, 0, 0, 1, 0, 0;
  Dm2 << 1, 1, 0, 1, 0, 0;
  Matrix T(2, 2);
  T << 0.45, 0.55, 0.4, 0.6;
  return MjlsModel({{A1, B, C, Dm1, D1}, {A2, B, C, Dm2, D1}}, MarkovChain{T},
                   example_bank(v1, v2, mu1, mu2));
}

Vector example_x0() {
  Vector x0(3);
  x0 << 0.1, 0.2, 0.3;
  return x0;
}

MjlsModel random_tiny_model(std::mt19937_64& rng, const TinyLimits& limits) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> prob(0.3, 1.0);
  auto pick = [&](int hi) { return std::uniform_int_distribution<int>(1, hi)(rng); };
  auto random = [&](int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = unit(rng);
    return m;
  };

  const int n = pick(limits.max_n), m = pick(limits.max_m), M = pick(limits.max_modes);
  const int s = pick(limits.max_s);
  std::vector<ModeData> modes;
  for (int i = 0; i < M; ++i) {
    ModeData md;
    md.A = random(n, n);
    md.B = random(n, m);
    md.D1 = 0.5 * random(n, s);
    md.C = Matrix::Zero(n + m, n);
    md.C.topRows(n) = random(n, n);
    md.D = Matrix::Zero(n + m, m);
    md.D.bottomRows(m) = random(m, m) + 1.5 * Matrix::Identity(m, m);
    modes.push_back(std::move(md));
  }
  Matrix T(M, M);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) T(i, j) = 0.1 + std::abs(unit(rng));
    T.row(i) /= T.row(i).sum();
  }
  ChannelBank bank;
  for (int h = 0; h < m; ++h) bank.channels.push_back({prob(rng), prob(rng)});
  // Terminal weight below every W(i) so the value recursion is monotone.
  double floor = std::numeric_limits<double>::infinity();
  for (const auto& md : modes) floor = std::min(floor, min_eigenvalue(md.C.transpose() * md.C));
  const Matrix terminal = 0.5 * std::max(floor, 0.0) * Matrix::Identity(n, n);
  return MjlsModel(std::move(modes), MarkovChain{T}, std::move(bank), terminal);
}

double feasible_gamma(const MjlsModel& model, int horizon, double margin) {
  double gamma = 0.5;
  while (!solve_finite_horizon(model, gamma, horizon).feasible()) gamma *= 2.0;
  return gamma * margin;
}

}  // namespace mjls::fixtures
