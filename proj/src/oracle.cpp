#include "mjls/oracle.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace mjls::oracle {

long long GridSpec::count() const {
  return static_cast<long long>(std::floor((upper - lower) / step + 1e-9)) + 1;
}

void GridSpec::check(int dim) const {
  if (!(step > 0.0) || !std::isfinite(lower) || !std::isfinite(upper) || !(upper > lower))
    throw std::invalid_argument("grid needs finite bounds lower < upper and step > 0");
  const double total = std::pow(static_cast<double>(count()), dim);
  if (total > 1e8) throw std::invalid_argument("grid has more than 1e8 points");
}

namespace {

bool bit(std::uint32_t word, int h) { return (word >> h) & 1U; }

// 𝒩(l)u without building the mask.
Vector masked(const Vector& u, std::uint32_t l) {
  Vector out = Vector::Zero(u.size());
  for (int h = 0; h < u.size(); ++h)
    if (bit(l, h)) out(h) = u(h);
  return out;
}

double grid_point(const GridSpec& g, long long k) { return g.lower + static_cast<double>(k) * g.step; }

// Smallest-index argmin of f over [0, last] for f unimodal on the lattice.
long long ternary_argmin(long long last, const std::function<double(long long)>& f) {
  long long lo = 0, hi = last;
  while (hi - lo > 4) {
    const long long m1 = lo + (hi - lo) / 3;
    const long long m2 = hi - (hi - lo) / 3;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  long long best = lo;
  double best_val = f(lo);
  for (long long k = lo + 1; k <= hi; ++k) {
    const double v = f(k);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  return best;
}

// Optimizes g over the lattice in every coordinate of a `dim`-vector by
// nested ternary searches; sign = +1 minimizes, −1 maximizes. Returns the
// optimal index vector.
std::vector<long long> nested_search(int dim, const GridSpec& grid, double sign,
                                     const std::function<double(const Vector&)>& g) {
  const long long last = grid.count() - 1;
  std::vector<long long> idx(static_cast<std::size_t>(dim), 0);
  Vector point(dim);
  std::function<double(int)> inner;
  // Optimal value over coordinates c.. with coordinates < c fixed in `point`.
  inner = [&](int c) -> double {
    if (c == dim) return sign * g(point);
    auto f = [&](long long k) {
      point(c) = grid_point(grid, k);
      return inner(c + 1);
    };
    const long long best = ternary_argmin(last, f);
    return f(best);
  };
  if (dim == 0) return idx;
  for (int c = 0; c < dim; ++c) {
    auto f = [&](long long k) {
      point(c) = grid_point(grid, k);
      return inner(c + 1);
    };
    idx[static_cast<std::size_t>(c)] = ternary_argmin(last, f);
    point(c) = grid_point(grid, idx[static_cast<std::size_t>(c)]);
  }
  return idx;
}

Vector to_point(const std::vector<long long>& idx, const GridSpec& grid) {
  Vector v(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) v(static_cast<Eigen::Index>(c)) = grid_point(grid, idx[c]);
  return v;
}

bool on_boundary(const std::vector<long long>& idx, const GridSpec& grid) {
  for (long long k : idx)
    if (k == 0 || k == grid.count() - 1) return true;
  return false;
}

// Pr(ξ_k = l | ξ_{k−1} = prev) or the stationary law when prev < 0.
double outcome_probability(const ChannelBank& bank, long long prev, std::uint32_t l) {
  double p = 1.0;
  for (int h = 0; h < bank.size(); ++h) {
    const auto& ch = bank.channels[static_cast<std::size_t>(h)];
    double success;
    if (prev < 0) {
      success = ch.recover / (1.0 + ch.recover - ch.stay_good);
    } else {
      success = bit(static_cast<std::uint32_t>(prev), h) ? ch.stay_good : ch.recover;
    }
    p *= bit(l, h) ? success : 1.0 - success;
  }
  return p;
}

}  // namespace

double stage_functional(const MjlsModel& model, double gamma, int mode,
                        const std::vector<double>& dist, const std::vector<Matrix>& coupled,
                        const Vector& x, const Vector& u, const Vector& w) {
  const ModeData& md = model.mode(mode);
  double h = -gamma * gamma * w.squaredNorm();
  for (std::size_t l = 0; l < dist.size(); ++l) {
    if (dist[l] == 0.0) continue;
    const Vector ua = masked(u, static_cast<std::uint32_t>(l));
    const Vector z = md.C * x + md.D * ua;
    const Vector next = md.A * x + md.B * ua + md.D1 * w;
    h += dist[l] * (z.squaredNorm() + next.dot(coupled[l] * next));
  }
  return h;
}

GridSaddle grid_saddle(const MjlsModel& model, double gamma, int mode,
                       const std::vector<double>& dist, const std::vector<Matrix>& coupled,
                       const Vector& x, const GridSpec& grid_u, const GridSpec& grid_w) {
  const int m = model.input_dim(), s = model.disturbance_dim();
  if (m > 2 || s > 2) throw std::invalid_argument("grid_saddle handles at most 2-dimensional u and w");
  grid_u.check(m);
  grid_w.check(s);

  auto H = [&](const Vector& u, const Vector& w) {
    return stage_functional(model, gamma, mode, dist, coupled, x, u, w);
  };
  auto worst_w = [&](const Vector& u) {
    return nested_search(s, grid_w, -1.0, [&](const Vector& w) { return H(u, w); });
  };
  auto upper_value = [&](const Vector& u) { return H(u, to_point(worst_w(u), grid_w)); };

  const auto u_idx = nested_search(m, grid_u, 1.0, upper_value);
  GridSaddle out;
  out.u = to_point(u_idx, grid_u);
  const auto w_idx = worst_w(out.u);
  out.w = to_point(w_idx, grid_w);
  out.value = H(out.u, out.w);
  if (on_boundary(u_idx, grid_u) || on_boundary(w_idx, grid_w))
    throw GridBoundaryError("saddle point on the grid boundary");
  return out;
}

double enumerate_value(const MjlsModel& model, const FiniteHorizonSolution& solution,
                       const Vector& x0, int r0) {
  const int N = solution.horizon;
  const int M = model.num_modes();
  const int m = model.input_dim();
  const std::uint32_t outcomes = 1U << m;
  if (N < 1 || N > 4) throw std::invalid_argument("enumerate_value handles horizons 1..4");
  if (std::pow(static_cast<double>(M) * outcomes, N) > 1e5)
    throw std::invalid_argument("outcome tree exceeds 1e5 leaves");
  if (!solution.feasible()) throw std::invalid_argument("solution is infeasible");

  const double g2 = solution.gamma * solution.gamma;
  const Matrix& T = model.chain().transition;
  const Matrix& W = model.terminal_weight();

  std::function<double(int, int, long long, const Vector&)> expand;
  expand = [&](int k, int mode, long long prev, const Vector& x) -> double {
    if (k == N) return x.dot(W * x);
    const Prior prior = prev < 0 ? Prior{Stationary{}} : Prior{OutcomeIndex{static_cast<std::uint32_t>(prev)}};
    const FeedbackGains g = controller_gain(solution, k, mode, prior);
    const Vector u = -g.control * x;
    const Vector w = g.disturbance * x;
    const ModeData& md = model.mode(mode);
    double acc = 0.0;
    for (std::uint32_t l = 0; l < outcomes; ++l) {
      const double pl = outcome_probability(model.bank(), prev, l);
      if (pl == 0.0) continue;
      const Vector ua = masked(u, l);
      const Vector z = md.C * x + md.D * ua;
      const Vector next = md.A * x + md.B * ua + md.D1 * w;
      double branch = z.squaredNorm() - g2 * w.squaredNorm();
      for (int d = 0; d < M; ++d) {
        if (T(mode, d) == 0.0) continue;
        branch += T(mode, d) * expand(k + 1, d, l, next);
      }
      acc += pl * branch;
    }
    return acc;
  };
  return expand(0, r0, -1, x0);
}

Matrix classical_hinf_step(const Matrix& A, const Matrix& B, const Matrix& D1, const Matrix& Q,
                           const Matrix& R, double gamma, const Matrix& P_next) {
  const Eigen::Index m = B.cols(), s = D1.cols();
  const Matrix theta = gamma * gamma * Matrix::Identity(s, s) - D1.transpose() * P_next * D1;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (theta + theta.transpose()), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("gamma^2 I - D1' P D1 is not positive definite");

  Matrix G(A.rows(), m + s);
  G << B, D1;
  Matrix J = Matrix::Zero(m + s, m + s);
  J.topLeftCorner(m, m) = R;
  J.bottomRightCorner(s, s) = -gamma * gamma * Matrix::Identity(s, s);
  const Matrix S = J + G.transpose() * P_next * G;
  const Matrix K = S.fullPivLu().solve(G.transpose() * P_next * A);
  const Matrix P = Q + A.transpose() * P_next * A - A.transpose() * P_next * G * K;
  return 0.5 * (P + P.transpose());
}

}  // namespace mjls::oracle
