#include "mjls/analysis.hpp"

#include <deque>
#include <stdexcept>

#include "mjls/parallel.hpp"

namespace mjls {

Matrix jump_observability_matrix(const MjlsModel& model, std::span<const int> path) {
  const int n = model.state_dim();
  const int p = model.output_dim();
  Matrix stacked(static_cast<Eigen::Index>(p) * static_cast<Eigen::Index>(path.size()), n);
  Matrix transition = Matrix::Identity(n, n);
  for (std::size_t t = 0; t < path.size(); ++t) {
    const ModeData& md = model.mode(path[t]);
    stacked.middleRows(static_cast<Eigen::Index>(t) * p, p) = md.C * transition;
    transition = md.A * transition;
  }
  return stacked;
}

ObservabilityReport weak_observability(const MjlsModel& model, int max_len) {
  const int n = model.state_dim();
  const int M = model.num_modes();
  if (max_len <= 0) max_len = n * M;
  ObservabilityReport report;
  report.max_length_searched = max_len;

  std::deque<std::vector<int>> frontier;
  for (int i = 0; i < M; ++i) frontier.push_back({i});
  while (!frontier.empty()) {
    std::vector<int> path = std::move(frontier.front());
    frontier.pop_front();
    const int rank = numerical_rank(jump_observability_matrix(model, path));
    report.best_rank = std::max(report.best_rank, rank);
    if (rank == n) {
      report.observable = true;
      report.witness_path = std::move(path);
      return report;
    }
    if (static_cast<int>(path.size()) >= max_len) continue;
    for (int d = 0; d < M; ++d) {
      if (model.chain().transition(path.back(), d) > 0.0) {
        auto extended = path;
        extended.push_back(d);
        frontier.push_back(std::move(extended));
      }
    }
  }
  return report;
}

std::string to_string(GammaSearchStatus status) {
  switch (status) {
    case GammaSearchStatus::Found: return "found";
    case GammaSearchStatus::NoFiniteGamma: return "no_finite_gamma";
    case GammaSearchStatus::InvalidLowerBracket: return "invalid_lower_bracket";
  }
  return "unknown";
}

bool disturbance_matrices_invertible(const MjlsModel& model) {
  for (const auto& md : model.modes()) {
    if (md.D1.rows() != md.D1.cols() || numerical_rank(md.D1) != md.D1.rows()) return false;
  }
  return true;
}

BracketStep probe_attenuation(const MjlsModel& model, double gamma,
                              const GammaSearchConfig& config) {
  SolverOptions options = config.solver;
  options.max_iter = config.horizon_cap;
  const auto result = solve_infinite_horizon(model, gamma, options);
  BracketStep step;
  step.probe = gamma;
  step.outcome = result.status;
  step.iterations = result.iterations;
  step.predicate = result.converged() ||
                   (result.status == FixedPointStatus::Indeterminate &&
                    disturbance_matrices_invertible(model));
  return step;
}

GammaSearchResult gamma_critical(const MjlsModel& model, const GammaSearchConfig& config) {
  if (!(config.lo > 0.0) || !(config.hi > config.lo) || !(config.tol > 0.0))
    throw std::domain_error("gamma search needs 0 < lo < hi and tol > 0");
  GammaSearchResult out;
  out.theta_only_predicate = disturbance_matrices_invertible(model);
  double lo = config.lo;
  double hi = config.hi;

  BracketStep at_lo = probe_attenuation(model, lo, config);
  at_lo.lo = lo;
  at_lo.hi = hi;
  out.log.push_back(at_lo);
  if (at_lo.predicate) {
    out.status = GammaSearchStatus::InvalidLowerBracket;
    out.lo = lo;
    out.hi = hi;
    return out;
  }

  for (;;) {
    BracketStep at_hi = probe_attenuation(model, hi, config);
    at_hi.lo = lo;
    at_hi.hi = hi;
    out.log.push_back(at_hi);
    if (at_hi.predicate) break;
    lo = hi;  // predicate false here, so hi is a valid lower bracket
    if (hi >= config.hi_cap) {
      out.status = GammaSearchStatus::NoFiniteGamma;
      out.lo = lo;
      out.hi = hi;
      return out;
    }
    hi = std::min(2.0 * hi, config.hi_cap);
  }

  while (hi - lo >= config.tol) {
    const double mid = 0.5 * (lo + hi);
    BracketStep step = probe_attenuation(model, mid, config);
    step.lo = lo;
    step.hi = hi;
    out.log.push_back(step);
    if (step.predicate) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.status = GammaSearchStatus::Found;
  out.gamma_c = hi;
  out.lo = lo;
  out.hi = hi;
  return out;
}

std::vector<SweepRow> sweep(const MjlsModel& model, SweepParameter parameter,
                            std::span<const double> grid, const GammaSearchConfig& config,
                            int workers) {
  if (parameter.channel < 0 || parameter.channel >= model.bank().size())
    throw std::domain_error("sweep channel out of range");
  for (double v : grid) {
    if (!(v > 0.0 && v <= 1.0)) throw std::domain_error("sweep grid values must lie in (0, 1]");
  }
  std::vector<SweepRow> rows(grid.size());
  // Each point is its own sequential bisection; only points run in parallel.
  GammaSearchConfig point_config = config;
  point_config.solver.workers = 1;
  parallel_for(grid.size(), workers, [&](std::size_t idx) {
    ChannelBank bank = model.bank();
    auto& ch = bank.channels[static_cast<std::size_t>(parameter.channel)];
    (parameter.field == ChannelField::StayGood ? ch.stay_good : ch.recover) = grid[idx];
    rows[idx].value = grid[idx];
    rows[idx].result = gamma_critical(model.with_bank(std::move(bank)), point_config);
  });
  return rows;
}

}  // namespace mjls
