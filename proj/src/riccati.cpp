#include "mjls/riccati.hpp"

#include <cmath>
#include <stdexcept>

#include "mjls/parallel.hpp"

namespace mjls {

std::string to_string(StageIssue issue) {
  switch (issue) {
    case StageIssue::None: return "ok";
    case StageIssue::ThetaNotPositive: return "theta_not_positive_definite";
    case StageIssue::LambdaIllConditioned: return "lambda_ill_conditioned";
    case StageIssue::SaddleIllConditioned: return "saddle_ill_conditioned";
    case StageIssue::NonFinite: return "non_finite";
  }
  return "unknown";
}

std::string to_string(FixedPointStatus status) {
  switch (status) {
    case FixedPointStatus::Converged: return "converged";
    case FixedPointStatus::Diverged: return "diverged";
    case FixedPointStatus::Infeasible: return "infeasible";
    case FixedPointStatus::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

StageSolution::StageSolution(int num_modes, int num_outcomes)
    : num_modes_(num_modes),
      num_outcomes_(num_outcomes),
      entries_(static_cast<std::size_t>(num_modes) * static_cast<std::size_t>(num_outcomes)) {}

StageEntry& StageSolution::at(int mode, OutcomeIndex j) {
  return entries_.at(static_cast<std::size_t>(mode) * static_cast<std::size_t>(num_outcomes_) +
                     j.value);
}

const StageEntry& StageSolution::at(int mode, OutcomeIndex j) const {
  return entries_.at(static_cast<std::size_t>(mode) * static_cast<std::size_t>(num_outcomes_) +
                     j.value);
}

bool StageSolution::feasible() const {
  if (entries_.empty()) return false;
  for (const auto& e : entries_)
    if (!e.feasible()) return false;
  return true;
}

std::optional<StageFailure> StageSolution::first_failure(int stage) const {
  for (int i = 0; i < num_modes_; ++i) {
    for (int j = 0; j < num_outcomes_; ++j) {
      const OutcomeIndex idx{static_cast<std::uint32_t>(j)};
      const auto& e = at(i, idx);
      if (!e.feasible()) return StageFailure{stage, i, idx, e.issue};
    }
  }
  return std::nullopt;
}

double StageSolution::max_abs_value() const {
  double worst = 0.0;
  for (const auto& e : entries_) {
    if (e.xi.size() == 0) continue;
    const double v = e.xi.cwiseAbs().maxCoeff();
    if (!(v <= worst)) worst = v;  // propagates NaN
  }
  return worst;
}

StageSolution terminal_stage(const MjlsModel& model) {
  StageSolution stage(model.num_modes(), model.num_outcomes());
  const int n = model.state_dim(), m = model.input_dim(), s = model.disturbance_dim();
  for (int i = 0; i < model.num_modes(); ++i) {
    for (int j = 0; j < model.num_outcomes(); ++j) {
      auto& e = stage.at(i, OutcomeIndex{static_cast<std::uint32_t>(j)});
      e.xi = model.terminal_weight();
      e.gamma = Matrix::Zero(m, n);
      e.psi = Matrix::Zero(s, n);
    }
  }
  return stage;
}

std::vector<Matrix> coupled_expectation(const StageSolution& next, const MarkovChain& chain,
                                        int mode) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(next.num_outcomes()));
  for (int l = 0; l < next.num_outcomes(); ++l) {
    const OutcomeIndex idx{static_cast<std::uint32_t>(l)};
    Matrix acc = Matrix::Zero(next.at(0, idx).xi.rows(), next.at(0, idx).xi.cols());
    for (int d = 0; d < next.num_modes(); ++d) {
      const double p = chain.transition(mode, d);
      if (p != 0.0) acc += p * next.at(d, idx).xi;
    }
    out.push_back(std::move(acc));
  }
  return out;
}

namespace {

struct OutcomeAverages {
  Matrix coupled;      // L(𝒳), n×n
  Matrix cross;        // L(𝒯) = L(𝒩BᵀX), m×n
  Matrix lambda;       // L(𝒩[R + BᵀXB]𝒩), m×m
  Matrix input_cost;   // L(𝒩R𝒩), m×m
};

OutcomeAverages average_over_outcomes(const MjlsModel& model, int mode,
                                      const ChannelOutcomeDistribution& dist,
                                      const std::vector<Matrix>& coupled) {
  const ModeData& md = model.mode(mode);
  const Matrix& R = model.input_weight(mode);
  const int n = model.state_dim(), m = model.input_dim();
  OutcomeAverages avg{Matrix::Zero(n, n), Matrix::Zero(m, n), Matrix::Zero(m, m),
                      Matrix::Zero(m, m)};
  for (std::size_t l = 0; l < dist.size(); ++l) {
    const double p = dist[l];
    if (p == 0.0) continue;
    const Matrix mask = outcome_mask(OutcomeIndex{static_cast<std::uint32_t>(l)}, m);
    const Matrix& X = coupled[l];
    const Matrix btx = md.B.transpose() * X;
    avg.coupled += p * X;
    avg.cross += p * (mask * btx);
    avg.lambda += p * (mask * (R + btx * md.B) * mask);
    avg.input_cost += p * (mask * R * mask);
  }
  avg.lambda = symmetrized(avg.lambda);
  return avg;
}

StageQuantities quantities_from(const MjlsModel& model, double gamma, int mode,
                                const OutcomeAverages& avg) {
  const ModeData& md = model.mode(mode);
  const int s = model.disturbance_dim();
  StageQuantities q;
  q.theta = symmetrized(gamma * gamma * Matrix::Identity(s, s) -
                        md.D1.transpose() * avg.coupled * md.D1);
  q.lambda = avg.lambda;

  if (!q.lambda.allFinite() || !q.theta.allFinite()) {
    q.issue = StageIssue::NonFinite;
    return q;
  }
  Eigen::LLT<Matrix> lambda_llt(q.lambda);
  if (lambda_llt.info() != Eigen::Success || !is_positive_definite(q.lambda)) {
    throw ConfigurationError(
        "Λ is not positive definite; every channel needs a nonzero delivery probability");
  }
  if (spd_condition_number(q.lambda) > kMaxConditionNumber) {
    q.issue = StageIssue::LambdaIllConditioned;
    return q;
  }
  if (!is_positive_definite(q.theta)) {
    q.issue = StageIssue::ThetaNotPositive;
    return q;
  }

  // Λ⁻¹ L(𝒯)
  const Matrix lambda_inv_cross = lambda_llt.solve(avg.cross);
  const Matrix cross_d1 = avg.cross * md.D1;  // m×s
  const Matrix saddle =
      symmetrized(q.theta + cross_d1.transpose() * lambda_llt.solve(cross_d1));
  if (spd_condition_number(saddle) > kMaxConditionNumber) {
    q.issue = StageIssue::SaddleIllConditioned;
    return q;
  }
  const Matrix rhs =
      md.D1.transpose() * (avg.coupled - avg.cross.transpose() * lambda_inv_cross) * md.A;
  Eigen::LLT<Matrix> saddle_llt(saddle);
  if (saddle_llt.info() != Eigen::Success) {
    q.issue = StageIssue::SaddleIllConditioned;
    return q;
  }
  q.psi = saddle_llt.solve(rhs);
  q.gamma = lambda_llt.solve(avg.cross * (md.A + md.D1 * q.psi));
  if (!q.psi.allFinite() || !q.gamma.allFinite()) q.issue = StageIssue::NonFinite;
  return q;
}

}  // namespace

StageQuantities stage_quantities(const MjlsModel& model, double gamma, int mode,
                                 const ChannelOutcomeDistribution& dist,
                                 const std::vector<Matrix>& coupled) {
  return quantities_from(model, gamma, mode, average_over_outcomes(model, mode, dist, coupled));
}

StageEntry stage_entry(const MjlsModel& model, double gamma, int mode,
                       const ChannelOutcomeDistribution& dist,
                       const std::vector<Matrix>& coupled) {
  const OutcomeAverages avg = average_over_outcomes(model, mode, dist, coupled);
  StageQuantities q = quantities_from(model, gamma, mode, avg);
  StageEntry e;
  e.theta = std::move(q.theta);
  e.lambda = std::move(q.lambda);
  e.issue = q.issue;
  if (!q.feasible()) return e;

  const ModeData& md = model.mode(mode);
  const int m = model.input_dim();
  Matrix xi = model.state_weight(mode) + q.gamma.transpose() * avg.input_cost * q.gamma -
              gamma * gamma * q.psi.transpose() * q.psi;
  const Matrix open_part = md.A + md.D1 * q.psi;
  for (std::size_t l = 0; l < dist.size(); ++l) {
    const double p = dist[l];
    if (p == 0.0) continue;
    const Matrix mask = outcome_mask(OutcomeIndex{static_cast<std::uint32_t>(l)}, m);
    const Matrix closed = open_part - md.B * mask * q.gamma;
    xi += p * (closed.transpose() * coupled[l] * closed);
  }
  e.xi = symmetrized(xi);
  e.gamma = std::move(q.gamma);
  e.psi = std::move(q.psi);
  if (!e.xi.allFinite()) e.issue = StageIssue::NonFinite;
  return e;
}

StageSolution backward_step(const MjlsModel& model, double gamma, const StageSolution& next,
                            PriorKind kind, int workers) {
  const int M = model.num_modes();
  const int outcomes = model.num_outcomes();
  StageSolution stage(M, outcomes);

  std::vector<std::vector<Matrix>> coupled(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i)
    coupled[static_cast<std::size_t>(i)] = coupled_expectation(next, model.chain(), i);

  if (kind == PriorKind::Stationary) {
    const auto dist = outcome_distribution(model.bank(), Stationary{});
    parallel_for(static_cast<std::size_t>(M), workers, [&](std::size_t i) {
      const int mode = static_cast<int>(i);
      const StageEntry e = stage_entry(model, gamma, mode, dist, coupled[i]);
      for (int j = 0; j < outcomes; ++j) stage.at(mode, OutcomeIndex{static_cast<std::uint32_t>(j)}) = e;
    });
    return stage;
  }

  std::vector<ChannelOutcomeDistribution> dists;
  dists.reserve(static_cast<std::size_t>(outcomes));
  for (int j = 0; j < outcomes; ++j)
    dists.push_back(outcome_distribution(model.bank(), OutcomeIndex{static_cast<std::uint32_t>(j)}));

  const auto cells = static_cast<std::size_t>(M) * static_cast<std::size_t>(outcomes);
  parallel_for(cells, workers, [&](std::size_t cell) {
    const int mode = static_cast<int>(cell / static_cast<std::size_t>(outcomes));
    const auto j = static_cast<std::uint32_t>(cell % static_cast<std::size_t>(outcomes));
    stage.at(mode, OutcomeIndex{j}) =
        stage_entry(model, gamma, mode, dists[j], coupled[static_cast<std::size_t>(mode)]);
  });
  return stage;
}

double FiniteHorizonSolution::game_value(const Vector& x0, int r0) const {
  if (!feasible()) throw std::domain_error("game value requested from an infeasible solution");
  const Matrix& xi = xi_hat.at(static_cast<std::size_t>(r0));
  return x0.dot(xi * x0);
}

FiniteHorizonSolution solve_finite_horizon(const MjlsModel& model, double gamma, int horizon,
                                           const SolverOptions& options) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  if (horizon < 1) throw std::domain_error("horizon must be at least 1");
  FiniteHorizonSolution sol;
  sol.gamma = gamma;
  sol.horizon = horizon;
  sol.stages.resize(static_cast<std::size_t>(horizon) + 1);
  sol.stages[static_cast<std::size_t>(horizon)] = terminal_stage(model);

  for (int k = horizon - 1; k >= 0; --k) {
    const PriorKind kind = k == 0 ? PriorKind::Stationary : PriorKind::Conditional;
    StageSolution stage =
        backward_step(model, gamma, sol.stages[static_cast<std::size_t>(k) + 1], kind,
                      options.workers);
    if (auto failure = stage.first_failure(k)) {
      sol.failure = failure;
      return sol;
    }
    sol.stages[static_cast<std::size_t>(k)] = std::move(stage);
  }

  const StageSolution& first = sol.stages.front();
  for (int i = 0; i < model.num_modes(); ++i) {
    const Matrix& ref = first.at(i, OutcomeIndex{0}).xi;
    for (int j = 1; j < model.num_outcomes(); ++j) {
      if (max_abs_difference(ref, first.at(i, OutcomeIndex{static_cast<std::uint32_t>(j)}).xi) >
          1e-9)
        throw std::logic_error("stage-0 value depends on the prior outcome");
    }
    sol.xi_hat.push_back(ref);
  }
  return sol;
}

ValueSeries value_series(const MjlsModel& model, double gamma, int horizon, const Vector& x0,
                         int r0, const SolverOptions& options) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  ValueSeries out;
  StageSolution current = terminal_stage(model);
  for (int c = 1; c <= horizon; ++c) {
    // `current` holds Ξ_{1,c}; one stationary step gives Ξ̂_{0,c}.
    const StageSolution first =
        backward_step(model, gamma, current, PriorKind::Stationary, options.workers);
    if (auto failure = first.first_failure(c)) {
      out.failure = failure;
      out.diverged = failure->issue == StageIssue::NonFinite;
      return out;
    }
    const Matrix& xi = first.at(r0, OutcomeIndex{0}).xi;
    out.costs.push_back(x0.dot(xi * x0));
    if (c == horizon) break;
    current = backward_step(model, gamma, current, PriorKind::Conditional, options.workers);
    if (auto failure = current.first_failure(c + 1)) {
      out.failure = failure;
      out.diverged = failure->issue == StageIssue::NonFinite;
      return out;
    }
    if (!(current.max_abs_value() <= options.divergence_bound)) {
      out.diverged = true;
      return out;
    }
  }
  return out;
}

double FixedPointSolution::game_value(const Vector& x0, int r0) const {
  const Matrix& xi = hat.at(static_cast<std::size_t>(r0)).xi;
  return x0.dot(xi * x0);
}

InfiniteHorizonResult solve_infinite_horizon(const MjlsModel& model, double gamma,
                                             const SolverOptions& options) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  InfiniteHorizonResult result;
  StageSolution current = terminal_stage(model);

  auto fail = [&](const StageFailure& failure) {
    result.status = failure.issue == StageIssue::NonFinite ? FixedPointStatus::Diverged
                                                           : FixedPointStatus::Infeasible;
    if (result.status == FixedPointStatus::Infeasible) result.failure = failure;
    return result;
  };

  for (int it = 1; it <= options.max_iter; ++it) {
    StageSolution next = backward_step(model, gamma, current, PriorKind::Conditional,
                                       options.workers);
    result.iterations = it;
    if (auto failure = next.first_failure(it)) return fail(*failure);

    result.max_abs_value = next.max_abs_value();
    if (!(result.max_abs_value <= options.divergence_bound)) {
      result.status = FixedPointStatus::Diverged;
      return result;
    }
    double residual = 0.0;
    for (std::size_t e = 0; e < next.entries().size(); ++e) {
      residual = std::max(residual, max_abs_difference(next.entries()[e].xi,
                                                       current.entries()[e].xi));
    }
    result.residual = residual;
    current = std::move(next);
    if (residual < options.tol) break;
    if (it == options.max_iter) return result;  // Indeterminate
  }

  // Gains evaluated at the fixed point itself.
  FixedPointSolution sol;
  sol.gamma = gamma;
  sol.iterations = result.iterations;
  sol.residual = result.residual;
  sol.bar = backward_step(model, gamma, current, PriorKind::Conditional, options.workers);
  if (auto failure = sol.bar.first_failure(result.iterations + 1)) return fail(*failure);
  const StageSolution first =
      backward_step(model, gamma, current, PriorKind::Stationary, options.workers);
  if (auto failure = first.first_failure(0)) return fail(*failure);
  for (int i = 0; i < model.num_modes(); ++i) sol.hat.push_back(first.at(i, OutcomeIndex{0}));

  result.status = FixedPointStatus::Converged;
  result.solution = std::move(sol);
  return result;
}

FeedbackGains controller_gain(const FiniteHorizonSolution& solution, int stage, int mode,
                              const Prior& prior) {
  if (!solution.feasible()) throw std::domain_error("controller gain from infeasible solution");
  if (stage < 0 || stage >= solution.horizon)
    throw std::domain_error("stage " + std::to_string(stage) + " outside horizon [0, " +
                            std::to_string(solution.horizon - 1) + "]");
  const StageSolution& st = solution.stage(stage);
  if (stage == 0) {
    const auto& e = st.at(mode, OutcomeIndex{0});
    return {e.gamma, e.psi};
  }
  const auto* j = std::get_if<OutcomeIndex>(&prior);
  if (j == nullptr)
    throw std::domain_error("finite-horizon gains at k >= 1 need the previous outcome");
  if (j->value >= static_cast<std::uint32_t>(st.num_outcomes()))
    throw std::domain_error("outcome index out of range");
  const auto& e = st.at(mode, *j);
  return {e.gamma, e.psi};
}

FeedbackGains controller_gain(const FixedPointSolution& solution, int stage, int mode,
                              const Prior& prior) {
  if (stage < 0) throw std::domain_error("negative stage");
  const auto* j = std::get_if<OutcomeIndex>(&prior);
  if (stage == 0 || j == nullptr) {
    const auto& e = solution.hat.at(static_cast<std::size_t>(mode));
    return {e.gamma, e.psi};
  }
  if (j->value >= static_cast<std::uint32_t>(solution.bar.num_outcomes()))
    throw std::domain_error("outcome index out of range");
  const auto& e = solution.bar.at(mode, *j);
  return {e.gamma, e.psi};
}

}  // namespace mjls
