#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mjls/channels.hpp"
#include "mjls/linalg.hpp"
#include "mjls/model.hpp"

namespace mjls {

// Backward recursion for the zero-sum game
//
//   min_u max_w  E[ ‖x_N‖²_W + Σ_k ‖z_k‖² − γ²‖w_k‖² ]
//
// over a Markov jump linear system whose actuator commands cross independent
// Gilbert–Elliott channels with acknowledgments. The value function at stage
// k ≥ 1 is x_kᵀ Ξ_k(r_k, j) x_k where j is the outcome index of the previous
// stage; at stage 0 nothing is known about the channels and the stationary
// outcome law is used instead.
//
// Per (mode i, prior j) a stage is evaluated in the order
//   dist → 𝒳 → Θ, Λ → Ψ → Γ → Ξ
// with
//   𝒳(l)  = Σ_d p_id Ξ_{k+1}(d, l)
//   Θ     = γ²I − D1ᵀ L(𝒳) D1
//   Λ     = L( 𝒩(l) [R + Bᵀ𝒳(l)B] 𝒩(l) )
//   L(𝒯)  = L( 𝒩(l) Bᵀ 𝒳(l) )
//   Ψ     = [Θ + D1ᵀL(𝒯)ᵀΛ⁻¹L(𝒯)D1]⁻¹ D1ᵀ[L(𝒳) − L(𝒯)ᵀΛ⁻¹L(𝒯)] A
//   Γ     = Λ⁻¹ L(𝒯) (A + D1Ψ)
//   Ξ     = W(i) + ΓᵀL(𝒬)Γ − γ²ΨᵀΨ + Σ_l P(l) F(l)ᵀ 𝒳(l) F(l),
//           F(l) = A − B𝒩(l)Γ + D1Ψ,  𝒬(l) = 𝒩(l) R 𝒩(l)
// where L(·) is the expectation under the stage's outcome distribution.
// The saddle-point policies are u* = −Γx and w* = Ψx.

struct SolverOptions {
  double tol = 1e-9;                // fixed-point max-abs residual
  int max_iter = 10000;
  double divergence_bound = 1e12;   // max-abs entry of Ξ
  int workers = 1;                  // threads for the (i, j) grid
};

enum class StageIssue {
  None,
  ThetaNotPositive,      // γ below the saddle-point threshold
  LambdaIllConditioned,  // cond(Λ) > 1e12
  SaddleIllConditioned,  // cond of the bracketed matrix in Ψ > 1e12
  NonFinite,
};

std::string to_string(StageIssue issue);

// Thrown when Λ is not positive definite, which validation should exclude.
class ConfigurationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct StageQuantities {
  Matrix theta;   // s×s
  Matrix lambda;  // m×m
  Matrix psi;     // s×n, empty unless feasible
  Matrix gamma;   // m×n, empty unless feasible
  StageIssue issue = StageIssue::None;

  bool feasible() const { return issue == StageIssue::None; }
};

struct StageEntry {
  Matrix xi;      // n×n value matrix
  Matrix gamma;   // control gain, u* = −Γx
  Matrix psi;     // disturbance gain, w* = Ψx
  Matrix theta;
  Matrix lambda;
  StageIssue issue = StageIssue::None;

  bool feasible() const { return issue == StageIssue::None; }
};

struct StageFailure {
  int stage = 0;  // stage index k (finite horizon) or iteration (fixed point)
  int mode = 0;   // 0-based
  OutcomeIndex outcome;
  StageIssue issue = StageIssue::None;
};

// One stage of the recursion over the (mode, prior outcome) grid.
class StageSolution {
 public:
  StageSolution() = default;
  StageSolution(int num_modes, int num_outcomes);

  StageEntry& at(int mode, OutcomeIndex j);
  const StageEntry& at(int mode, OutcomeIndex j) const;

  int num_modes() const { return num_modes_; }
  int num_outcomes() const { return num_outcomes_; }
  bool empty() const { return entries_.empty(); }
  bool feasible() const;
  // First infeasible entry in (i, j) order.
  std::optional<StageFailure> first_failure(int stage) const;
  // Largest |Ξ| entry over the grid.
  double max_abs_value() const;

  const std::vector<StageEntry>& entries() const { return entries_; }

 private:
  int num_modes_ = 0;
  int num_outcomes_ = 0;
  std::vector<StageEntry> entries_;
};

// Ξ_{N,N}(i, j) = W for all (i, j); gains zero.
StageSolution terminal_stage(const MjlsModel& model);

// 𝒳(i, l) = Σ_d p_id Ξ(d, l) for every l.
std::vector<Matrix> coupled_expectation(const StageSolution& next, const MarkovChain& chain,
                                        int mode);

StageQuantities stage_quantities(const MjlsModel& model, double gamma, int mode,
                                 const ChannelOutcomeDistribution& dist,
                                 const std::vector<Matrix>& coupled);

// Full entry (quantities plus Ξ) for one (mode, distribution).
StageEntry stage_entry(const MjlsModel& model, double gamma, int mode,
                       const ChannelOutcomeDistribution& dist,
                       const std::vector<Matrix>& coupled);

enum class PriorKind {
  Conditional,  // stage k ≥ 1: distribution 𝒫^j
  Stationary,   // stage 0: distribution 𝒫̂ for every j
};

// One backward step Ξ_{k+1} → Ξ_k. Entries are symmetrized. Any infeasible
// entry makes the whole stage infeasible.
StageSolution backward_step(const MjlsModel& model, double gamma, const StageSolution& next,
                            PriorKind kind = PriorKind::Conditional, int workers = 1);

struct FiniteHorizonSolution {
  double gamma = 0.0;
  int horizon = 0;
  std::vector<StageSolution> stages;  // stages[k], k = 0..N; empty when not reached
  std::vector<Matrix> xi_hat;         // Ξ̂_0(i), filled when feasible
  std::optional<StageFailure> failure;

  bool feasible() const { return !failure.has_value(); }
  const StageSolution& stage(int k) const { return stages.at(static_cast<std::size_t>(k)); }
  // x0ᵀ Ξ̂_0(r0) x0 (r0 0-based).
  double game_value(const Vector& x0, int r0) const;
};

// Stages N−1 .. 1 use the conditional outcome laws, stage 0 the stationary
// law. Stops at the first infeasible stage and records it.
FiniteHorizonSolution solve_finite_horizon(const MjlsModel& model, double gamma, int horizon,
                                           const SolverOptions& options = {});

// J_c = x0ᵀ Ξ̂_{0,c}(r0) x0 for c = 1 .. horizon, from one backward sweep.
struct ValueSeries {
  std::vector<double> costs;  // costs[c-1] = J_c
  std::optional<StageFailure> failure;  // stage = horizon c that failed
  bool diverged = false;                // Ξ exceeded the divergence bound
};

ValueSeries value_series(const MjlsModel& model, double gamma, int horizon, const Vector& x0,
                         int r0, const SolverOptions& options = {});

enum class FixedPointStatus { Converged, Diverged, Infeasible, Indeterminate };

std::string to_string(FixedPointStatus status);

struct FixedPointSolution {
  double gamma = 0.0;
  StageSolution bar;         // Ξ̄, Γ̄, Ψ̄, Θ̄, Λ̄ indexed by (i, j); used for k ≥ 1
  std::vector<StageEntry> hat;  // Ξ̄̂, Γ̄̂, Ψ̄̂ per mode; used for k = 0
  int iterations = 0;
  double residual = 0.0;

  double game_value(const Vector& x0, int r0) const;
};

struct InfiniteHorizonResult {
  FixedPointStatus status = FixedPointStatus::Indeterminate;
  std::optional<FixedPointSolution> solution;  // set iff Converged
  int iterations = 0;
  double residual = 0.0;
  double max_abs_value = 0.0;
  std::optional<StageFailure> failure;  // set iff Infeasible

  bool converged() const { return status == FixedPointStatus::Converged; }
};

// Iterates backward_step from Ξ = W until the max-abs change drops below
// options.tol (Converged), some |Ξ| entry exceeds options.divergence_bound
// (Diverged), some Θ loses definiteness (Infeasible), or options.max_iter is
// spent (Indeterminate).
InfiniteHorizonResult solve_infinite_horizon(const MjlsModel& model, double gamma,
                                             const SolverOptions& options = {});

struct FeedbackGains {
  Matrix control;      // Γ̃: u = −Γ̃ x
  Matrix disturbance;  // Ψ̃: w = Ψ̃ x
};

// Stage 0 (or a stationary prior on the fixed point) returns the hatted gains.
// Throws std::domain_error for stages outside [0, N−1] or a stationary prior
// at k ≥ 1 of a finite-horizon solution.
FeedbackGains controller_gain(const FiniteHorizonSolution& solution, int stage, int mode,
                              const Prior& prior);
FeedbackGains controller_gain(const FixedPointSolution& solution, int stage, int mode,
                              const Prior& prior);

}  // namespace mjls
