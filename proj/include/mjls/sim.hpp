#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "mjls/channels.hpp"
#include "mjls/model.hpp"
#include "mjls/riccati.hpp"

namespace mjls {

// Per-trial random stream. Trial t of a run seeded with s draws from
// std::mt19937_64 seeded with a SplitMix64 mix of (s, t), so a trial's draws
// do not depend on how many trials run or on which thread runs them.
class TrialRng {
 public:
  TrialRng(std::uint64_t seed, std::uint64_t trial);

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial);

 private:
  std::mt19937_64 engine_;
};

struct ZeroDisturbance {};

// w_k = samples[k] for k < samples.size(), zero afterwards.
struct WaveformDisturbance {
  std::vector<Vector> samples;
};

// w_k = Ψ̃_k x_k from the same gain schedule as the controller.
struct WorstCaseDisturbance {};

using DisturbancePolicy = std::variant<ZeroDisturbance, WaveformDisturbance, WorstCaseDisturbance>;

std::string describe(const DisturbancePolicy& policy);

// sin(frequency·π·k)·cos(frequency·π·k)·exp(−decay·k) in every component.
WaveformDisturbance decaying_sinusoid(int steps, int dim, double frequency = 0.2,
                                      double decay = 0.5);

// What an actuator applies when its packet is lost.
enum class LossStrategy {
  ZeroInput,  // uᵃ = ξu
  HoldInput,  // lost channels repeat their last applied value (comparison only)
};

std::string to_string(LossStrategy strategy);

// Controller and worst-case disturbance gains keyed by (k, r_k, ξ_{k−1}).
class GainSchedule {
 public:
  explicit GainSchedule(FixedPointSolution solution);
  explicit GainSchedule(FiniteHorizonSolution solution);

  FeedbackGains at(int stage, int mode, const Prior& prior) const;
  // Last usable stage + 1 for finite-horizon schedules.
  std::optional<int> horizon() const;
  double gamma() const;

 private:
  std::variant<FixedPointSolution, FiniteHorizonSolution> source_;
};

struct TrajectoryStep {
  int mode = 0;           // r_k, 0-based
  OutcomeIndex outcome;   // ξ_k
  Vector state;           // x_k
  Vector command;         // u_k
  Vector applied;         // uᵃ_k
  Vector disturbance;     // w_k
  Vector output;          // z_k
};

struct TrajectoryRecord {
  std::vector<TrajectoryStep> steps;  // k = 0 .. K−1
  Vector final_state;                 // x_K
};

struct SimulationConfig {
  Vector x0;
  int r0 = 0;   // 0-based
  int steps = 60;
  std::uint64_t seed = 0;
  LossStrategy loss = LossStrategy::ZeroInput;
};

// One closed-loop run. Per step the draw order is: channels 1..m for ξ_k
// (stationary law at k = 0, conditional on ξ_{k−1} afterwards), then r_{k+1}
// by inverse CDF over row r_k of the transition matrix.
TrajectoryRecord simulate(const MjlsModel& model, const GainSchedule& gains,
                          const DisturbancePolicy& disturbance, const SimulationConfig& config,
                          std::uint64_t trial = 0);

struct SimulationSummary {
  int trials = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  LossStrategy loss = LossStrategy::ZeroInput;
  std::vector<double> mean_square_state;        // E‖x_k‖², k = 0..K
  std::vector<double> mean_output_energy;       // E‖z_k‖², k = 0..K−1
  std::vector<double> mean_disturbance_energy;  // E‖w_k‖², k = 0..K−1
  std::vector<double> trial_output_energy;      // Σ_k ‖z_k‖² per trial
  std::vector<double> trial_disturbance_energy; // Σ_k ‖w_k‖² per trial
  std::vector<double> channel_delivery_rate;    // fraction of steps delivered, per channel

  double total_output_energy() const;
  double total_disturbance_energy() const;
  // (Σ_k E‖z_k‖²) / (Σ_k E‖w_k‖²); empty when the denominator is zero.
  std::optional<double> empirical_gain() const;
};

// Trials run in parallel and are merged in trial order.
SimulationSummary monte_carlo(const MjlsModel& model, const GainSchedule& gains,
                              const DisturbancePolicy& disturbance, const SimulationConfig& config,
                              int trials, int workers = 1);

// Statistical form of Σ E‖z‖² ≤ γ² Σ E‖w‖²: the per-trial excess
// Σ‖z‖² − γ²Σ‖w‖² must have mean ≤ num_se standard errors.
struct L2Certificate {
  double output_energy = 0.0;
  double disturbance_energy = 0.0;
  double mean_excess = 0.0;
  double standard_error = 0.0;
  double margin = 0.0;
  std::optional<double> empirical_gain;  // ratio of the two energies
  bool holds = false;
};

L2Certificate l2_gain_certificate(const SimulationSummary& summary, double gamma,
                                  double num_se = 3.0);

}  // namespace mjls
