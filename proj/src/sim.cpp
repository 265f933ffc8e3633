#include "mjls/sim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mjls/parallel.hpp"

namespace mjls {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t TrialRng::derive_seed(std::uint64_t seed, std::uint64_t trial) {
  return splitmix64(splitmix64(seed) ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
}

TrialRng::TrialRng(std::uint64_t seed, std::uint64_t trial) : engine_(derive_seed(seed, trial)) {}

double TrialRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::string describe(const DisturbancePolicy& policy) {
  if (std::holds_alternative<ZeroDisturbance>(policy)) return "zero";
  if (std::holds_alternative<WorstCaseDisturbance>(policy)) return "worst_case";
  return "waveform";
}

WaveformDisturbance decaying_sinusoid(int steps, int dim, double frequency, double decay) {
  WaveformDisturbance out;
  for (int k = 0; k < steps; ++k) {
    const double arg = frequency * std::numbers::pi * k;
    const double v = std::sin(arg) * std::cos(arg) * std::exp(-decay * k);
    out.samples.push_back(Vector::Constant(dim, v));
  }
  return out;
}

std::string to_string(LossStrategy strategy) {
  return strategy == LossStrategy::ZeroInput ? "zero_input" : "hold_input";
}

GainSchedule::GainSchedule(FixedPointSolution solution) : source_(std::move(solution)) {}

GainSchedule::GainSchedule(FiniteHorizonSolution solution) : source_(std::move(solution)) {
  if (!std::get<FiniteHorizonSolution>(source_).feasible())
    throw std::domain_error("gain schedule from an infeasible finite-horizon solution");
}

FeedbackGains GainSchedule::at(int stage, int mode, const Prior& prior) const {
  return std::visit([&](const auto& sol) { return controller_gain(sol, stage, mode, prior); },
                    source_);
}

std::optional<int> GainSchedule::horizon() const {
  if (const auto* f = std::get_if<FiniteHorizonSolution>(&source_)) return f->horizon;
  return std::nullopt;
}

double GainSchedule::gamma() const {
  return std::visit([](const auto& sol) { return sol.gamma; }, source_);
}

TrajectoryRecord simulate(const MjlsModel& model, const GainSchedule& gains,
                          const DisturbancePolicy& disturbance, const SimulationConfig& config,
                          std::uint64_t trial) {
  const int n = model.state_dim(), m = model.input_dim(), s = model.disturbance_dim();
  const int M = model.num_modes();
  if (config.steps < 1) throw std::domain_error("simulation needs at least one step");
  if (config.x0.size() != n) throw DimensionError("x0 has wrong dimension");
  if (config.r0 < 0 || config.r0 >= M) throw std::domain_error("initial mode out of range");
  if (auto h = gains.horizon(); h && config.steps > *h)
    throw std::domain_error("simulation longer than the finite-horizon gain schedule");

  TrialRng rng(config.seed, trial);
  const auto& bank = model.bank();
  const Matrix& T = model.chain().transition;

  TrajectoryRecord record;
  record.steps.reserve(static_cast<std::size_t>(config.steps));
  Vector x = config.x0;
  int mode = config.r0;
  std::optional<OutcomeIndex> previous;
  Vector held = Vector::Zero(m);

  for (int k = 0; k < config.steps; ++k) {
    const Prior prior = previous ? Prior{*previous} : Prior{Stationary{}};
    const FeedbackGains g = gains.at(k, mode, prior);

    TrajectoryStep step;
    step.mode = mode;
    step.state = x;
    step.command = -g.control * x;

    if (std::holds_alternative<WorstCaseDisturbance>(disturbance)) {
      step.disturbance = g.disturbance * x;
    } else if (const auto* wf = std::get_if<WaveformDisturbance>(&disturbance);
               wf != nullptr && k < static_cast<int>(wf->samples.size())) {
      step.disturbance = wf->samples[static_cast<std::size_t>(k)];
      if (step.disturbance.size() != s) throw DimensionError("waveform sample has wrong dimension");
    } else {
      step.disturbance = Vector::Zero(s);
    }

    const auto success = success_probabilities(bank, prior);
    std::uint32_t bits = 0;
    for (int h = 0; h < m; ++h)
      if (rng.uniform() < success[static_cast<std::size_t>(h)]) bits |= 1U << h;
    step.outcome = OutcomeIndex{bits};

    step.applied = Vector::Zero(m);
    for (int h = 0; h < m; ++h) {
      if (step.outcome.delivered(h)) {
        step.applied(h) = step.command(h);
      } else if (config.loss == LossStrategy::HoldInput) {
        step.applied(h) = held(h);
      }
    }
    held = step.applied;

    const ModeData& md = model.mode(mode);
    step.output = md.C * x + md.D * step.applied;
    x = md.A * x + md.B * step.applied + md.D1 * step.disturbance;

    const double draw = rng.uniform();
    double cumulative = 0.0;
    int next_mode = -1;
    for (int d = 0; d < M; ++d) {
      cumulative += T(mode, d);
      if (T(mode, d) > 0.0) {
        next_mode = d;
        if (draw < cumulative) break;
      }
    }
    mode = next_mode;
    previous = step.outcome;
    record.steps.push_back(std::move(step));
  }
  record.final_state = x;
  return record;
}

double SimulationSummary::total_output_energy() const {
  double acc = 0.0;
  for (double v : mean_output_energy) acc += v;
  return acc;
}

double SimulationSummary::total_disturbance_energy() const {
  double acc = 0.0;
  for (double v : mean_disturbance_energy) acc += v;
  return acc;
}

std::optional<double> SimulationSummary::empirical_gain() const {
  const double den = total_disturbance_energy();
  if (!(den > 0.0)) return std::nullopt;
  return total_output_energy() / den;
}

SimulationSummary monte_carlo(const MjlsModel& model, const GainSchedule& gains,
                              const DisturbancePolicy& disturbance, const SimulationConfig& config,
                              int trials, int workers) {
  if (trials < 1) throw std::domain_error("monte_carlo needs at least one trial");
  const int K = config.steps;
  const int m = model.input_dim();

  struct TrialStats {
    std::vector<double> square_state;
    std::vector<double> output_energy;
    std::vector<double> disturbance_energy;
    std::vector<int> delivered;
  };
  std::vector<TrialStats> per_trial(static_cast<std::size_t>(trials));

  parallel_for(per_trial.size(), workers, [&](std::size_t t) {
    const TrajectoryRecord rec = simulate(model, gains, disturbance, config, t);
    TrialStats& st = per_trial[t];
    st.square_state.reserve(static_cast<std::size_t>(K) + 1);
    st.delivered.assign(static_cast<std::size_t>(m), 0);
    for (const auto& step : rec.steps) {
      st.square_state.push_back(step.state.squaredNorm());
      st.output_energy.push_back(step.output.squaredNorm());
      st.disturbance_energy.push_back(step.disturbance.squaredNorm());
      for (int h = 0; h < m; ++h)
        if (step.outcome.delivered(h)) ++st.delivered[static_cast<std::size_t>(h)];
    }
    st.square_state.push_back(rec.final_state.squaredNorm());
  });

  SimulationSummary summary;
  summary.trials = trials;
  summary.steps = K;
  summary.seed = config.seed;
  summary.loss = config.loss;
  summary.mean_square_state.assign(static_cast<std::size_t>(K) + 1, 0.0);
  summary.mean_output_energy.assign(static_cast<std::size_t>(K), 0.0);
  summary.mean_disturbance_energy.assign(static_cast<std::size_t>(K), 0.0);
  std::vector<long long> delivered(static_cast<std::size_t>(m), 0);
  for (const auto& st : per_trial) {
    double z_sum = 0.0, w_sum = 0.0;
    for (std::size_t k = 0; k < st.square_state.size(); ++k)
      summary.mean_square_state[k] += st.square_state[k];
    for (std::size_t k = 0; k < st.output_energy.size(); ++k) {
      summary.mean_output_energy[k] += st.output_energy[k];
      summary.mean_disturbance_energy[k] += st.disturbance_energy[k];
      z_sum += st.output_energy[k];
      w_sum += st.disturbance_energy[k];
    }
    summary.trial_output_energy.push_back(z_sum);
    summary.trial_disturbance_energy.push_back(w_sum);
    for (int h = 0; h < m; ++h)
      delivered[static_cast<std::size_t>(h)] += st.delivered[static_cast<std::size_t>(h)];
  }
  const double inv = 1.0 / trials;
  for (double& v : summary.mean_square_state) v *= inv;
  for (double& v : summary.mean_output_energy) v *= inv;
  for (double& v : summary.mean_disturbance_energy) v *= inv;
  for (int h = 0; h < m; ++h) {
    summary.channel_delivery_rate.push_back(static_cast<double>(delivered[static_cast<std::size_t>(h)]) /
                                            (static_cast<double>(trials) * K));
  }
  return summary;
}

L2Certificate l2_gain_certificate(const SimulationSummary& summary, double gamma, double num_se) {
  L2Certificate cert;
  const auto trials = summary.trial_output_energy.size();
  if (trials == 0) throw std::domain_error("empty simulation summary");
  const double g2 = gamma * gamma;
  std::vector<double> excess(trials);
  double mean = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    excess[t] = summary.trial_output_energy[t] - g2 * summary.trial_disturbance_energy[t];
    mean += excess[t];
  }
  mean /= static_cast<double>(trials);
  double var = 0.0;
  for (double e : excess) var += (e - mean) * (e - mean);
  var = trials > 1 ? var / static_cast<double>(trials - 1) : 0.0;

  cert.output_energy = summary.total_output_energy();
  cert.disturbance_energy = summary.total_disturbance_energy();
  cert.mean_excess = mean;
  cert.standard_error = std::sqrt(var / static_cast<double>(trials));
  cert.margin = num_se * cert.standard_error;
  cert.empirical_gain = summary.empirical_gain();
  // Tiny absolute slack absorbs rounding when every trial is exactly zero.
  cert.holds = mean <= cert.margin + 1e-12 * (1.0 + cert.output_energy);
  return cert;
}

}  // namespace mjls
