#include "mjls/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "mjls/analysis.hpp"
#include "mjls/riccati.hpp"
#include "mjls/scenario.hpp"
#include "mjls/sim.hpp"

namespace mjls::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string command;
  std::string scenario;
  std::optional<double> gamma;
  std::optional<int> horizon;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out;
  int threads = 1;
  int max_channels = 16;
};

// Reported to the user and mapped to exit status 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw InputError("cannot write " + path.string());
    out_ << header << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << fields, first = false), ...);
    out_ << '\n';
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_matrix(CsvFile& csv, const std::string& stage, const char* quantity, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) csv.row(stage, quantity, r + 1, c + 1, num(m(r, c)));
}

void write_entry(CsvFile& csv, const std::string& stage, const StageEntry& e) {
  write_matrix(csv, stage, "Xi", e.xi);
  write_matrix(csv, stage, "Gamma", e.gamma);
  write_matrix(csv, stage, "Psi", e.psi);
  write_matrix(csv, stage, "Theta", e.theta);
  write_matrix(csv, stage, "Lambda", e.lambda);
}

const char* kGainsHeader = "stage,quantity,row,col,value";

fs::path gains_path(const fs::path& dir, int mode, std::uint32_t j) {
  return dir / ("gains_" + std::to_string(mode + 1) + "_" + std::to_string(j) + ".csv");
}

std::string describe_failure(const StageFailure& f, const char* stage_word) {
  return std::string(stage_word) + " " + std::to_string(f.stage) + ", mode " +
         std::to_string(f.mode + 1) + ", outcome " + std::to_string(f.outcome.value) + ": " +
         to_string(f.issue);
}

std::string status_word(FixedPointStatus s) { return to_string(s); }

class Runner {
 public:
  Runner(const Options& opt, Scenario sc, std::ostream& out, std::ostream& err)
      : opt_(opt), sc_(std::move(sc)), out_(out), err_(err) {
    sc_.game.solver.workers = opt_.threads;
    if (opt_.horizon) sc_.game.horizon = *opt_.horizon;
    if (opt_.gamma) sc_.game.gamma = *opt_.gamma;
    if (opt_.tol) {
      if (opt_.command == "gamma-c" || opt_.command == "sweep") sc_.game.search.tol = *opt_.tol;
      else sc_.game.solver.tol = *opt_.tol;
    }
    sc_.game.search.solver = sc_.game.solver;
    if (sc_.simulation) {
      if (opt_.seed) sc_.simulation->seed = *opt_.seed;
      if (opt_.trials) sc_.simulation->trials = *opt_.trials;
    }
    dir_ = opt_.out ? fs::path(*opt_.out) : fs::path(sc_.output_directory);
  }

  int dispatch() {
    if (opt_.command == "check") return check();
    require_valid();
    fs::create_directories(dir_);
    if (opt_.command == "solve") return solve();
    if (opt_.command == "gamma-c") return gamma_c();
    if (opt_.command == "sweep") return sweep_cmd();
    return simulate_cmd();
  }

 private:
  void require_valid() {
    const ValidationReport report = validate_model(sc_.model);
    if (report.passed()) return;
    std::string msg = "model fails validation:";
    for (const auto& f : report.findings)
      if (!f.passed) msg += "\n  " + f.name + ": " + f.detail;
    throw InputError(msg);
  }

  int check() {
    const ValidationReport report = validate_model(sc_.model);
    for (const auto& f : report.findings)
      out_ << (f.passed ? "pass " : "FAIL ") << f.name << (f.detail.empty() ? "" : "  " + f.detail) << '\n';
    const ObservabilityReport obs = weak_observability(sc_.model);
    out_ << "weakly observable: " << (obs.observable ? "yes" : "not established") << " (searched paths up to length "
         << obs.max_length_searched << ", best rank " << obs.best_rank << ")\n";
    if (obs.observable) {
      out_ << "witness path:";
      for (int r : obs.witness_path) out_ << ' ' << r + 1;
      out_ << '\n';
    }
    return report.passed() ? kExitOk : kExitInputError;
  }

  // Explicit γ, or gamma_factor × γ_c.
  std::optional<double> resolve_gamma() {
    if (sc_.game.gamma) return sc_.game.gamma;
    const GammaSearchResult r = gamma_critical(sc_.model, sc_.game.search);
    if (!r.gamma_c) {
      err_ << "cannot pick gamma: gamma_c search ended with " << to_string(r.status) << '\n';
      return std::nullopt;
    }
    const double g = sc_.game.gamma_factor * *r.gamma_c;
    out_ << "gamma_c = " << num(*r.gamma_c) << ", using gamma = " << num(g) << '\n';
    return g;
  }

  const SimulationSpec& need_simulation(const char* why) const {
    if (!sc_.simulation) throw InputError(std::string("scenario has no simulation section (needed for ") + why + ")");
    return *sc_.simulation;
  }

  int solve() {
    const SimulationSpec& sim = need_simulation("x0 and r0 of the value series");
    const auto gamma = resolve_gamma();
    if (!gamma) return kExitAnalytic;
    return sc_.game.horizon ? solve_finite(*gamma, *sc_.game.horizon, sim) : solve_infinite(*gamma, sim);
  }

  int solve_finite(double gamma, int N, const SimulationSpec& sim) {
    const ValueSeries series = value_series(sc_.model, gamma, N, sim.x0, sim.r0, sc_.game.solver);
    {
      CsvFile csv(dir_ / "value.csv", "horizon,cost,status");
      for (std::size_t c = 0; c < series.costs.size(); ++c) csv.row(c + 1, num(series.costs[c]), "ok");
      if (series.failure) csv.row(series.failure->stage, "", series.diverged ? "diverged" : "infeasible");
    }
    if (series.failure) {
      err_ << (series.diverged ? "value diverged at horizon " : "game infeasible at horizon ")
           << series.failure->stage << " (mode " << series.failure->mode + 1 << ", outcome "
           << series.failure->outcome.value << ": " << to_string(series.failure->issue) << ")\n";
      return kExitAnalytic;
    }

    const FiniteHorizonSolution sol = solve_finite_horizon(sc_.model, gamma, N, sc_.game.solver);
    if (!sol.feasible()) {
      err_ << "game infeasible at " << describe_failure(*sol.failure, "stage") << '\n';
      return kExitAnalytic;
    }
    for (int i = 0; i < sc_.model.num_modes(); ++i) {
      for (int j = 0; j < sc_.model.num_outcomes(); ++j) {
        CsvFile csv(gains_path(dir_, i, static_cast<std::uint32_t>(j)), kGainsHeader);
        for (int k = 0; k < N; ++k)
          write_entry(csv, std::to_string(k), sol.stage(k).at(i, OutcomeIndex{static_cast<std::uint32_t>(j)}));
      }
    }
    out_ << "J_" << N << " = " << num(sol.game_value(sim.x0, sim.r0)) << '\n';
    return kExitOk;
  }

  int solve_infinite(double gamma, const SimulationSpec& sim) {
    const InfiniteHorizonResult res = solve_infinite_horizon(sc_.model, gamma, sc_.game.solver);
    {
      CsvFile csv(dir_ / "value.csv", "horizon,cost,status");
      if (res.converged()) csv.row("inf", num(res.solution->game_value(sim.x0, sim.r0)), status_word(res.status));
      else csv.row("inf", "", status_word(res.status));
    }
    if (!res.converged()) {
      err_ << "fixed-point iteration " << status_word(res.status) << " after " << res.iterations
           << " iterations (residual " << num(res.residual) << ", max |Xi| " << num(res.max_abs_value) << ")";
      if (res.failure) err_ << "; " << describe_failure(*res.failure, "iteration");
      err_ << '\n';
      return kExitAnalytic;
    }
    const FixedPointSolution& fp = *res.solution;
    for (int i = 0; i < sc_.model.num_modes(); ++i) {
      for (int j = 0; j < sc_.model.num_outcomes(); ++j) {
        CsvFile csv(gains_path(dir_, i, static_cast<std::uint32_t>(j)), kGainsHeader);
        write_entry(csv, "0", fp.hat[static_cast<std::size_t>(i)]);
        write_entry(csv, "inf", fp.bar.at(i, OutcomeIndex{static_cast<std::uint32_t>(j)}));
      }
    }
    out_ << "converged in " << res.iterations << " iterations, J_inf = "
         << num(fp.game_value(sim.x0, sim.r0)) << '\n';
    return kExitOk;
  }

  int gamma_c() {
    const GammaSearchResult r = gamma_critical(sc_.model, sc_.game.search);
    {
      CsvFile csv(dir_ / "gamma_c.csv", "status,gamma_c,lo,hi,tol,theta_only_predicate");
      csv.row(to_string(r.status), r.gamma_c ? num(*r.gamma_c) : "", num(r.lo), num(r.hi),
              num(sc_.game.search.tol), r.theta_only_predicate ? 1 : 0);
    }
    {
      CsvFile csv(dir_ / "gamma_c_brackets.csv", "step,lo,hi,probe,predicate,outcome,iterations");
      for (std::size_t k = 0; k < r.log.size(); ++k) {
        const BracketStep& s = r.log[k];
        csv.row(k, num(s.lo), num(s.hi), num(s.probe), s.predicate ? 1 : 0, status_word(s.outcome), s.iterations);
      }
    }
    switch (r.status) {
      case GammaSearchStatus::Found:
        out_ << "gamma_c = " << num(*r.gamma_c) << '\n';
        return kExitOk;
      case GammaSearchStatus::NoFiniteGamma:
        err_ << "no finite gamma_c up to " << num(sc_.game.search.hi_cap) << '\n';
        return kExitAnalytic;
      case GammaSearchStatus::InvalidLowerBracket:
        err_ << "predicate already holds at lo = " << num(sc_.game.search.lo) << "; lower the bracket\n";
        return kExitInputError;
    }
    return kExitInputError;
  }

  int sweep_cmd() {
    if (!sc_.sweep) throw InputError("scenario has no sweep section");
    const auto rows = sweep(sc_.model, sc_.sweep->parameter, sc_.sweep->grid, sc_.game.search, opt_.threads);
    CsvFile csv(dir_ / "sweep.csv", "value,gamma_c,status");
    for (const auto& row : rows)
      csv.row(num(row.value), row.result.gamma_c ? num(*row.result.gamma_c) : "", to_string(row.result.status));
    out_ << "swept " << rows.size() << " points\n";
    return kExitOk;
  }

  int simulate_cmd() {
    const SimulationSpec& sim = need_simulation("simulate");
    const auto gamma = resolve_gamma();
    if (!gamma) return kExitAnalytic;

    std::optional<GainSchedule> gains;
    if (sc_.game.horizon) {
      if (*sc_.game.horizon < sim.steps)
        throw InputError("finite horizon " + std::to_string(*sc_.game.horizon) + " shorter than simulation steps " +
                         std::to_string(sim.steps));
      FiniteHorizonSolution sol = solve_finite_horizon(sc_.model, *gamma, *sc_.game.horizon, sc_.game.solver);
      if (!sol.feasible()) {
        err_ << "game infeasible at " << describe_failure(*sol.failure, "stage") << '\n';
        return kExitAnalytic;
      }
      gains.emplace(std::move(sol));
    } else {
      InfiniteHorizonResult res = solve_infinite_horizon(sc_.model, *gamma, sc_.game.solver);
      if (!res.converged()) {
        err_ << "fixed-point iteration " << status_word(res.status) << "; no gains to simulate\n";
        return kExitAnalytic;
      }
      gains.emplace(std::move(*res.solution));
    }

    if (sim.loss == LossStrategy::HoldInput)
      err_ << "warning: hold_input is a comparison mode; the saddle-point gains assume zero input on loss\n";

    const DisturbancePolicy policy = make_disturbance(sim.disturbance, sim.steps, sc_.model.disturbance_dim());
    SimulationConfig cfg{sim.x0, sim.r0, sim.steps, sim.seed, sim.loss};
    const TrajectoryRecord rec = simulate(sc_.model, *gains, policy, cfg, 0);
    write_trajectory(rec);

    const SimulationSummary summary = monte_carlo(sc_.model, *gains, policy, cfg, sim.trials, opt_.threads);
    {
      CsvFile csv(dir_ / "summary.csv", "k,mean_square_state,mean_output_energy,mean_disturbance_energy");
      for (int k = 0; k < summary.steps; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        csv.row(k, num(summary.mean_square_state[kk]), num(summary.mean_output_energy[kk]),
                num(summary.mean_disturbance_energy[kk]));
      }
      csv.row(summary.steps, num(summary.mean_square_state.back()), "", "");
    }
    const L2Certificate cert = l2_gain_certificate(summary, *gamma);
    {
      CsvFile csv(dir_ / "summary_totals.csv", "key,value");
      csv.row("trials", summary.trials);
      csv.row("steps", summary.steps);
      csv.row("seed", summary.seed);
      csv.row("loss_strategy", to_string(summary.loss));
      csv.row("disturbance", describe(policy));
      csv.row("gamma", num(*gamma));
      csv.row("total_output_energy", num(cert.output_energy));
      csv.row("total_disturbance_energy", num(cert.disturbance_energy));
      csv.row("empirical_gain", cert.empirical_gain ? num(*cert.empirical_gain) : "");
      csv.row("gamma_squared", num(*gamma * *gamma));
      csv.row("mean_excess", num(cert.mean_excess));
      csv.row("standard_error", num(cert.standard_error));
      csv.row("l2_certificate", cert.holds ? "holds" : "violated");
      for (std::size_t h = 0; h < summary.channel_delivery_rate.size(); ++h)
        csv.row("delivery_rate_" + std::to_string(h + 1), num(summary.channel_delivery_rate[h]));
    }
    out_ << "E|x_K|^2 / E|x_0|^2 = "
         << num(summary.mean_square_state.back() / std::max(summary.mean_square_state.front(), 1e-300))
         << ", l2 certificate " << (cert.holds ? "holds" : "violated") << '\n';
    return kExitOk;
  }

  void write_trajectory(const TrajectoryRecord& rec) {
    const int n = sc_.model.state_dim(), m = sc_.model.input_dim(), s = sc_.model.disturbance_dim();
    const int p = sc_.model.output_dim();
    std::string header = "k,mode,outcome";
    auto cols = [&](const char* prefix, int count) {
      for (int c = 1; c <= count; ++c) header += "," + std::string(prefix) + std::to_string(c);
    };
    cols("x", n);
    cols("u", m);
    cols("ua", m);
    cols("w", s);
    cols("z", p);
    std::ofstream csv(dir_ / "trajectory.csv");
    if (!csv) throw InputError("cannot write trajectory.csv");
    csv << header << '\n';
    auto put = [&](const Vector& v) {
      for (Eigen::Index c = 0; c < v.size(); ++c) csv << ',' << num(v(c));
    };
    for (std::size_t k = 0; k < rec.steps.size(); ++k) {
      const TrajectoryStep& st = rec.steps[k];
      csv << k << ',' << st.mode + 1 << ',' << st.outcome.value;
      put(st.state);
      put(st.command);
      put(st.applied);
      put(st.disturbance);
      put(st.output);
      csv << '\n';
    }
    csv << rec.steps.size() << ",,";
    put(rec.final_state);
    csv << std::string(static_cast<std::size_t>(2 * m + s + p), ',') << '\n';
  }

  Options opt_;
  Scenario sc_;
  std::ostream& out_;
  std::ostream& err_;
  fs::path dir_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"H-infinity state feedback for Markov jump linear systems over lossy channels", "mjls-hinf"};
  Options opt;
  app.require_subcommand(1);
  for (const char* name : {"check", "solve", "gamma-c", "sweep", "simulate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--scenario", opt.scenario, "scenario JSON file")->required();
    sub->add_option("--gamma", opt.gamma, "attenuation level (overrides the scenario)")->check(CLI::PositiveNumber);
    sub->add_option("--horizon", opt.horizon, "finite horizon N")->check(CLI::PositiveNumber);
    sub->add_option("--tol", opt.tol, "fixed-point tolerance; bisection tolerance for gamma-c and sweep")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed, "simulation seed");
    sub->add_option("--trials", opt.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--max-channels", opt.max_channels, "refuse models with more channels")->check(CLI::PositiveNumber);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return kExitInputError;
  }
  opt.command = app.get_subcommands().front()->get_name();

  try {
    Scenario sc = load_scenario(opt.scenario);
    if (sc.model.input_dim() > opt.max_channels)
      throw InputError(std::to_string(sc.model.input_dim()) + " channels exceed --max-channels " +
                       std::to_string(opt.max_channels));
    Runner runner(opt, std::move(sc), out, err);
    return runner.dispatch();
  } catch (const ScenarioError& e) {
    err << opt.scenario << ": " << e.what() << '\n';
  } catch (const InputError& e) {
    err << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitInputError;
}

}  // namespace mjls::cli
