#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mjls/analysis.hpp"
#include "mjls/model.hpp"
#include "mjls/riccati.hpp"
#include "mjls/sim.hpp"

namespace mjls {

// Malformed scenario. what() carries "line L, column C: ..." for syntax
// errors and "line L (/json/pointer): ..." for content errors.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DisturbanceSpec {
  enum class Kind { Zero, WorstCase, Waveform, Table };
  Kind kind = Kind::Zero;
  double frequency = 0.2;       // Waveform only
  double decay = 0.5;           // Waveform only
  std::vector<Vector> samples;  // Table only
};

struct GameSpec {
  std::optional<double> gamma;  // unset: gamma_factor × γ_c
  double gamma_factor = 1.1;
  std::optional<int> horizon;   // unset: infinite horizon
  SolverOptions solver;
  GammaSearchConfig search;
};

struct SimulationSpec {
  Vector x0;
  int r0 = 0;  // 0-based in memory, 1-based in the file
  int steps = 60;
  int trials = 1;
  std::uint64_t seed = 0;
  DisturbanceSpec disturbance;
  LossStrategy loss = LossStrategy::ZeroInput;
};

struct SweepSpec {
  SweepParameter parameter;
  std::vector<double> grid;
};

struct Scenario {
  int format_version = 1;
  std::string name;
  MjlsModel model;
  GameSpec game;
  std::optional<SimulationSpec> simulation;
  std::optional<SweepSpec> sweep;
  std::string output_directory = ".";
};

inline constexpr int kScenarioFormatVersion = 1;

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& scenario);

// Field-by-field equality with exact floating-point comparison.
bool same_scenario(const Scenario& a, const Scenario& b);

DisturbancePolicy make_disturbance(const DisturbanceSpec& spec, int steps, int dim);

}  // namespace mjls
