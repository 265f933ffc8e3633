#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mjls/model.hpp"
#include "mjls/riccati.hpp"

namespace mjls {

struct ObservabilityReport {
  bool observable = false;
  std::vector<int> witness_path;  // 0-based modes r_0 .. r_{T-1}; empty if none found
  int max_length_searched = 0;
  int best_rank = 0;
};

// Stacks C(r_0), C(r_1)A(r_0), …, C(r_{T-1})A(r_{T-2})⋯A(r_0).
Matrix jump_observability_matrix(const MjlsModel& model, std::span<const int> path);

// Breadth-first search over positive-probability mode paths of length
// ≤ max_len (0 selects n·𝓜), starting from every mode in index order.
// Returns the first path whose stacked matrix has rank n.
ObservabilityReport weak_observability(const MjlsModel& model, int max_len = 0);

struct GammaSearchConfig {
  double lo = 1e-3;
  double hi = 10.0;
  double tol = 1e-3;        // stop when hi − lo < tol
  int horizon_cap = 10000;  // fixed-point iterations allowed per probe
  double hi_cap = 1e6;      // hi doubles up to this before giving up
  SolverOptions solver;     // max_iter is overridden by horizon_cap
};

enum class GammaSearchStatus { Found, NoFiniteGamma, InvalidLowerBracket };

std::string to_string(GammaSearchStatus status);

struct BracketStep {
  double lo = 0.0;
  double hi = 0.0;
  double probe = 0.0;
  bool predicate = false;
  FixedPointStatus outcome = FixedPointStatus::Indeterminate;
  int iterations = 0;
};

struct GammaSearchResult {
  GammaSearchStatus status = GammaSearchStatus::NoFiniteGamma;
  std::optional<double> gamma_c;  // certified-feasible upper endpoint
  double lo = 0.0;
  double hi = 0.0;
  bool theta_only_predicate = false;  // every D1 square and full rank
  std::vector<BracketStep> log;
};

// True when every D1(i) is square and invertible; then Θ ≻ 0 along the
// recursion already bounds Ξ and the γ predicate needs feasibility only.
bool disturbance_matrices_invertible(const MjlsModel& model);

// The γ predicate used by gamma_critical.
BracketStep probe_attenuation(const MjlsModel& model, double gamma, const GammaSearchConfig& config);

GammaSearchResult gamma_critical(const MjlsModel& model, const GammaSearchConfig& config = {});

enum class ChannelField { StayGood, Recover };

struct SweepParameter {
  int channel = 0;  // 0-based
  ChannelField field = ChannelField::StayGood;
};

struct SweepRow {
  double value = 0.0;
  GammaSearchResult result;
};

// One gamma_critical per grid value; points run independently and failures
// stay in their row.
std::vector<SweepRow> sweep(const MjlsModel& model, SweepParameter parameter,
                            std::span<const double> grid, const GammaSearchConfig& config = {},
                            int workers = 1);

}  // namespace mjls
