#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mjls/linalg.hpp"

namespace mjls {

// Raised when matrix shapes are inconsistent. Validation findings are never
// reported through exceptions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Finite-state Markov chain for the system mode r_k. Row i of `transition`
// holds Pr(r_{k+1} = · | r_k = i).
struct MarkovChain {
  Matrix transition;

  int num_states() const { return static_cast<int>(transition.rows()); }
};

// Two-state Gilbert–Elliott packet-loss process for one actuator channel.
struct GilbertElliottChannel {
  double stay_good = 1.0;  // Pr(delivered at k | delivered at k-1)
  double recover = 1.0;    // Pr(delivered at k | lost at k-1)
};

// Channel h drives actuator h (input column h of every B).
struct ChannelBank {
  std::vector<GilbertElliottChannel> channels;

  int size() const { return static_cast<int>(channels.size()); }
};

// One linear mode:
//   x⁺ = A x + B uᵃ + D1 w
//   z  = C x + D uᵃ
struct ModeData {
  Matrix A;   // n×n
  Matrix B;   // n×m
  Matrix C;   // p×n
  Matrix D;   // p×m
  Matrix D1;  // n×s
};

// Complete problem instance. Construction enforces dimensional consistency
// only; the modelling assumptions are checked by validate_model().
class MjlsModel {
 public:
  MjlsModel(std::vector<ModeData> modes, MarkovChain chain, ChannelBank bank,
            Matrix terminal_weight);
  // Terminal weight defaults to zero.
  MjlsModel(std::vector<ModeData> modes, MarkovChain chain, ChannelBank bank);

  const std::vector<ModeData>& modes() const { return modes_; }
  const ModeData& mode(int i) const { return modes_.at(static_cast<std::size_t>(i)); }
  const MarkovChain& chain() const { return chain_; }
  const ChannelBank& bank() const { return bank_; }
  const Matrix& terminal_weight() const { return terminal_weight_; }

  // W(i) = CᵀC and R(i) = DᵀD.
  const Matrix& state_weight(int i) const { return state_weights_.at(static_cast<std::size_t>(i)); }
  const Matrix& input_weight(int i) const { return input_weights_.at(static_cast<std::size_t>(i)); }

  int num_modes() const { return static_cast<int>(modes_.size()); }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int disturbance_dim() const { return s_; }
  int output_dim() const { return p_; }
  int num_outcomes() const { return 1 << m_; }

  // Same model with a different channel bank.
  MjlsModel with_bank(ChannelBank bank) const;

 private:
  std::vector<ModeData> modes_;
  MarkovChain chain_;
  ChannelBank bank_;
  Matrix terminal_weight_;
  std::vector<Matrix> state_weights_;
  std::vector<Matrix> input_weights_;
  int n_ = 0, m_ = 0, s_ = 0, p_ = 0;
};

struct Finding {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool passed() const;
  const Finding* find(const std::string& name) const;
};

// Finding names, in report order.
namespace finding {
inline constexpr const char* kRowStochastic = "chain_row_stochastic";
inline constexpr const char* kIrreducible = "chain_irreducible";
inline constexpr const char* kAperiodic = "chain_aperiodic";
inline constexpr const char* kFullRankA = "mode_A_full_rank";
inline constexpr const char* kNoCrossWeight = "mode_CtD_zero";
inline constexpr const char* kInputWeightPd = "mode_R_positive_definite";
inline constexpr const char* kTerminalPsd = "terminal_weight_psd";
inline constexpr const char* kStateWeightDominates = "mode_W_dominates_terminal";
inline constexpr const char* kChannelProbabilities = "channel_probabilities_positive";
}  // namespace finding

ValidationReport validate_model(const MjlsModel& model);

// Chain structure checks, exposed for testing.
bool is_irreducible(const Matrix& transition);
// gcd of closed-walk lengths ≤ 𝓜 over all states; 0 if there are none.
int chain_period(const Matrix& transition);

}  // namespace mjls
