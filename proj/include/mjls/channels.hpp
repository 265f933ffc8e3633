#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "mjls/linalg.hpp"
#include "mjls/model.hpp"

namespace mjls {

// Actuator-subset outcome. Bit h-1 (LSB = channel 1) set means channel h
// delivered its packet. Changing this convention reorders every outcome
// distribution, so it is frozen here.
struct OutcomeIndex {
  std::uint32_t value = 0;

  bool delivered(int channel) const { return (value >> channel) & 1U; }  // 0-based channel
  friend bool operator==(OutcomeIndex, OutcomeIndex) = default;
};

// All channels delivered.
inline OutcomeIndex all_delivered(int m) { return OutcomeIndex{(1U << m) - 1U}; }

struct IndexSetAndMask {
  std::vector<int> channels;  // 1-based channel numbers in ℐ_j, ascending
  Matrix mask;                // m×m diagonal 0/1 matrix 𝒩(j)
};

// Throws std::domain_error if j ≥ 2^m.
IndexSetAndMask index_set_and_mask(OutcomeIndex j, int m);

// Diagonal 0/1 mask 𝒩(j) alone.
Matrix outcome_mask(OutcomeIndex j, int m);

// Invariant probability of the delivered state: μ̄/(1 + μ̄ − v̄).
double stationary_success(const GilbertElliottChannel& channel);

// Prior information about the previous stage's outcome.
struct Stationary {};
using Prior = std::variant<Stationary, OutcomeIndex>;

// Pr(exactly the channels in ℐ_l deliver) for l = 0 .. 2^m − 1.
class ChannelOutcomeDistribution {
 public:
  explicit ChannelOutcomeDistribution(std::vector<double> probs);

  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t l) const { return probs_[l]; }
  std::size_t size() const { return probs_.size(); }

  static ChannelOutcomeDistribution point_mass(std::size_t outcomes, std::size_t at);

 private:
  std::vector<double> probs_;
};

// Per-channel success probabilities given the prior. For a conditional prior
// channel h uses stay_good if it delivered at the previous stage and recover
// otherwise.
std::vector<double> success_probabilities(const ChannelBank& bank, const Prior& prior);

// Independent-channel product distribution over the 2^m outcomes.
ChannelOutcomeDistribution outcome_distribution(const ChannelBank& bank, const Prior& prior);

// Σ_l probs[l]·Y(l). All Y(l) must share a shape (std::domain_error otherwise).
Matrix expect_over_outcomes(const ChannelOutcomeDistribution& dist, std::span<const Matrix> values);
Matrix expect_over_outcomes(const ChannelOutcomeDistribution& dist,
                            const std::function<Matrix(std::size_t)>& value);

}  // namespace mjls
