#include "mjls/channels.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace mjls {

namespace {

void check_index(OutcomeIndex j, int m) {
  if (m < 1 || m > 30) throw std::domain_error("channel count out of range");
  if (j.value >= (1U << m)) {
    throw std::domain_error("outcome index " + std::to_string(j.value) + " out of range for " +
                            std::to_string(m) + " channels");
  }
}

}  // namespace

IndexSetAndMask index_set_and_mask(OutcomeIndex j, int m) {
  check_index(j, m);
  IndexSetAndMask out;
  out.mask = Matrix::Zero(m, m);
  for (int h = 0; h < m; ++h) {
    if (j.delivered(h)) {
      out.channels.push_back(h + 1);
      out.mask(h, h) = 1.0;
    }
  }
  return out;
}

Matrix outcome_mask(OutcomeIndex j, int m) {
  check_index(j, m);
  Matrix mask = Matrix::Zero(m, m);
  for (int h = 0; h < m; ++h)
    if (j.delivered(h)) mask(h, h) = 1.0;
  return mask;
}

double stationary_success(const GilbertElliottChannel& channel) {
  return channel.recover / (1.0 + channel.recover - channel.stay_good);
}

ChannelOutcomeDistribution::ChannelOutcomeDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty() || !std::has_single_bit(probs_.size()))
    throw std::domain_error("outcome distribution length must be a power of two");
}

ChannelOutcomeDistribution ChannelOutcomeDistribution::point_mass(std::size_t outcomes,
                                                                  std::size_t at) {
  std::vector<double> p(outcomes, 0.0);
  p.at(at) = 1.0;
  return ChannelOutcomeDistribution(std::move(p));
}

std::vector<double> success_probabilities(const ChannelBank& bank, const Prior& prior) {
  const int m = bank.size();
  std::vector<double> success(static_cast<std::size_t>(m));
  if (const auto* j = std::get_if<OutcomeIndex>(&prior)) {
    check_index(*j, m);
    for (int h = 0; h < m; ++h) {
      const auto& ch = bank.channels[static_cast<std::size_t>(h)];
      success[static_cast<std::size_t>(h)] = j->delivered(h) ? ch.stay_good : ch.recover;
    }
  } else {
    for (int h = 0; h < m; ++h)
      success[static_cast<std::size_t>(h)] =
          stationary_success(bank.channels[static_cast<std::size_t>(h)]);
  }
  return success;
}

ChannelOutcomeDistribution outcome_distribution(const ChannelBank& bank, const Prior& prior) {
  const auto success = success_probabilities(bank, prior);
  const int m = bank.size();
  const std::size_t outcomes = std::size_t{1} << m;
  std::vector<double> probs(outcomes);
  for (std::size_t l = 0; l < outcomes; ++l) {
    double p = 1.0;
    for (int h = 0; h < m; ++h) {
      const double s = success[static_cast<std::size_t>(h)];
      p *= ((l >> h) & 1U) ? s : 1.0 - s;
    }
    probs[l] = p;
  }
  return ChannelOutcomeDistribution(std::move(probs));
}

Matrix expect_over_outcomes(const ChannelOutcomeDistribution& dist,
                            std::span<const Matrix> values) {
  if (values.size() != dist.size())
    throw std::domain_error("expect_over_outcomes: one value per outcome required");
  return expect_over_outcomes(dist, [&](std::size_t l) { return values[l]; });
}

Matrix expect_over_outcomes(const ChannelOutcomeDistribution& dist,
                            const std::function<Matrix(std::size_t)>& value) {
  Matrix acc;
  for (std::size_t l = 0; l < dist.size(); ++l) {
    Matrix y = value(l);
    if (l == 0) {
      acc = Matrix::Zero(y.rows(), y.cols());
    } else if (y.rows() != acc.rows() || y.cols() != acc.cols()) {
      throw std::domain_error("expect_over_outcomes: shape mismatch at outcome " +
                              std::to_string(l));
    }
    if (dist[l] != 0.0) acc += dist[l] * y;
  }
  return acc;
}

}  // namespace mjls
