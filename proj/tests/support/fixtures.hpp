#pragma once

#include <cstdint>
#include <random>

#include "mjls/model.hpp"

namespace mjls::fixtures {

// The two-mode, three-state, two-channel example system.
MjlsModel example_model(double v1, double v2, double mu1, double mu2);

// Channel bank in the (v̄¹, v̄², μ̄¹, μ̄²) order the figures use.
ChannelBank example_bank(double v1, double v2, double mu1, double mu2);

Vector example_x0();

struct TinyLimits {
  int max_n = 2;
  int max_m = 2;
  int max_modes = 2;
  int max_s = 2;
};

// Random instance with CᵀD = 0, R ≻ 0, positive transition matrix and
// channel probabilities in [0.3, 1]; terminal weight ⪯ every W(i).
MjlsModel random_tiny_model(std::mt19937_64& rng, const TinyLimits& limits = {});

// Doubles γ from 0.5 until an N-stage solve is feasible, then scales by
// `margin`.
double feasible_gamma(const MjlsModel& model, int horizon, double margin = 1.5);

}  // namespace mjls::fixtures
