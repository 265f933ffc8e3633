#pragma once

#include <stdexcept>
#include <vector>

#include "mjls/channels.hpp"
#include "mjls/linalg.hpp"
#include "mjls/model.hpp"
#include "mjls/riccati.hpp"

// Brute-force references for tiny instances. Nothing here calls into the
// stage formulas of riccati.cpp; the only shared pieces are the model and
// solution containers.
namespace mjls::oracle {

// Uniform lattice lower + k·step, k = 0 .. count−1, in every coordinate.
struct GridSpec {
  double lower = -10.0;
  double upper = 10.0;
  double step = 1e-3;

  // Points per coordinate.
  long long count() const;
  // Throws std::invalid_argument on bad bounds/step or more than 1e8 points
  // for the given dimension.
  void check(int dim) const;
};

// The saddle landed on the edge of the grid; widen the bounds.
class GridBoundaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// H(x, u, w) = Σ_l P(l) [ ‖C x + D 𝒩(l) u‖² + ‖A x + B 𝒩(l) u + D1 w‖²_{𝒳(l)} ] − γ²‖w‖²
// for mode `mode`.
double stage_functional(const MjlsModel& model, double gamma, int mode,
                        const std::vector<double>& dist, const std::vector<Matrix>& coupled,
                        const Vector& x, const Vector& u, const Vector& w);

struct GridSaddle {
  Vector u;
  Vector w;
  double value = 0.0;
};

// min over the u-grid of max over the w-grid of H. Each coordinate is
// searched by discrete ternary search, which is exact for the strictly
// convex/concave quadratics at hand up to lattice rounding. u and w may be
// at most 2-dimensional.
GridSaddle grid_saddle(const MjlsModel& model, double gamma, int mode,
                       const std::vector<double>& dist, const std::vector<Matrix>& coupled,
                       const Vector& x, const GridSpec& grid_u, const GridSpec& grid_w);

// E[ Σ_k ‖z_k‖² − γ²‖w_k‖² + x_Nᵀ W x_N ] over every mode path and channel
// outcome path, playing the solution's gains. Refuses horizons above 4 or
// trees with more than 1e5 leaves (std::invalid_argument).
double enumerate_value(const MjlsModel& model, const FiniteHorizonSolution& solution,
                       const Vector& x0, int r0);

// Textbook discrete-time H∞ state-feedback Riccati step
//   P = Q + AᵀPA − AᵀP[B D1] (diag(R, −γ²I) + [B D1]ᵀP[B D1])⁻¹ [B D1]ᵀPA.
// Throws std::domain_error if γ²I − D1ᵀ P_next D1 is not positive definite.
Matrix classical_hinf_step(const Matrix& A, const Matrix& B, const Matrix& D1, const Matrix& Q,
                           const Matrix& R, double gamma, const Matrix& P_next);

}  // namespace mjls::oracle
