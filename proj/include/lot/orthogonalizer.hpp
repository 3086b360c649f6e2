#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "lot/error.hpp"
#include "lot/tensor.hpp"

namespace lot {

inline constexpr int kDefaultNewtonSteps = 10;
inline constexpr double kDefaultEarlyStopTol = 1e-7;

/// Coupled Newton–Schulz iterate: Y_k → A^{1/2}, Z_k → A^{-1/2}.
struct NewtonState {
  ComplexMatrix y;
  ComplexMatrix z;
  ComplexMatrix zy;  ///< Z_k·Y_k, kept for the next update
  int step = 0;
  double residual = 0.0;  ///< ‖I − Z_k·Y_k‖_F
};

class Divergence : public Error {
 public:
  Divergence(const std::string& what, NewtonState snapshot)
      : Error(ErrorKind::Divergence, what), snapshot_(std::move(snapshot)) {}
  const NewtonState& snapshot() const noexcept { return snapshot_; }

 private:
  NewtonState snapshot_;
};

struct NewtonOptions {
  int steps = kDefaultNewtonSteps;
  /// Stop once ‖I − Z_k·Y_k‖_F drops below this. Zero runs exactly `steps`.
  double early_stop_tol = kDefaultEarlyStopTol;
};

/// Y₀ = A, Z₀ = I.
NewtonState newton_init(const ComplexMatrix& a);

/// One update: T = 3I − Z·Y, Y ← ½·Y·T, Z ← ½·T·Z. Recomputes the residual.
NewtonState newton_step(const NewtonState& s);

struct NewtonResult {
  ComplexMatrix inv_sqrt;
  NewtonState state;
};

using NewtonObserver = std::function<void(const NewtonState&)>;

/// Z_k ≈ a^{-1/2} for Hermitian PSD a with ‖I − a‖₂ < 1. `a` is symmetrised
/// first. The observer, if set, sees the initial state and every update.
/// Throws Divergence when the residual climbs above 10× its running minimum
/// (and above 1e-6), NumericalBreakdown on non-finite values.
NewtonResult newton_inverse_sqrt(const ComplexMatrix& a, const NewtonOptions& options = {},
                                 const NewtonObserver& observer = {});

/// v / sqrt(‖v·v*‖_F). Throws DegenerateKernel for an all-zero matrix.
ComplexMatrix rescale(const ComplexMatrix& v);

/// Gram matrix used for orthogonalisation: v·v* when rows ≤ cols (left
/// variant), v*·v otherwise (right variant, nonsingular for full column rank).
bool uses_left_gram(const ComplexMatrix& v);
ComplexMatrix orthogonalization_gram(const ComplexMatrix& v);

/// Throws DegenerateKernel when a unit-Frobenius Gram matrix has a Cholesky
/// pivot below 1e-12 (the pixel has lost rank).
void check_gram_rank(const ComplexMatrix& gram);

/// Semi-orthogonal factor (v·v*)^{-1/2}·v, or v·(v*·v)^{-1/2} when v is tall.
/// Throws DegenerateKernel for zero or rank-deficient v.
ComplexMatrix orthogonalize_pixel(const ComplexMatrix& v, const NewtonOptions& options = {});

/// Per-frequency matrix stack of a convolution kernel. Pixel (a,b) lives at
/// index a·side + b and is a c_out × c_in matrix.
class FrequencyKernel {
 public:
  FrequencyKernel() = default;
  FrequencyKernel(std::size_t side, std::size_t c_out, std::size_t c_in);

  std::size_t side() const noexcept { return side_; }
  std::size_t c_out() const noexcept { return c_out_; }
  std::size_t c_in() const noexcept { return c_in_; }
  std::size_t pixel_count() const noexcept { return pixels_.size(); }
  bool orthogonalized() const noexcept { return orthogonalized_; }
  void set_orthogonalized(bool v) noexcept { orthogonalized_ = v; }

  ComplexMatrix& pixel(std::size_t index) { return pixels_[index]; }
  const ComplexMatrix& pixel(std::size_t index) const { return pixels_[index]; }
  ComplexMatrix& pixel(std::size_t a, std::size_t b) { return pixels_[a * side_ + b]; }
  const ComplexMatrix& pixel(std::size_t a, std::size_t b) const { return pixels_[a * side_ + b]; }

  const std::vector<ComplexMatrix>& pixels() const noexcept { return pixels_; }

 private:
  std::size_t side_ = 0;
  std::size_t c_out_ = 0;
  std::size_t c_in_ = 0;
  std::vector<ComplexMatrix> pixels_;
  bool orthogonalized_ = false;
};

/// Applies orthogonalize_pixel to every pixel (in parallel; output is
/// independent of scheduling). Per-pixel failures are rethrown with the
/// coordinates of the first failing pixel in row-major order.
FrequencyKernel orthogonalize_kernel(const FrequencyKernel& fk, const NewtonOptions& options = {});

/// Finite-step spectral-norm certificate for square, full-rank, rescaled v.
struct ErrorCertificate {
  int steps = 0;
  double v_norm = 0.0;     ///< ‖V‖₂
  double rho_min = 0.0;    ///< ρ_min(V·V*)
  double gap_norm = 0.0;   ///< ‖I − V·V*‖₂
  double bound = 0.0;      ///< 1 + ‖V‖₂/√ρ_min · ‖I − VV*‖₂^(2^k)
  double tight_bound = 0.0;///< 1 + ‖V‖₂/√ρ_min · (1 − √(1 − ‖I − VV*‖₂^(2^k)))
  double measured = 0.0;   ///< σ_max(Z_k·V)

  bool holds(double slack = 1e-9) const noexcept { return measured <= bound + slack; }
};

/// Runs exactly `steps` Newton updates (no early stop). Throws
/// CannotCertify when ρ_min < 1e-12, InvalidArgument when v is not square or
/// ‖I − vv*‖₂ ≥ 1.
ErrorCertificate error_certificate(const ComplexMatrix& v, int steps);

}  // namespace lot
