#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lot/layers.hpp"
#include "lot/orthogonalizer.hpp"
#include "lot/tensor.hpp"

namespace lot::verify {

struct Svd {
  ComplexMatrix u;            ///< m × r, orthonormal columns
  std::vector<double> sigma;  ///< r = min(m, n), descending
  ComplexMatrix vh;           ///< r × n, orthonormal rows
};

/// One-sided Jacobi SVD (oracle scale, dims ≤ 64). Throws NonConvergence
/// after 100 sweeps.
Svd jacobi_svd(const ComplexMatrix& m);

/// u·Σ·vh
ComplexMatrix reconstruct(const Svd& svd);

/// Exact semi-orthogonal polar factor U·V* of the thin SVD. Throws
/// DegenerateKernel when the smallest singular value is below 1e-12·σ_max.
ComplexMatrix polar_oracle(const ComplexMatrix& m);

struct OrthogonalityReport {
  std::vector<double> residuals;  ///< per pixel ‖WW* − I‖_F, or ‖W*W − I‖_F when tall
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double max_sigma = 0.0;
  double min_sigma = 0.0;  ///< smallest per-pixel σ_max
  double tolerance = 0.0;
  bool passed = false;
};

/// Residuals per pixel, σ_max per pixel from the Jacobi SVD.
OrthogonalityReport orthogonality_report(const FrequencyKernel& w, double tol = 1e-6);

struct TraceStep {
  int step = 0;
  double min_sigma = 0.0;  ///< min over pixels of σ_max(Z_k·V̂)
  double max_sigma = 0.0;
  double max_residual = 0.0;  ///< max over pixels of ‖I − Z_k·Y_k‖_F
};

struct ConvergenceTrace {
  std::vector<TraceStep> steps;  ///< k = 0..K
};

/// Runs exactly `steps` Newton updates on every frequency pixel of the layer
/// the kernel defines at input side w, recording the σ_max band after each.
ConvergenceTrace convergence_trace(const ConvKernel& v, std::size_t w, int steps = kDefaultNewtonSteps,
                                   Padding padding = Padding::zero);

struct PaddingAbReport {
  double difference_norm = 0.0;      ///< ‖f_zero(x) − f_circular(x)‖₂
  double relative_difference = 0.0;  ///< over ‖x‖₂
  double zero_norm_ratio = 0.0;      ///< ‖f_zero(x)‖ / ‖x‖
  double circular_norm_ratio = 0.0;
  double zero_lip_sample = 0.0;      ///< max ‖f(a) − f(b)‖ / ‖a − b‖ over sampled pairs
  double circular_lip_sample = 0.0;
};

/// Runs both padding modes on identical (v, x). Requires c_in == c_out.
PaddingAbReport padding_ab(const ConvKernel& v, const Tensor& x, std::size_t pairs = 16,
                           std::uint64_t seed = 0, int steps = kDefaultNewtonSteps);

struct BoundAudit {
  std::vector<ErrorCertificate> certificates;  ///< k = 1..max_steps
  std::vector<double> excess;  ///< ‖V̂‖₂/√ρ_min · ‖I − V̂V̂*‖₂^(2^k), the bound minus one
  double worst_slack = 0.0;    ///< max over k of measured − bound (≤ 0 when the bound holds)
  double min_log_ratio = 0.0;  ///< min of log e_{k+1} / log e_k over e_k < 0.1, both positive
  std::size_t ratio_samples = 0;
  bool holds = false;
};

/// Rescales v, then audits the finite-step certificate for k = 1..max_steps.
BoundAudit bound_audit(const ComplexMatrix& v, int max_steps = 10);

}  // namespace lot::verify
