#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "lot/orthogonalizer.hpp"
#include "lot/spectral.hpp"
#include "lot/tensor.hpp"

namespace lot {

/// Unconstrained real kernel V, laid out [c_out][c_in][k][k].
class ConvKernel {
 public:
  ConvKernel() = default;
  ConvKernel(std::size_t c_out, std::size_t c_in, std::size_t k);
  ConvKernel(std::size_t c_out, std::size_t c_in, std::size_t k, std::vector<double> values);

  /// Delta at the centre tap for channel pairs j == i (< min(c_out, c_in)).
  static ConvKernel identity(std::size_t c_out, std::size_t c_in, std::size_t k);
  static ConvKernel gaussian(std::size_t c_out, std::size_t c_in, std::size_t k, double stddev,
                             std::uint64_t seed);
  static ConvKernel from_tensor(const Tensor& t);

  std::size_t c_out() const noexcept { return c_out_; }
  std::size_t c_in() const noexcept { return c_in_; }
  std::size_t k() const noexcept { return k_; }
  /// Tap index that maps to spatial offset zero.
  std::size_t center() const noexcept { return k_ / 2; }

  double& operator()(std::size_t j, std::size_t i, std::size_t u, std::size_t v) {
    return values_[((j * c_in_ + i) * k_ + u) * k_ + v];
  }
  double operator()(std::size_t j, std::size_t i, std::size_t u, std::size_t v) const {
    return values_[((j * c_in_ + i) * k_ + u) * k_ + v];
  }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  Tensor to_tensor() const;

  /// FNV-1a over dimensions and raw value bytes.
  std::uint64_t content_hash() const noexcept;

 private:
  std::size_t c_out_ = 0;
  std::size_t c_in_ = 0;
  std::size_t k_ = 0;
  std::vector<double> values_;
};

enum class Padding { zero, circular };

/// Frequency kernel kept for evaluation: computed in 64-bit, stored 32-bit.
struct CachedKernel {
  std::size_t side = 0;
  std::size_t c_out = 0;
  std::size_t c_in = 0;
  std::vector<std::complex<float>> entries;  ///< pixel-major, each pixel row-major c_out × c_in
  std::uint64_t param_hash = 0;

  static CachedKernel from(const FrequencyKernel& fk, std::uint64_t hash);
  FrequencyKernel widen() const;
};

/// Orthogonal convolution layer y = W ∘ x with W = (V∘Vᵀ)^{-1/2}∘V evaluated
/// per frequency.
///
/// Zero padding pads x by k on every side and works on a (w+2k)² transform
/// grid, then crops rows/cols [k, w+k). Circular padding transforms at side w
/// directly. The kernel tap `center()` is placed at spatial offset zero, so
/// the identity kernel is the identity map in both modes; the convolution is
/// y[p] = Σ_u V[u]·x[p − (u − center)].
///
/// With a residual weight λ the layer computes λ·x + (1 − λ)·(W ∘ x); this
/// requires c_in == c_out.
class LotLayer {
 public:
  LotLayer() = default;
  LotLayer(ConvKernel params, std::size_t input_side, Padding padding = Padding::zero,
           std::optional<double> residual = std::nullopt, NewtonOptions newton = {});

  const ConvKernel& params() const noexcept { return params_; }
  /// Mutable parameters. Any cache computed earlier goes stale and is
  /// rejected by forward().
  ConvKernel& mutable_params() noexcept { return params_; }

  std::size_t input_side() const noexcept { return input_side_; }
  std::size_t c_in() const noexcept { return params_.c_in(); }
  std::size_t c_out() const noexcept { return params_.c_out(); }
  std::size_t transform_side() const noexcept;
  std::size_t offset() const noexcept { return padding_ == Padding::zero ? params_.k() : 0; }
  Padding padding() const noexcept { return padding_; }
  std::optional<double> residual() const noexcept { return residual_; }
  const NewtonOptions& newton() const noexcept { return newton_; }

  /// Ṽ: transform of the kernel placed on the transform grid.
  FrequencyKernel frequency_kernel() const;
  /// W̃ in 64-bit.
  FrequencyKernel orthogonalized_kernel() const;

  /// Orthogonalises once and keeps the 32-bit result for later forwards.
  void precompute();
  bool has_cache() const noexcept { return cache_.has_value(); }
  const std::optional<CachedKernel>& cache() const noexcept { return cache_; }
  void drop_cache() noexcept { cache_.reset(); }

  /// Uses the cache when present (StaleCache if V changed since), otherwise
  /// orthogonalises on the fly.
  Tensor forward(const Tensor& x) const;
  /// Applies a given orthogonalised kernel, including the residual branch.
  Tensor forward_with(const FrequencyKernel& w, const Tensor& x) const;

  // Building blocks shared with the reverse pass.
  std::vector<spectral::FrequencyPlane> input_spectra(const Tensor& x) const;
  std::vector<spectral::FrequencyPlane> apply_spectra(
      const FrequencyKernel& w, const std::vector<spectral::FrequencyPlane>& x_spectra) const;
  Tensor crop_output(const std::vector<spectral::FrequencyPlane>& y_spectra) const;

  void check_input(const Tensor& x) const;

 private:
  Tensor forward_cached(const Tensor& x) const;
  Tensor combine_residual(const Tensor& x, Tensor conv) const;

  ConvKernel params_;
  std::size_t input_side_ = 0;
  Padding padding_ = Padding::zero;
  std::optional<double> residual_;
  NewtonOptions newton_;
  std::optional<CachedKernel> cache_;
};

/// Copy of `layer` with its evaluation cache filled.
LotLayer precompute_cache(const LotLayer& layer);

/// Spatial kernel of an orthogonalised frequency kernel: [c_out][c_in][s][s]
/// in origin-anchored circular layout (y = Σ_q E[q]·x[p − q] mod s). Throws
/// RealityViolation if any imaginary part exceeds `imag_tol`.
Tensor extract_spatial_kernel(const FrequencyKernel& w, double imag_tol = 1e-8);
/// Same, from the layer's cache.
Tensor extract_spatial_kernel(const LotLayer& layer, double imag_tol = 1e-8);
/// Largest imaginary component of the inverse transform of every channel pair.
double spatial_imag_residual(const FrequencyKernel& w);

/// Space-to-depth: channel 4c + 2·di + dj of the output holds x[c, 2i+di, 2j+dj].
Tensor invertible_downsample(const Tensor& x);
Tensor invertible_upsample(const Tensor& x);

/// Channel pairs (2m, 2m+1) become (max, min).
Tensor maxmin_activation(const Tensor& x);

/// λ·x + (1 − λ)·fx
Tensor residual_combine(const Tensor& x, const Tensor& fx, double lambda);

/// Row-wise ℓ₂ normalisation of a classes × features matrix.
Tensor last_layer_normalize(const Tensor& weights);

}  // namespace lot
