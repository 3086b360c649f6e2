#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lot/tensor.hpp"

namespace lot::spectral {

/// n×n complex grid, row-major. Used both for spectra and for complex spatial
/// planes.
struct FrequencyPlane {
  std::size_t side = 0;
  std::vector<Complex> entries;

  FrequencyPlane() = default;
  explicit FrequencyPlane(std::size_t n) : side(n), entries(n * n) {}

  Complex& operator()(std::size_t a, std::size_t b) { return entries[a * side + b]; }
  const Complex& operator()(std::size_t a, std::size_t b) const { return entries[a * side + b]; }

  double norm_squared() const noexcept;
  double max_imag() const noexcept;
};

/// Unnormalised forward transform F[a,b] = Σ x[p,q]·exp(−2πi(ap+bq)/n),
/// computed row-column. Power-of-two sides use radix-2 butterflies, other
/// sides an exact table-driven 1-D summation.
FrequencyPlane dft2d(const FrequencyPlane& plane);
FrequencyPlane dft2d(std::span<const double> real_grid, std::size_t n);

/// Inverse transform with 1/n² normalisation; idft2d(dft2d(x)) == x.
FrequencyPlane idft2d(const FrequencyPlane& plane);

/// Real part of idft2d(dft2d(kernel) ⊙ dft2d(signal)), the circular
/// convolution y[p] = Σ_q kernel[q]·signal[p − q] (indices mod n).
std::vector<double> conv_theorem_check(std::span<const double> kernel,
                                       std::span<const double> signal, std::size_t n);

}  // namespace lot::spectral
