#include "lot/spectral.hpp"

#include <cmath>
#include <numbers>

#include "lot/error.hpp"

namespace lot::spectral {

double FrequencyPlane::norm_squared() const noexcept {
  double s = 0.0;
  for (const auto& e : entries) s += std::norm(e);
  return s;
}

double FrequencyPlane::max_imag() const noexcept {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, std::abs(e.imag()));
  return m;
}

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle table exp(sign·2πi·t/n) for t in [0, n). Each entry is computed
// from its own angle so no error accumulates along the table.
std::vector<Complex> twiddles(std::size_t n, double sign) {
  std::vector<Complex> w(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n);
    w[t] = Complex(std::cos(angle), std::sin(angle));
  }
  return w;
}

void fft_radix2(std::vector<Complex>& x, const std::vector<Complex>& w) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex u = x[start + k];
        const Complex v = x[start + k + len / 2] * w[k * stride];
        x[start + k] = u + v;
        x[start + k + len / 2] = u - v;
      }
    }
  }
}

void dft_direct(std::vector<Complex>& x, const std::vector<Complex>& w) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    Complex acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) acc += x[p] * w[(a * p) % n];
    out[a] = acc;
  }
  x.swap(out);
}

// 1-D transforms over every row, then every column.
FrequencyPlane transform(const FrequencyPlane& in, double sign) {
  const std::size_t n = in.side;
  FrequencyPlane out = in;
  if (n <= 1) return out;
  const auto w = twiddles(n, sign);
  const bool fast = is_power_of_two(n);
  auto run = [&](std::vector<Complex>& line) {
    if (fast) fft_radix2(line, w);
    else dft_direct(line, w);
  };

  std::vector<Complex> line(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) line[c] = out(r, c);
    run(line);
    for (std::size_t c = 0; c < n; ++c) out(r, c) = line[c];
  }
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) line[r] = out(r, c);
    run(line);
    for (std::size_t r = 0; r < n; ++r) out(r, c) = line[r];
  }
  return out;
}

}  // namespace

FrequencyPlane dft2d(const FrequencyPlane& plane) {
  if (plane.side == 0 || plane.entries.size() != plane.side * plane.side)
    throw ShapeError("dft2d: plane must be n×n with n ≥ 1");
  return transform(plane, -1.0);
}

FrequencyPlane dft2d(std::span<const double> real_grid, std::size_t n) {
  if (n == 0 || real_grid.size() != n * n) throw ShapeError("dft2d: grid must be n×n with n ≥ 1");
  FrequencyPlane p(n);
  for (std::size_t i = 0; i < n * n; ++i) p.entries[i] = real_grid[i];
  return transform(p, -1.0);
}

FrequencyPlane idft2d(const FrequencyPlane& plane) {
  if (plane.side == 0 || plane.entries.size() != plane.side * plane.side)
    throw ShapeError("idft2d: plane must be n×n with n ≥ 1");
  FrequencyPlane out = transform(plane, 1.0);
  const double scale = 1.0 / static_cast<double>(plane.side * plane.side);
  for (auto& e : out.entries) e *= scale;
  return out;
}

std::vector<double> conv_theorem_check(std::span<const double> kernel,
                                       std::span<const double> signal, std::size_t n) {
  if (kernel.size() != n * n || signal.size() != n * n)
    throw ShapeError("conv_theorem_check: kernel and signal must both be n×n");
  FrequencyPlane k = dft2d(kernel, n);
  const FrequencyPlane s = dft2d(signal, n);
  for (std::size_t i = 0; i < n * n; ++i) k.entries[i] *= s.entries[i];
  const FrequencyPlane y = idft2d(k);
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n * n; ++i) out[i] = y.entries[i].real();
  return out;
}

}  // namespace lot::spectral
