#pragma once

// Reference implementations for tests. Each one takes the slow, obvious route
// so that agreement with the library is evidence rather than repetition.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include "lot/layers.hpp"
#include "lot/tensor.hpp"

namespace oracle {

using lot::Complex;
using lot::ComplexMatrix;

inline ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Complex s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline ComplexMatrix adjoint(const ComplexMatrix& a) {
  ComplexMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = std::conj(a(i, j));
  return t;
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

inline ComplexMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, bool complex = true) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = Complex(n(rng), complex ? n(rng) : 0.0);
  return m;
}

/// Direct 2-D DFT, O(n^4).
inline std::vector<Complex> dft2d(const std::vector<Complex>& x, std::size_t n, int sign = -1) {
  std::vector<Complex> out(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      Complex s = 0.0;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) {
          const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>((a * p + b * q) % n) /
                             static_cast<double>(n);
          s += x[p * n + q] * std::polar(1.0, ang);
        }
      out[a * n + b] = s;
    }
  return out;
}

/// y[j, p] = Σ_i Σ_{u,v} V[j,i,u,v] · x[i, p + (u − c), q + (v − c)], reading
/// zeros outside the image (zero mode) or wrapping (circular mode).
inline lot::Tensor spatial_conv(const lot::ConvKernel& v, const lot::Tensor& x, bool circular) {
  const std::size_t w = x.dim(1);
  const auto c = static_cast<long>(v.center());
  const auto sw = static_cast<long>(w);
  lot::Tensor y({v.c_out(), w, w});
  for (std::size_t j = 0; j < v.c_out(); ++j)
    for (long p = 0; p < sw; ++p)
      for (long q = 0; q < sw; ++q) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.c_in(); ++i)
          for (std::size_t u = 0; u < v.k(); ++u)
            for (std::size_t t = 0; t < v.k(); ++t) {
              long r = p - (static_cast<long>(u) - c);
              long col = q - (static_cast<long>(t) - c);
              if (circular) {
                r = ((r % sw) + sw) % sw;
                col = ((col % sw) + sw) % sw;
              } else if (r < 0 || r >= sw || col < 0 || col >= sw) {
                continue;
              }
              s += v(j, i, u, t) * x.at(i, static_cast<std::size_t>(r), static_cast<std::size_t>(col));
            }
        y.at(j, static_cast<std::size_t>(p), static_cast<std::size_t>(q)) = s;
      }
  return y;
}

/// y[j, p] = Σ_i Σ_q E[j,i,q] · x[i, p − q] (mod s) for a full s×s spatial kernel.
inline lot::Tensor circular_conv_full(const lot::Tensor& e, const lot::Tensor& x) {
  const std::size_t co = e.dim(0), ci = e.dim(1), s = e.dim(2);
  lot::Tensor y({co, s, s});
  for (std::size_t j = 0; j < co; ++j)
    for (std::size_t p = 0; p < s; ++p)
      for (std::size_t q = 0; q < s; ++q) {
        double acc = 0.0;
        for (std::size_t i = 0; i < ci; ++i)
          for (std::size_t a = 0; a < s; ++a)
            for (std::size_t b = 0; b < s; ++b)
              acc += e[((j * ci + i) * s + a) * s + b] * x.at(i, (p + s - a) % s, (q + s - b) % s);
        y.at(j, p, q) = acc;
      }
  return y;
}

/// Scalar Newton recurrence on an eigenvalue λ: returns z_k with y₀ = λ, z₀ = 1.
inline double scalar_newton(double lambda, int steps) {
  double y = lambda, z = 1.0;
  for (int k = 0; k < steps; ++k) {
    const double t = 3.0 - z * y;
    y = 0.5 * y * t;
    z = 0.5 * t * z;
  }
  return z;
}

/// Eigenvalues (ascending) of a Hermitian matrix, via cyclic Jacobi on the
/// real symmetric embedding [[Re, −Im], [Im, Re]]; each eigenvalue appears
/// once (the embedding doubles them).
inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix& h) {
  const std::size_t n = h.rows();
  const std::size_t m = 2 * n;
  std::vector<double> a(m * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Complex z = 0.5 * (h(i, j) + std::conj(h(j, i)));
      a[i * m + j] = z.real();
      a[(i + n) * m + (j + n)] = z.real();
      a[i * m + (j + n)] = -z.imag();
      a[(i + n) * m + j] = z.imag();
    }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) off += a[p * m + q] * a[p * m + q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = a[p * m + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const double akp = a[k * m + p], akq = a[k * m + q];
          a[k * m + p] = c * akp - s * akq;
          a[k * m + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double apk = a[p * m + k], aqk = a[q * m + k];
          a[p * m + k] = c * apk - s * aqk;
          a[q * m + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(m);
  for (std::size_t i = 0; i < m; ++i) ev[i] = a[i * m + i];
  std::sort(ev.begin(), ev.end());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ev[2 * i];
  return out;
}

inline double sigma_max(const ComplexMatrix& a) {
  const ComplexMatrix g = a.rows() <= a.cols() ? oracle::matmul(a, adjoint(a)) : oracle::matmul(adjoint(a), a);
  return std::sqrt(std::max(0.0, hermitian_eigenvalues(g).back()));
}

inline lot::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double stddev = 1.0) {
  lot::Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, stddev);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

}  // namespace oracle
