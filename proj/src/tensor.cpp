#include "lot/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lot/error.hpp"

namespace lot {

std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape product " + std::to_string(shape_product(shape_)));
  }
}

Tensor Tensor::rounded_to(Precision p) const {
  Tensor out = *this;
  out.precision_ = p;
  if (p == Precision::f32) {
    for (auto& v : out.data_) v = static_cast<double>(static_cast<float>(v));
  }
  return out;
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("tensor subtraction: shape mismatch");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("tensor dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), entries_(rows * cols) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_) throw ShapeError("complex matrix: entry count mismatch");
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  entries_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("complex matrix: ragged initializer");
    entries_.insert(entries_.end(), r.begin(), r.end());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> values) {
  ComplexMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

ComplexMatrix ComplexMatrix::conjugate() const {
  ComplexMatrix out = *this;
  for (auto& e : out.entries_) e = std::conj(e);
  return out;
}

double ComplexMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, std::abs(e));
  return m;
}

bool ComplexMatrix::all_finite() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](const Complex& e) {
    return std::isfinite(e.real()) && std::isfinite(e.imag());
  });
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeError("complex matrix add: shape mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += o.entries_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeError("complex matrix sub: shape mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= o.entries_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
  for (auto& e : entries_) e *= s;
  return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }

namespace {

// Plain real arithmetic for the complex multiply-accumulate: avoids the
// NaN-recovery path libstdc++ inserts for operator*.
inline void cmac(Complex& acc, const Complex& x, const Complex& y) {
  const double re = x.real() * y.real() - x.imag() * y.imag();
  const double im = x.real() * y.imag() + x.imag() * y.real();
  acc = Complex(acc.real() + re, acc.imag() + im);
}

}  // namespace

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  ComplexMatrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Complex* crow = &c(i, 0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      const Complex* brow = &b(k, 0);
      for (std::size_t j = 0; j < n; ++j) cmac(crow[j], aik, brow[j]);
    }
  }
  return c;
}

ComplexMatrix matmul_adjoint_left(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_adjoint_left: row mismatch");
  ComplexMatrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const Complex* brow = &b(k, 0);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const Complex aki = std::conj(a(k, i));
      Complex* crow = &c(i, 0);
      for (std::size_t j = 0; j < n; ++j) cmac(crow[j], aki, brow[j]);
    }
  }
  return c;
}

ComplexMatrix matmul_adjoint_right(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_adjoint_right: column mismatch");
  ComplexMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const Complex* arow = &a(i, 0);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const Complex* brow = &b(j, 0);
      Complex acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) cmac(acc, arow[k], std::conj(brow[k]));
      c(i, j) = acc;
    }
  }
  return c;
}

ComplexMatrix hermitian_part(const ComplexMatrix& a) {
  if (!a.is_square()) throw ShapeError("hermitian_part: matrix is not square");
  ComplexMatrix h(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    h(i, i) = a(i, i).real();
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const Complex v = 0.5 * (a(i, j) + std::conj(a(j, i)));
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  }
  return h;
}

bool is_hermitian(const ComplexMatrix& a, double rel_tol) {
  if (!a.is_square()) return false;
  const double scale = a.max_abs();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j)
      if (std::abs(a(i, j) - std::conj(a(j, i))) > rel_tol * scale) return false;
  return true;
}

double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const auto& e : a.entries()) s += std::norm(e);
  return std::sqrt(s);
}

double frobenius_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("frobenius_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) s += std::norm(a.entries()[i] - b.entries()[i]);
  return std::sqrt(s);
}

double identity_residual(const ComplexMatrix& a) {
  if (!a.is_square()) throw ShapeError("identity_residual: matrix is not square");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      s += std::norm(a(i, j) - (i == j ? Complex(1.0) : Complex(0.0)));
  return std::sqrt(s);
}

double real_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("real_inner: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    const Complex x = a.entries()[i];
    const Complex y = b.entries()[i];
    s += x.real() * y.real() + x.imag() * y.imag();
  }
  return s;
}

// ---------------------------------------------------------------------------
// Power iteration

namespace {

std::vector<Complex> mat_vec(const ComplexMatrix& b, const std::vector<Complex>& v) {
  std::vector<Complex> w(b.rows());
  for (std::size_t i = 0; i < b.rows(); ++i) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < b.cols(); ++j) cmac(acc, b(i, j), v[j]);
    w[i] = acc;
  }
  return w;
}

double vnorm(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

std::vector<Complex> seeded_start(std::size_t n) {
  std::mt19937_64 rng(0x5eed1e55ULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Complex> v(n);
  for (auto& x : v) x = Complex(u(rng), u(rng));
  return v;
}

// b^(2^m), renormalised after every product, squaring until the result
// stops changing. It tends to the (scaled) projector onto the top
// eigenspace, so iterating with it converges in a handful of steps however
// close the leading eigenvalues are.
constexpr int kMaxSquarings = 64;

ComplexMatrix amplified(const ComplexMatrix& b) {
  ComplexMatrix p = b;
  p *= 1.0 / frobenius_norm(b);
  for (int i = 0; i < kMaxSquarings; ++i) {
    ComplexMatrix q = hermitian_part(matmul(p, p));
    const double n = frobenius_norm(q);
    if (!(n > 0.0)) break;
    q *= 1.0 / n;
    const double moved = frobenius_distance(q, p);
    p = std::move(q);
    if (moved <= 1e-14) break;
  }
  return p;
}

// Largest eigenvalue of a Hermitian PSD matrix. The iteration vector moves
// with the amplified matrix; the Rayleigh quotient and residual are taken on b.
double hermitian_power(const ComplexMatrix& b, double tol, int max_iters) {
  const std::size_t n = b.rows();
  if (n == 0) return 0.0;
  const double scale = frobenius_norm(b);
  if (scale == 0.0) return 0.0;
  const ComplexMatrix p = amplified(b);

  std::vector<Complex> v(n, Complex(1.0 / std::sqrt(static_cast<double>(n))));
  bool restarted = false;
  double theta = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    std::vector<Complex> w = mat_vec(b, v);
    if (vnorm(w) <= 1e-14 * scale) {
      // Start vector (nearly) in the null space: the fixed start missed the
      // dominant direction entirely.
      if (restarted) return 0.0;
      restarted = true;
      v = seeded_start(n);
      const double vn = vnorm(v);
      for (auto& x : v) x /= vn;
      continue;
    }
    Complex rq = 0.0;
    for (std::size_t i = 0; i < n; ++i) cmac(rq, std::conj(v[i]), w[i]);
    const double next = rq.real();
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) resid += std::norm(w[i] - next * v[i]);
    resid = std::sqrt(resid);
    const double change = std::abs(next - theta);
    theta = next;
    if (resid <= tol * theta || (it > 0 && change <= tol * theta)) return theta;
    std::vector<Complex> u = mat_vec(p, v);
    const double un = vnorm(u);
    if (!(un > 0.0)) u = w;
    const double norm = vnorm(u);
    for (std::size_t i = 0; i < n; ++i) v[i] = u[i] / norm;
  }
  throw NonConvergence("power iteration did not converge in " + std::to_string(max_iters) +
                           " iterations",
                       theta);
}

}  // namespace

double max_singular_value(const ComplexMatrix& a, double tol, int max_iters) {
  if (tol <= 0.0) throw InvalidArgument("max_singular_value: tol must be positive");
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const ComplexMatrix gram =
      a.rows() <= a.cols() ? matmul_adjoint_right(a, a) : matmul_adjoint_left(a, a);
  try {
    return std::sqrt(std::max(0.0, hermitian_power(gram, tol, max_iters)));
  } catch (const NonConvergence& e) {
    throw NonConvergence(e.what(), std::sqrt(std::max(0.0, e.last_estimate())));
  }
}

EigenInterval eig_interval_hermitian(const ComplexMatrix& a, double tol, int max_iters) {
  if (!is_hermitian(a, 1e-12)) throw InvalidArgument("eig_interval_hermitian: input is not Hermitian");
  const ComplexMatrix h = hermitian_part(a);
  const double top = hermitian_power(h, tol, max_iters);
  ComplexMatrix shifted = -1.0 * h;
  for (std::size_t i = 0; i < h.rows(); ++i) shifted(i, i) += top;
  const double spread = hermitian_power(shifted, tol, max_iters);
  EigenInterval out{top - spread, top};
  if (out.min < 0.0 && out.min >= -1e-10) out.min = 0.0;
  if (out.max < 0.0 && out.max >= -1e-10) out.max = 0.0;
  return out;
}

}  // namespace lot
