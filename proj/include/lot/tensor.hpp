#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace lot {

using Complex = std::complex<double>;

enum class Precision : std::uint8_t { f32 = 0, f64 = 1 };

/// Dense row-major real tensor. Values are held in double; the precision tag
/// records how the values are meant to be persisted (f32 values are rounded
/// through float on construction via `rounded_to`).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 3-D (channel, row, col) accessors, the layout of every activation.
  double& at(std::size_t c, std::size_t i, std::size_t j) {
    return data_[(c * shape_[1] + i) * shape_[2] + j];
  }
  double at(std::size_t c, std::size_t i, std::size_t j) const {
    return data_[(c * shape_[1] + i) * shape_[2] + j];
  }

  Precision precision() const noexcept { return precision_; }
  Tensor rounded_to(Precision p) const;

  bool all_finite() const noexcept;
  double norm() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  Precision precision_ = Precision::f64;
};

std::size_t shape_product(std::span<const std::size_t> shape);

Tensor operator-(const Tensor& a, const Tensor& b);
double dot(const Tensor& a, const Tensor& b);

/// Dense row-major complex matrix.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries);
  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const {
    return entries_[r * cols_ + c];
  }

  std::span<Complex> entries() noexcept { return entries_; }
  std::span<const Complex> entries() const noexcept { return entries_; }

  ComplexMatrix adjoint() const;
  ComplexMatrix conjugate() const;
  double max_abs() const noexcept;
  bool all_finite() const noexcept;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(Complex s);

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> entries_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(Complex s, ComplexMatrix a);

/// Exact product; the inner loop runs over columns of b in row-major order so
/// the summation order is fixed.
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
/// a* · b without materialising the adjoint.
ComplexMatrix matmul_adjoint_left(const ComplexMatrix& a, const ComplexMatrix& b);
/// a · b* without materialising the adjoint.
ComplexMatrix matmul_adjoint_right(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix hermitian_part(const ComplexMatrix& a);
bool is_hermitian(const ComplexMatrix& a, double rel_tol = 1e-12);
double frobenius_norm(const ComplexMatrix& a);
/// ‖a − b‖_F
double frobenius_distance(const ComplexMatrix& a, const ComplexMatrix& b);
/// ‖I − a‖_F for square a.
double identity_residual(const ComplexMatrix& a);
/// Re Σ conj(a_ij) b_ij, the real inner product treating re/im parts as coordinates.
double real_inner(const ComplexMatrix& a, const ComplexMatrix& b);

struct PowerIterationOptions {
  double tol = 1e-12;
  int max_iters = 20000;
};

/// Largest singular value by power iteration on the smaller Gram matrix B,
/// with the iterate driven by a repeatedly squared B so clustered top
/// singular values still converge quickly. Stops when ‖Bv − θv‖ ≤ tol·θ for the Rayleigh quotient θ. Throws
/// NonConvergence (with the last estimate) after max_iters.
double max_singular_value(const ComplexMatrix& a, double tol = 1e-12, int max_iters = 20000);

struct EigenInterval {
  double min = 0.0;
  double max = 0.0;
};

/// Extremal eigenvalues of a Hermitian PSD matrix: power iteration on a, then
/// on (ρ_max·I − a). Values in [−1e-10, 0) are clamped to zero.
EigenInterval eig_interval_hermitian(const ComplexMatrix& a, double tol = 1e-13,
                                     int max_iters = 200000);

}  // namespace lot
