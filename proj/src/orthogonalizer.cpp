#include "lot/orthogonalizer.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "lot/parallel.hpp"

namespace lot {

NewtonState newton_init(const ComplexMatrix& a) {
  if (!a.is_square()) throw ShapeError("newton: Gram matrix must be square");
  NewtonState s;
  s.y = a;
  s.z = ComplexMatrix::identity(a.rows());
  s.zy = a;
  s.step = 0;
  s.residual = identity_residual(a);
  return s;
}

NewtonState newton_step(const NewtonState& s) {
  const std::size_t n = s.y.rows();
  ComplexMatrix t = -1.0 * s.zy;
  for (std::size_t i = 0; i < n; ++i) t(i, i) += 3.0;

  NewtonState next;
  next.y = matmul(s.y, t);
  next.y *= 0.5;
  next.z = matmul(t, s.z);
  next.z *= 0.5;
  next.zy = matmul(next.z, next.y);
  next.step = s.step + 1;
  next.residual = identity_residual(next.zy);
  return next;
}

NewtonResult newton_inverse_sqrt(const ComplexMatrix& a, const NewtonOptions& options,
                                 const NewtonObserver& observer) {
  if (!a.is_square()) throw ShapeError("newton_inverse_sqrt: input must be square");
  if (options.steps < 0) throw InvalidArgument("newton_inverse_sqrt: steps must be nonnegative");

  NewtonState state = newton_init(hermitian_part(a));
  if (observer) observer(state);
  double min_residual = state.residual;
  while (state.step < options.steps && !(state.residual < options.early_stop_tol)) {
    state = newton_step(state);
    if (!std::isfinite(state.residual) || !state.z.all_finite() || !state.y.all_finite()) {
      throw NumericalBreakdown("newton_inverse_sqrt: non-finite iterate at step " +
                               std::to_string(state.step));
    }
    if (state.residual > 10.0 * min_residual && state.residual > 1e-6) {
      throw Divergence("newton_inverse_sqrt: residual " + std::to_string(state.residual) +
                           " at step " + std::to_string(state.step) + " exceeds 10x minimum " +
                           std::to_string(min_residual),
                       state);
    }
    min_residual = std::min(min_residual, state.residual);
    if (observer) observer(state);
  }
  NewtonResult out{state.z, std::move(state)};
  return out;
}

ComplexMatrix rescale(const ComplexMatrix& v) {
  const double denom = frobenius_norm(matmul_adjoint_right(v, v));
  if (!(denom > 0.0)) throw DegenerateKernel("rescale: all-zero matrix");
  ComplexMatrix out = v;
  out *= 1.0 / std::sqrt(denom);
  return out;
}

bool uses_left_gram(const ComplexMatrix& v) { return v.rows() <= v.cols(); }

ComplexMatrix orthogonalization_gram(const ComplexMatrix& v) {
  return uses_left_gram(v) ? matmul_adjoint_right(v, v) : matmul_adjoint_left(v, v);
}

namespace {

// Smallest Cholesky pivot of a Hermitian matrix, or a nonpositive value as
// soon as one appears. A vanishing pivot of the unit-Frobenius Gram matrix
// means the kernel pixel has lost rank.
double min_cholesky_pivot(const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  ComplexMatrix l(n, n);
  double min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
    min_pivot = std::min(min_pivot, d);
    if (!(d > 0.0)) return d;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      Complex s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }
  return min_pivot;
}

constexpr double kRankTolerance = 1e-12;

}  // namespace

void check_gram_rank(const ComplexMatrix& gram) {
  if (min_cholesky_pivot(gram) < kRankTolerance) {
    throw DegenerateKernel("orthogonalize_pixel: " + std::to_string(gram.rows()) + "x" +
                           std::to_string(gram.cols()) + " Gram matrix is rank deficient");
  }
}

ComplexMatrix orthogonalize_pixel(const ComplexMatrix& v, const NewtonOptions& options) {
  const ComplexMatrix scaled = rescale(v);
  const ComplexMatrix gram = hermitian_part(orthogonalization_gram(scaled));
  check_gram_rank(gram);
  const NewtonResult nr = newton_inverse_sqrt(gram, options);
  return uses_left_gram(scaled) ? matmul(nr.inv_sqrt, scaled) : matmul(scaled, nr.inv_sqrt);
}

FrequencyKernel::FrequencyKernel(std::size_t side, std::size_t c_out, std::size_t c_in)
    : side_(side), c_out_(c_out), c_in_(c_in), pixels_(side * side, ComplexMatrix(c_out, c_in)) {}

FrequencyKernel orthogonalize_kernel(const FrequencyKernel& fk, const NewtonOptions& options) {
  FrequencyKernel out(fk.side(), fk.c_out(), fk.c_in());
  const std::size_t n = fk.pixel_count();
  std::vector<std::exception_ptr> failures(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      out.pixel(i) = orthogonalize_pixel(fk.pixel(i), options);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });

  std::size_t failed = 0;
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i]) {
      ++failed;
      if (!first) first = i;
    }
  }
  if (first) {
    const std::size_t a = *first / fk.side();
    const std::size_t b = *first % fk.side();
    const std::string where = "pixel (" + std::to_string(a) + "," + std::to_string(b) + ")" +
                              (failed > 1 ? " and " + std::to_string(failed - 1) + " more" : "");
    try {
      std::rethrow_exception(failures[*first]);
    } catch (const Divergence& e) {
      throw Divergence(where + ": " + e.what(), e.snapshot());
    } catch (const DegenerateKernel& e) {
      throw DegenerateKernel(where + ": " + e.what());
    } catch (const NumericalBreakdown& e) {
      throw NumericalBreakdown(where + ": " + e.what());
    }
  }
  out.set_orthogonalized(true);
  return out;
}

ErrorCertificate error_certificate(const ComplexMatrix& v, int steps) {
  if (!v.is_square()) throw InvalidArgument("error_certificate: matrix must be square");
  if (steps < 0) throw InvalidArgument("error_certificate: steps must be nonnegative");
  const ComplexMatrix gram = hermitian_part(matmul_adjoint_right(v, v));
  const EigenInterval eig = eig_interval_hermitian(gram);
  if (eig.min < kRankTolerance) {
    throw CannotCertify("error_certificate: rank-deficient matrix (rho_min = " +
                        std::to_string(eig.min) + ")");
  }

  ErrorCertificate cert;
  cert.steps = steps;
  cert.rho_min = eig.min;
  cert.v_norm = std::sqrt(eig.max);
  cert.gap_norm = std::max(std::abs(1.0 - eig.min), std::abs(1.0 - eig.max));
  if (!(cert.gap_norm < 1.0)) {
    throw InvalidArgument("error_certificate: requires ||I - VV*||_2 < 1, got " +
                          std::to_string(cert.gap_norm));
  }

  const double decay = std::pow(cert.gap_norm, std::ldexp(1.0, steps));
  const double factor = cert.v_norm / std::sqrt(cert.rho_min);
  cert.bound = 1.0 + factor * decay;
  cert.tight_bound = 1.0 + factor * (1.0 - std::sqrt(1.0 - decay));

  const NewtonResult nr = newton_inverse_sqrt(gram, NewtonOptions{steps, 0.0});
  cert.measured = max_singular_value(matmul(nr.inv_sqrt, v));
  return cert;
}

}  // namespace lot
