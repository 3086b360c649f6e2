#include "lot/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "lot/error.hpp"
#include "lot/parallel.hpp"

namespace lot::verify {

namespace {

constexpr int kMaxSweeps = 100;

// Tall or square input: rotate column pairs of a until they are mutually
// orthogonal, accumulating the same rotations in v.
Svd jacobi_tall(const ComplexMatrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t n = m.cols();
  ComplexMatrix a = m;
  ComplexMatrix v = ComplexMatrix::identity(n);

  auto rotate = [](ComplexMatrix& x, std::size_t p, std::size_t q, double c, double s, Complex phase) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const Complex xp = x(r, p);
      const Complex xq = phase * x(r, q);
      x(r, p) = c * xp - s * xq;
      x(r, q) = s * xp + c * xq;
    }
  };

  int sweep = 0;
  for (;; ++sweep) {
    if (sweep == kMaxSweeps) throw NonConvergence("jacobi_svd: no convergence in 100 sweeps", 0.0);
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0;
        Complex gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          alpha += std::norm(a(r, p));
          beta += std::norm(a(r, q));
          gamma += std::conj(a(r, p)) * a(r, q);
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const Complex phase = std::conj(gamma) / g;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(a, p, q, c, s, phase);
        rotate(v, p, q, c, s, phase);
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s2 = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s2 += std::norm(a(r, j));
    sigma[j] = std::sqrt(s2);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return sigma[x] > sigma[y]; });

  Svd out;
  out.u = ComplexMatrix(rows, n);
  out.vh = ComplexMatrix(n, n);
  out.sigma.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.sigma[j] = sigma[src];
    for (std::size_t r = 0; r < rows; ++r)
      out.u(r, j) = sigma[src] > 0.0 ? a(r, src) / sigma[src] : Complex(0.0);
    for (std::size_t c = 0; c < n; ++c) out.vh(j, c) = std::conj(v(c, src));
  }
  return out;
}

}  // namespace

Svd jacobi_svd(const ComplexMatrix& m) {
  if (m.rows() >= m.cols()) return jacobi_tall(m);
  Svd t = jacobi_tall(m.adjoint());
  return Svd{t.vh.adjoint(), std::move(t.sigma), t.u.adjoint()};
}

ComplexMatrix reconstruct(const Svd& svd) {
  ComplexMatrix us = svd.u;
  for (std::size_t r = 0; r < us.rows(); ++r)
    for (std::size_t j = 0; j < us.cols(); ++j) us(r, j) *= svd.sigma[j];
  return matmul(us, svd.vh);
}

ComplexMatrix polar_oracle(const ComplexMatrix& m) {
  const Svd svd = jacobi_svd(m);
  if (svd.sigma.empty() || !(svd.sigma.back() >= 1e-12 * svd.sigma.front()) || svd.sigma.front() == 0.0)
    throw DegenerateKernel("polar_oracle: matrix is rank-deficient");
  return matmul(svd.u, svd.vh);
}

OrthogonalityReport orthogonality_report(const FrequencyKernel& w, double tol) {
  const std::size_t n = w.pixel_count();
  OrthogonalityReport rep;
  rep.tolerance = tol;
  rep.residuals.resize(n);
  std::vector<double> sigmas(n);
  parallel_for(n, [&](std::size_t p) {
    const ComplexMatrix& m = w.pixel(p);
    const bool wide = m.rows() <= m.cols();
    rep.residuals[p] = identity_residual(wide ? matmul_adjoint_right(m, m) : matmul_adjoint_left(m, m));
    sigmas[p] = jacobi_svd(m).sigma.front();
  });
  if (n == 0) return rep;
  rep.max_residual = *std::max_element(rep.residuals.begin(), rep.residuals.end());
  rep.mean_residual = std::accumulate(rep.residuals.begin(), rep.residuals.end(), 0.0) / static_cast<double>(n);
  rep.max_sigma = *std::max_element(sigmas.begin(), sigmas.end());
  rep.min_sigma = *std::min_element(sigmas.begin(), sigmas.end());
  rep.passed = rep.max_residual <= tol;
  return rep;
}

ConvergenceTrace convergence_trace(const ConvKernel& v, std::size_t w, int steps, Padding padding) {
  const LotLayer layer(v, w, padding, std::nullopt, NewtonOptions{steps, 0.0});
  const FrequencyKernel fk = layer.frequency_kernel();
  const std::size_t n = fk.pixel_count();
  const auto count = static_cast<std::size_t>(steps) + 1;
  std::vector<std::vector<double>> sigma(n), residual(n);

  parallel_for(n, [&](std::size_t p) {
    const ComplexMatrix scaled = rescale(fk.pixel(p));
    const bool left = uses_left_gram(scaled);
    const ComplexMatrix gram = hermitian_part(orthogonalization_gram(scaled));
    auto& sp = sigma[p];
    auto& rp = residual[p];
    newton_inverse_sqrt(gram, layer.newton(), [&](const NewtonState& s) {
      sp.push_back(jacobi_svd(left ? matmul(s.z, scaled) : matmul(scaled, s.z)).sigma.front());
      rp.push_back(s.residual);
    });
  });

  ConvergenceTrace trace;
  for (std::size_t k = 0; k < count; ++k) {
    TraceStep st;
    st.step = static_cast<int>(k);
    st.min_sigma = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < n; ++p) {
      st.min_sigma = std::min(st.min_sigma, sigma[p][k]);
      st.max_sigma = std::max(st.max_sigma, sigma[p][k]);
      st.max_residual = std::max(st.max_residual, residual[p][k]);
    }
    trace.steps.push_back(st);
  }
  return trace;
}

PaddingAbReport padding_ab(const ConvKernel& v, const Tensor& x, std::size_t pairs, std::uint64_t seed,
                           int steps) {
  if (v.c_in() != v.c_out()) throw ShapeError("padding_ab: requires a square-channel kernel");
  if (x.rank() != 3 || x.dim(1) != x.dim(2)) throw ShapeError("padding_ab: input must be c x w x w");
  const NewtonOptions newton{steps, 0.0};
  const std::size_t w = x.dim(1);
  const LotLayer zero(v, w, Padding::zero, std::nullopt, newton);
  const LotLayer circ(v, w, Padding::circular, std::nullopt, newton);
  const FrequencyKernel wz = zero.orthogonalized_kernel();
  const FrequencyKernel wc = circ.orthogonalized_kernel();

  PaddingAbReport rep;
  const Tensor yz = zero.forward_with(wz, x);
  const Tensor yc = circ.forward_with(wc, x);
  const double xn = x.norm();
  rep.difference_norm = (yz - yc).norm();
  rep.relative_difference = xn > 0.0 ? rep.difference_norm / xn : 0.0;
  rep.zero_norm_ratio = xn > 0.0 ? yz.norm() / xn : 0.0;
  rep.circular_norm_ratio = xn > 0.0 ? yc.norm() / xn : 0.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < pairs; ++i) {
    Tensor a(x.shape()), b(x.shape());
    for (auto& e : a.values()) e = normal(rng);
    for (auto& e : b.values()) e = normal(rng);
    const double d = (a - b).norm();
    rep.zero_lip_sample =
        std::max(rep.zero_lip_sample, (zero.forward_with(wz, a) - zero.forward_with(wz, b)).norm() / d);
    rep.circular_lip_sample =
        std::max(rep.circular_lip_sample, (circ.forward_with(wc, a) - circ.forward_with(wc, b)).norm() / d);
  }
  return rep;
}

BoundAudit bound_audit(const ComplexMatrix& v, int max_steps) {
  const ComplexMatrix scaled = rescale(v);
  BoundAudit audit;
  audit.holds = true;
  audit.worst_slack = -std::numeric_limits<double>::infinity();
  audit.min_log_ratio = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_steps; ++k) {
    const ErrorCertificate cert = error_certificate(scaled, k);
    audit.excess.push_back(cert.v_norm / std::sqrt(cert.rho_min) * std::pow(cert.gap_norm, std::ldexp(1.0, k)));
    audit.worst_slack = std::max(audit.worst_slack, cert.measured - cert.bound);
    audit.holds = audit.holds && cert.holds();
    audit.certificates.push_back(cert);
  }
  for (std::size_t i = 0; i + 1 < audit.excess.size(); ++i) {
    const double e0 = audit.excess[i];
    const double e1 = audit.excess[i + 1];
    if (!(e0 < 0.1) || !(e0 > 0.0) || !(e1 > 0.0)) continue;
    audit.min_log_ratio = std::min(audit.min_log_ratio, std::log(e1) / std::log(e0));
    ++audit.ratio_samples;
  }
  return audit;
}

}  // namespace lot::verify
