#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lot/error.hpp"
#include "lot/verify.hpp"
#include "oracles.hpp"

using namespace lot;
using namespace lot::verify;

TEST_CASE("jacobi_svd basics") {
  const auto id = jacobi_svd(ComplexMatrix::identity(3));
  CHECK(id.sigma == std::vector<double>{1.0, 1.0, 1.0});

  const ComplexMatrix d{{3.0, 0.0}, {0.0, -2.0}};
  const auto s = jacobi_svd(d);
  CHECK(s.sigma[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(s.sigma[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(oracle::max_abs_diff(reconstruct(s), d) <= 1e-14);
}

TEST_CASE("jacobi_svd against the eigenvalues of the Gram") {
  std::mt19937_64 rng(31);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{4, 4}, {3, 6}, {7, 2}, {1, 5}}) {
    const ComplexMatrix m = oracle::random_matrix(r, c, rng);
    const auto s = jacobi_svd(m);
    REQUIRE(s.sigma.size() == std::min(r, c));
    CHECK(std::is_sorted(s.sigma.rbegin(), s.sigma.rend()));
    const auto gram = r <= c ? oracle::matmul(m, oracle::adjoint(m)) : oracle::matmul(oracle::adjoint(m), m);
    auto eig = oracle::hermitian_eigenvalues(gram);
    std::sort(eig.rbegin(), eig.rend());
    for (std::size_t i = 0; i < s.sigma.size(); ++i) CHECK(std::abs(s.sigma[i] * s.sigma[i] - eig[i]) <= 1e-9);
    CHECK(oracle::max_abs_diff(reconstruct(s), m) <= 1e-10);
    CHECK(identity_residual(oracle::matmul(oracle::adjoint(s.u), s.u)) <= 1e-12);
    CHECK(identity_residual(oracle::matmul(s.vh, oracle::adjoint(s.vh))) <= 1e-12);
  }
}

TEST_CASE("polar_oracle") {
  std::mt19937_64 rng(32);
  // A unitary matrix is its own polar factor.
  const auto q = jacobi_svd(oracle::random_matrix(3, 3, rng));
  const ComplexMatrix u = oracle::matmul(q.u, q.vh);
  CHECK(oracle::max_abs_diff(polar_oracle(u), u) <= 1e-12);

  const ComplexMatrix pd{{2.0, 0.0}, {0.0, 0.5}};
  CHECK(oracle::max_abs_diff(polar_oracle(pd), ComplexMatrix::identity(2)) <= 1e-14);

  const ComplexMatrix wide = oracle::random_matrix(3, 5, rng);
  const ComplexMatrix w = polar_oracle(wide);
  CHECK(identity_residual(oracle::matmul(w, oracle::adjoint(w))) <= 1e-12);
  // W·V* is Hermitian positive definite for the polar factor.
  const ComplexMatrix h = oracle::matmul(w, oracle::adjoint(wide));
  CHECK(oracle::max_abs_diff(h, oracle::adjoint(h)) <= 1e-12);

  const ComplexMatrix singular{{1.0, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(polar_oracle(singular), DegenerateKernel);
}

TEST_CASE("orthogonality_report") {
  const LotLayer layer(ConvKernel::gaussian(4, 4, 3, 1.0, 33), 4, Padding::circular, std::nullopt, {60, 1e-12});
  const auto rep = orthogonality_report(layer.orthogonalized_kernel());
  CHECK(rep.passed);
  CHECK(rep.residuals.size() == 16);
  CHECK(rep.max_residual <= 1e-6);
  CHECK(rep.max_sigma == doctest::Approx(1.0).epsilon(1e-6));

  const auto raw = orthogonality_report(layer.frequency_kernel());
  CHECK_FALSE(raw.passed);
}

TEST_CASE("convergence_trace") {
  SUBCASE("identity kernel") {
    const auto tr = convergence_trace(ConvKernel::identity(2, 2, 3), 4, 10);
    REQUIRE(tr.steps.size() == 11);
    CHECK(tr.steps[0].step == 0);
    // Rescaling divides by sqrt(‖I‖_F) = 2^(1/4), then Newton restores 1.
    CHECK(tr.steps[0].max_sigma == doctest::Approx(std::pow(2.0, -0.25)).epsilon(1e-12));
    CHECK(tr.steps.back().min_sigma == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr.steps.back().max_sigma == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("random kernel is monotone and bounded") {
    const auto tr = convergence_trace(ConvKernel::gaussian(3, 3, 3, 1.0, 34), 6, 10, Padding::circular);
    for (std::size_t k = 1; k < tr.steps.size(); ++k) {
      CHECK(tr.steps[k].max_sigma <= 1.0 + 1e-12);
      CHECK(tr.steps[k].min_sigma >= tr.steps[k - 1].min_sigma - 1e-12);
    }
  }
}

TEST_CASE("padding_ab") {
  std::mt19937_64 rng(35);
  SUBCASE("interior input agrees") {
    // Support well inside the image so neither wrap nor zero border is touched.
    Tensor x({2, 8, 8});
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 3; i < 5; ++i)
        for (std::size_t j = 3; j < 5; ++j) x[(c * 8 + i) * 8 + j] = std::normal_distribution<double>()(rng);
    // A delta kernel is orthogonal in both modes, so both outputs are x.
    const auto rep = padding_ab(ConvKernel::identity(2, 2, 3), x, 4, 1, 30);
    CHECK(rep.relative_difference <= 1e-6);
    CHECK(rep.zero_norm_ratio == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.circular_norm_ratio == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("edge input with a shift differs") {
    ConvKernel shift(1, 1, 3);
    shift(0, 0, 1, 2) = 1.0;
    Tensor x({1, 6, 6});
    for (std::size_t i = 0; i < 6; ++i) x[i * 6 + 5] = 1.0;
    const auto rep = padding_ab(shift, x, 8, 2, 30);
    CHECK(rep.relative_difference > 1e-3);
    CHECK(rep.circular_norm_ratio == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.zero_norm_ratio < 1.0);
    CHECK(rep.zero_lip_sample <= 1.0 + 1e-6);
    CHECK(rep.circular_lip_sample <= 1.0 + 1e-6);
  }
  CHECK_THROWS(padding_ab(ConvKernel::identity(3, 2, 3), Tensor({2, 4, 4})));
}

TEST_CASE("bound_audit") {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 10; ++t) {
    const auto audit = bound_audit(oracle::random_matrix(3, 3, rng));
    CHECK(audit.certificates.size() == 10);
    CHECK(audit.holds);
    CHECK(audit.worst_slack <= 1e-9);
  }
  const ComplexMatrix d{{1.0, 0.0}, {0.0, 0.8}};
  const auto audit = bound_audit(d);
  CHECK(audit.holds);
  REQUIRE(audit.ratio_samples > 0);
  CHECK(audit.min_log_ratio >= 1.9);
}
