#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lot/error.hpp"
#include "lot/layers.hpp"
#include "oracles.hpp"

using namespace lot;

namespace {

Tensor pad(const Tensor& x, std::size_t by) {
  const std::size_t w = x.dim(1), s = w + 2 * by;
  Tensor out({x.dim(0), s, s});
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) out.at(c, i + by, j + by) = x.at(c, i, j);
  return out;
}

Tensor crop(const Tensor& y, std::size_t by, std::size_t w) {
  Tensor out({y.dim(0), w, w});
  for (std::size_t c = 0; c < y.dim(0); ++c)
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) out.at(c, i, j) = y.at(c, i + by, j + by);
  return out;
}

// Same multiset of entries, hence exactly the same norm up to summation order.
bool is_permutation_of(const Tensor& a, const Tensor& b) {
  return std::is_permutation(a.values().begin(), a.values().end(), b.values().begin(), b.values().end());
}

double max_abs(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

const NewtonOptions kConverged{60, 1e-12};

}  // namespace

TEST_CASE("frequency kernel matches the spatial convolution oracle before orthogonalisation") {
  // Ṽ applied per pixel is exactly the centred convolution with V.
  std::mt19937_64 rng(41);
  for (Padding mode : {Padding::zero, Padding::circular}) {
    const ConvKernel v = ConvKernel::gaussian(3, 2, 3, 1.0, 42);
    const LotLayer layer(v, 6, mode);
    const Tensor x = oracle::random_tensor({2, 6, 6}, rng);
    const Tensor y = layer.crop_output(layer.apply_spectra(layer.frequency_kernel(), layer.input_spectra(x)));
    CHECK(max_abs(y, oracle::spatial_conv(v, x, mode == Padding::circular)) < 1e-12);
  }
}

TEST_CASE("identity kernel is the identity map") {
  std::mt19937_64 rng(43);
  for (Padding mode : {Padding::zero, Padding::circular})
    for (std::size_t k : {1, 2, 3, 5}) {
      const LotLayer layer(ConvKernel::identity(3, 3, k), 7, mode);
      const Tensor x = oracle::random_tensor({3, 7, 7}, rng);
      CHECK(max_abs(layer.forward(x), x) < 1e-6);
    }
}

TEST_CASE("circular mode preserves norms") {
  std::mt19937_64 rng(44);
  for (int t = 0; t < 10; ++t) {
    const LotLayer layer(ConvKernel::gaussian(4, 4, 3, 1.0, 100 + t), 8, Padding::circular, std::nullopt, kConverged);
    const Tensor x = oracle::random_tensor({4, 8, 8}, rng);
    CHECK(layer.forward(x).norm() / x.norm() == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("zero mode is non-expansive and matches the extracted kernel") {
  std::mt19937_64 rng(45);
  for (int t = 0; t < 10; ++t) {
    const LotLayer layer(ConvKernel::gaussian(2, 2, 3, 1.0, 200 + t), 8, Padding::zero, std::nullopt, kConverged);
    const FrequencyKernel w = layer.orthogonalized_kernel();
    const Tensor a = oracle::random_tensor({2, 8, 8}, rng), b = oracle::random_tensor({2, 8, 8}, rng);
    const Tensor fa = layer.forward_with(w, a), fb = layer.forward_with(w, b);
    CHECK((fa - fb).norm() <= (a - b).norm() * (1.0 + 1e-5));

    const Tensor e = extract_spatial_kernel(w);
    const Tensor oracle_out = crop(oracle::circular_conv_full(e, pad(a, 3)), 3, 8);
    CHECK(max_abs(fa, oracle_out) < 1e-6);
  }
}

TEST_CASE("extract_spatial_kernel") {
  const LotLayer id(ConvKernel::identity(2, 2, 3), 5, Padding::circular);
  const Tensor e = extract_spatial_kernel(id.orthogonalized_kernel());
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t p = 0; p < 25; ++p)
        CHECK(std::abs(e[(j * 2 + i) * 25 + p] - (i == j && p == 0 ? 1.0 : 0.0)) < 1e-7);

  std::mt19937_64 rng(46);
  const LotLayer layer(ConvKernel::gaussian(3, 3, 3, 1.0, 47), 6, Padding::circular, std::nullopt, kConverged);
  const FrequencyKernel w = layer.orthogonalized_kernel();
  CHECK(spatial_imag_residual(w) < 1e-8);
  const Tensor x = oracle::random_tensor({3, 6, 6}, rng);
  CHECK(max_abs(layer.forward_with(w, x), oracle::circular_conv_full(extract_spatial_kernel(w), x)) < 1e-6);

  // A frequency kernel that is not conjugate-symmetric has no real spatial form.
  FrequencyKernel bad(2, 1, 1);
  for (std::size_t p = 0; p < 4; ++p) bad.pixel(p) = ComplexMatrix{{Complex(0.0, 1.0)}};
  bad.set_orthogonalized(true);
  CHECK_THROWS_AS(extract_spatial_kernel(bad), RealityViolation);

  const LotLayer uncached(ConvKernel::identity(1, 1, 1), 4);
  CHECK_THROWS_AS(extract_spatial_kernel(uncached), InvalidArgument);
  CHECK(extract_spatial_kernel(precompute_cache(uncached)).size() == 6 * 6);
}

TEST_CASE("cache") {
  std::mt19937_64 rng(48);
  LotLayer layer(ConvKernel::gaussian(4, 4, 3, 1.0, 49), 6);
  const Tensor x = oracle::random_tensor({4, 6, 6}, rng);
  const Tensor fresh = layer.forward(x);
  layer.precompute();
  CHECK(layer.has_cache());
  CHECK(max_abs(layer.forward(x), fresh) < 1e-5);
  layer.mutable_params()(0, 0, 1, 1) += 0.25;
  CHECK_THROWS_AS(layer.forward(x), StaleCache);
  layer.drop_cache();
  CHECK_NOTHROW(layer.forward(x));
}

TEST_CASE("layer validation") {
  CHECK_THROWS_AS(LotLayer(ConvKernel::identity(2, 2, 5), 4), ShapeError);
  CHECK_THROWS_AS(LotLayer(ConvKernel::identity(2, 3, 3), 4, Padding::zero, 0.5), ShapeError);
  CHECK_THROWS_AS(LotLayer(ConvKernel::identity(2, 2, 3), 4, Padding::zero, 1.5), InvalidArgument);
  const LotLayer layer(ConvKernel::identity(2, 2, 3), 4);
  CHECK_THROWS_AS(layer.forward(Tensor({3, 4, 4})), ShapeError);
  CHECK_THROWS_AS(layer.forward(Tensor({2, 5, 5})), ShapeError);
  CHECK_THROWS_AS(LotLayer(ConvKernel(2, 2, 3), 4).forward(Tensor({2, 4, 4})), DegenerateKernel);
}

TEST_CASE("residual layer") {
  std::mt19937_64 rng(50);
  const ConvKernel v = ConvKernel::gaussian(2, 2, 3, 1.0, 51);
  const LotLayer plain(v, 6);
  const LotLayer res(v, 6, Padding::zero, 0.5);
  const Tensor x = oracle::random_tensor({2, 6, 6}, rng);
  CHECK(max_abs(res.forward(x), residual_combine(x, plain.forward(x), 0.5)) < 1e-14);
}

TEST_CASE("invertible downsampling") {
  const Tensor x({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const Tensor d = invertible_downsample(x);
  CHECK(d.shape() == std::vector<std::size_t>{4, 1, 1});
  CHECK(d.values() == std::vector<double>{1, 2, 3, 4});

  std::mt19937_64 rng(52);
  const Tensor r = oracle::random_tensor({3, 6, 6}, rng);
  CHECK(is_permutation_of(invertible_downsample(r), r));
  CHECK(invertible_downsample(r).norm() == doctest::Approx(r.norm()).epsilon(1e-15));
  CHECK(invertible_upsample(invertible_downsample(r)) == r);
  CHECK_THROWS_AS(invertible_downsample(Tensor({1, 3, 3})), ShapeError);
  CHECK_THROWS_AS(invertible_upsample(Tensor({3, 2, 2})), ShapeError);
}

TEST_CASE("maxmin activation") {
  const Tensor x({4, 1, 1}, std::vector<double>{3, -1, -1, 3});
  CHECK(maxmin_activation(x).values() == std::vector<double>{3, -1, 3, -1});
  std::mt19937_64 rng(53);
  for (int t = 0; t < 50; ++t) {
    const Tensor a = oracle::random_tensor({4, 3, 3}, rng), b = oracle::random_tensor({4, 3, 3}, rng);
    CHECK(is_permutation_of(maxmin_activation(a), a));
    CHECK(maxmin_activation(a).norm() == doctest::Approx(a.norm()).epsilon(1e-15));
    CHECK((maxmin_activation(a) - maxmin_activation(b)).norm() <= (a - b).norm() * (1.0 + 1e-15));
  }
  CHECK_THROWS_AS(maxmin_activation(Tensor({3, 2, 2})), ShapeError);
}

TEST_CASE("residual_combine") {
  std::mt19937_64 rng(54);
  const Tensor x = oracle::random_tensor({2, 3, 3}, rng), f = oracle::random_tensor({2, 3, 3}, rng);
  CHECK(residual_combine(x, f, 1.0) == x);
  CHECK(residual_combine(x, f, 0.0) == f);
  CHECK_THROWS_AS(residual_combine(x, Tensor({2, 2, 2}), 0.5), ShapeError);
  CHECK_THROWS_AS(residual_combine(x, f, -0.1), InvalidArgument);

  const LotLayer g(ConvKernel::gaussian(2, 2, 3, 1.0, 55), 3, Padding::zero, 0.5, kConverged);
  const FrequencyKernel w = g.orthogonalized_kernel();
  for (int t = 0; t < 50; ++t) {
    const Tensor a = oracle::random_tensor({2, 3, 3}, rng), b = oracle::random_tensor({2, 3, 3}, rng);
    CHECK((g.forward_with(w, a) - g.forward_with(w, b)).norm() <= (a - b).norm() * (1.0 + 1e-6));
  }
}

TEST_CASE("last_layer_normalize") {
  const Tensor n = last_layer_normalize(Tensor({1, 2}, std::vector<double>{3, 4}));
  CHECK(n[0] == doctest::Approx(0.6));
  CHECK(n[1] == doctest::Approx(0.8));
  const Tensor unit({2, 2}, std::vector<double>{1, 0, 0, 1});
  CHECK(last_layer_normalize(unit) == unit);
  std::mt19937_64 rng(56);
  const Tensor r = last_layer_normalize(oracle::random_tensor({5, 7}, rng));
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 7; ++j) s += r[i * 7 + j] * r[i * 7 + j];
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(last_layer_normalize(Tensor({2, 2}, std::vector<double>{1, 1, 0, 0})), InvalidArgument);
}

TEST_CASE("kernel content hash tracks values") {
  ConvKernel a = ConvKernel::gaussian(2, 2, 3, 1.0, 57);
  const ConvKernel b = a;
  CHECK(a.content_hash() == b.content_hash());
  a(1, 1, 2, 2) = std::nextafter(a(1, 1, 2, 2), 1e9);
  CHECK(a.content_hash() != b.content_hash());
  CHECK(ConvKernel(2, 3, 1).content_hash() != ConvKernel(3, 2, 1).content_hash());
}
