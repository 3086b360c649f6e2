#include "lot/layers.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "lot/error.hpp"

namespace lot {

// ---------------------------------------------------------------------------
// ConvKernel

ConvKernel::ConvKernel(std::size_t c_out, std::size_t c_in, std::size_t k)
    : c_out_(c_out), c_in_(c_in), k_(k), values_(c_out * c_in * k * k, 0.0) {
  if (c_out == 0 || c_in == 0 || k == 0) throw ShapeError("ConvKernel: dimensions must be positive");
}

ConvKernel::ConvKernel(std::size_t c_out, std::size_t c_in, std::size_t k, std::vector<double> values)
    : c_out_(c_out), c_in_(c_in), k_(k), values_(std::move(values)) {
  if (c_out == 0 || c_in == 0 || k == 0) throw ShapeError("ConvKernel: dimensions must be positive");
  if (values_.size() != c_out * c_in * k * k) throw ShapeError("ConvKernel: value count mismatch");
}

ConvKernel ConvKernel::identity(std::size_t c_out, std::size_t c_in, std::size_t k) {
  ConvKernel v(c_out, c_in, k);
  const std::size_t c = v.center();
  for (std::size_t j = 0; j < std::min(c_out, c_in); ++j) v(j, j, c, c) = 1.0;
  return v;
}

ConvKernel ConvKernel::gaussian(std::size_t c_out, std::size_t c_in, std::size_t k, double stddev,
                                std::uint64_t seed) {
  ConvKernel v(c_out, c_in, k);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& x : v.values_) x = dist(rng);
  return v;
}

ConvKernel ConvKernel::from_tensor(const Tensor& t) {
  if (t.rank() != 4 || t.dim(2) != t.dim(3))
    throw ShapeError("ConvKernel: expected a c_out × c_in × k × k tensor");
  return ConvKernel(t.dim(0), t.dim(1), t.dim(2), t.values());
}

Tensor ConvKernel::to_tensor() const { return Tensor({c_out_, c_in_, k_, k_}, values_); }

std::uint64_t ConvKernel::content_hash() const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const std::uint64_t dims[3] = {c_out_, c_in_, k_};
  mix(dims, sizeof dims);
  mix(values_.data(), values_.size() * sizeof(double));
  return h;
}

// ---------------------------------------------------------------------------
// CachedKernel

CachedKernel CachedKernel::from(const FrequencyKernel& fk, std::uint64_t hash) {
  CachedKernel c;
  c.side = fk.side();
  c.c_out = fk.c_out();
  c.c_in = fk.c_in();
  c.param_hash = hash;
  c.entries.reserve(fk.pixel_count() * c.c_out * c.c_in);
  for (const auto& px : fk.pixels())
    for (const auto& e : px.entries())
      c.entries.emplace_back(static_cast<float>(e.real()), static_cast<float>(e.imag()));
  return c;
}

FrequencyKernel CachedKernel::widen() const {
  FrequencyKernel fk(side, c_out, c_in);
  const std::size_t per = c_out * c_in;
  for (std::size_t p = 0; p < fk.pixel_count(); ++p)
    for (std::size_t e = 0; e < per; ++e) {
      const auto& v = entries[p * per + e];
      fk.pixel(p).entries()[e] = Complex(v.real(), v.imag());
    }
  fk.set_orthogonalized(true);
  return fk;
}

// ---------------------------------------------------------------------------
// LotLayer

LotLayer::LotLayer(ConvKernel params, std::size_t input_side, Padding padding,
                   std::optional<double> residual, NewtonOptions newton)
    : params_(std::move(params)),
      input_side_(input_side),
      padding_(padding),
      residual_(residual),
      newton_(newton) {
  if (input_side_ == 0) throw ShapeError("LotLayer: input side must be positive");
  if (params_.k() > input_side_) {
    throw ShapeError("LotLayer: kernel size " + std::to_string(params_.k()) +
                     " exceeds input side " + std::to_string(input_side_));
  }
  if (residual_) {
    if (*residual_ < 0.0 || *residual_ > 1.0)
      throw InvalidArgument("LotLayer: residual weight must lie in [0, 1]");
    if (params_.c_in() != params_.c_out())
      throw ShapeError("LotLayer: residual connection needs c_in == c_out");
  }
}

std::size_t LotLayer::transform_side() const noexcept {
  return padding_ == Padding::zero ? input_side_ + 2 * params_.k() : input_side_;
}

FrequencyKernel LotLayer::frequency_kernel() const {
  const std::size_t s = transform_side();
  const std::size_t k = params_.k();
  const std::size_t c = params_.center();
  FrequencyKernel fk(s, params_.c_out(), params_.c_in());
  std::vector<double> grid(s * s);
  for (std::size_t j = 0; j < params_.c_out(); ++j) {
    for (std::size_t i = 0; i < params_.c_in(); ++i) {
      std::fill(grid.begin(), grid.end(), 0.0);
      for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < k; ++v)
          grid[((u + s - c) % s) * s + (v + s - c) % s] = params_(j, i, u, v);
      const auto plane = spectral::dft2d(grid, s);
      for (std::size_t p = 0; p < s * s; ++p) fk.pixel(p)(j, i) = plane.entries[p];
    }
  }
  return fk;
}

FrequencyKernel LotLayer::orthogonalized_kernel() const {
  return orthogonalize_kernel(frequency_kernel(), newton_);
}

void LotLayer::precompute() {
  cache_ = CachedKernel::from(orthogonalized_kernel(), params_.content_hash());
}

LotLayer precompute_cache(const LotLayer& layer) {
  LotLayer out = layer;
  out.precompute();
  return out;
}

void LotLayer::check_input(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(0) != c_in() || x.dim(1) != input_side_ || x.dim(2) != input_side_) {
    std::string got;
    for (auto d : x.shape()) got += (got.empty() ? "" : "x") + std::to_string(d);
    throw ShapeError("LotLayer: expected input " + std::to_string(c_in()) + "x" +
                     std::to_string(input_side_) + "x" + std::to_string(input_side_) + ", got " + got);
  }
}

std::vector<spectral::FrequencyPlane> LotLayer::input_spectra(const Tensor& x) const {
  check_input(x);
  const std::size_t s = transform_side();
  const std::size_t off = offset();
  const std::size_t w = input_side_;
  std::vector<spectral::FrequencyPlane> out;
  out.reserve(c_in());
  for (std::size_t ch = 0; ch < c_in(); ++ch) {
    spectral::FrequencyPlane plane(s);
    for (std::size_t r = 0; r < w; ++r)
      for (std::size_t col = 0; col < w; ++col) plane(r + off, col + off) = x.at(ch, r, col);
    out.push_back(spectral::dft2d(plane));
  }
  return out;
}

namespace {

template <typename Weight>
std::vector<spectral::FrequencyPlane> apply_pixels(
    std::size_t side, std::size_t c_out, std::size_t c_in, Weight&& weight,
    const std::vector<spectral::FrequencyPlane>& xs) {
  std::vector<spectral::FrequencyPlane> ys(c_out, spectral::FrequencyPlane(side));
  for (std::size_t p = 0; p < side * side; ++p) {
    for (std::size_t j = 0; j < c_out; ++j) {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < c_in; ++i) acc += weight(p, j, i) * xs[i].entries[p];
      ys[j].entries[p] = acc;
    }
  }
  return ys;
}

}  // namespace

std::vector<spectral::FrequencyPlane> LotLayer::apply_spectra(
    const FrequencyKernel& w, const std::vector<spectral::FrequencyPlane>& xs) const {
  if (w.side() != transform_side() || w.c_out() != c_out() || w.c_in() != c_in())
    throw ShapeError("LotLayer: frequency kernel does not match layer geometry");
  return apply_pixels(
      w.side(), w.c_out(), w.c_in(),
      [&w](std::size_t p, std::size_t j, std::size_t i) { return w.pixel(p)(j, i); }, xs);
}

Tensor LotLayer::crop_output(const std::vector<spectral::FrequencyPlane>& ys) const {
  const std::size_t w = input_side_;
  const std::size_t off = offset();
  Tensor out({ys.size(), w, w});
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const auto plane = spectral::idft2d(ys[j]);
    for (std::size_t r = 0; r < w; ++r)
      for (std::size_t c = 0; c < w; ++c) out.at(j, r, c) = plane(r + off, c + off).real();
  }
  return out;
}

Tensor LotLayer::combine_residual(const Tensor& x, Tensor conv) const {
  if (!residual_) return conv;
  return residual_combine(x, conv, *residual_);
}

Tensor LotLayer::forward_with(const FrequencyKernel& w, const Tensor& x) const {
  return combine_residual(x, crop_output(apply_spectra(w, input_spectra(x))));
}

Tensor LotLayer::forward_cached(const Tensor& x) const {
  const CachedKernel& cache = *cache_;
  if (cache.param_hash != params_.content_hash())
    throw StaleCache("LotLayer: cached kernel was computed from different parameters");
  if (cache.side != transform_side() || cache.c_out != c_out() || cache.c_in != c_in())
    throw ShapeError("LotLayer: cached kernel does not match layer geometry");
  const std::size_t per = c_out() * c_in();
  const std::size_t cin = c_in();
  auto ys = apply_pixels(
      cache.side, cache.c_out, cache.c_in,
      [&](std::size_t p, std::size_t j, std::size_t i) {
        const auto& e = cache.entries[p * per + j * cin + i];
        return Complex(e.real(), e.imag());
      },
      input_spectra(x));
  return combine_residual(x, crop_output(ys));
}

Tensor LotLayer::forward(const Tensor& x) const {
  if (cache_) return forward_cached(x);
  return forward_with(orthogonalized_kernel(), x);
}

// ---------------------------------------------------------------------------
// Spatial extraction

double spatial_imag_residual(const FrequencyKernel& w) {
  const std::size_t s = w.side();
  double worst = 0.0;
  spectral::FrequencyPlane plane(s);
  for (std::size_t j = 0; j < w.c_out(); ++j)
    for (std::size_t i = 0; i < w.c_in(); ++i) {
      for (std::size_t p = 0; p < s * s; ++p) plane.entries[p] = w.pixel(p)(j, i);
      worst = std::max(worst, spectral::idft2d(plane).max_imag());
    }
  return worst;
}

Tensor extract_spatial_kernel(const FrequencyKernel& w, double imag_tol) {
  if (!w.orthogonalized()) throw InvalidArgument("extract_spatial_kernel: kernel is not orthogonalized");
  const std::size_t s = w.side();
  Tensor out({w.c_out(), w.c_in(), s, s});
  double worst = 0.0;
  spectral::FrequencyPlane plane(s);
  for (std::size_t j = 0; j < w.c_out(); ++j)
    for (std::size_t i = 0; i < w.c_in(); ++i) {
      for (std::size_t p = 0; p < s * s; ++p) plane.entries[p] = w.pixel(p)(j, i);
      const auto spatial = spectral::idft2d(plane);
      worst = std::max(worst, spatial.max_imag());
      for (std::size_t p = 0; p < s * s; ++p)
        out[(j * w.c_in() + i) * s * s + p] = spatial.entries[p].real();
    }
  if (worst > imag_tol) {
    throw RealityViolation("extract_spatial_kernel: imaginary residual " + std::to_string(worst) +
                               " exceeds tolerance",
                           worst);
  }
  return out;
}

Tensor extract_spatial_kernel(const LotLayer& layer, double imag_tol) {
  if (!layer.has_cache()) throw InvalidArgument("extract_spatial_kernel: layer has no cache");
  if (layer.cache()->param_hash != layer.params().content_hash())
    throw StaleCache("extract_spatial_kernel: cache is stale");
  return extract_spatial_kernel(layer.cache()->widen(), imag_tol);
}

// ---------------------------------------------------------------------------
// Shape-preserving 1-Lipschitz layers

Tensor invertible_downsample(const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) != x.dim(2)) throw ShapeError("invertible_downsample: expected c×w×w");
  if (x.dim(1) % 2 != 0) throw ShapeError("invertible_downsample: side must be even");
  const std::size_t c = x.dim(0);
  const std::size_t h = x.dim(1) / 2;
  Tensor out({4 * c, h, h});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t di = 0; di < 2; ++di)
      for (std::size_t dj = 0; dj < 2; ++dj)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < h; ++j)
            out.at(4 * ch + 2 * di + dj, i, j) = x.at(ch, 2 * i + di, 2 * j + dj);
  return out;
}

Tensor invertible_upsample(const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) != x.dim(2) || x.dim(0) % 4 != 0)
    throw ShapeError("invertible_upsample: expected 4c×h×h");
  const std::size_t c = x.dim(0) / 4;
  const std::size_t h = x.dim(1);
  Tensor out({c, 2 * h, 2 * h});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t di = 0; di < 2; ++di)
      for (std::size_t dj = 0; dj < 2; ++dj)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < h; ++j)
            out.at(ch, 2 * i + di, 2 * j + dj) = x.at(4 * ch + 2 * di + dj, i, j);
  return out;
}

Tensor maxmin_activation(const Tensor& x) {
  if (x.rank() < 1 || x.dim(0) % 2 != 0) throw ShapeError("maxmin_activation: channel count must be even");
  const std::size_t plane = x.size() / x.dim(0);
  Tensor out = x;
  for (std::size_t m = 0; m < x.dim(0) / 2; ++m) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double a = x[(2 * m) * plane + p];
      const double b = x[(2 * m + 1) * plane + p];
      out[(2 * m) * plane + p] = std::max(a, b);
      out[(2 * m + 1) * plane + p] = std::min(a, b);
    }
  }
  return out;
}

Tensor residual_combine(const Tensor& x, const Tensor& fx, double lambda) {
  if (x.shape() != fx.shape()) throw ShapeError("residual_combine: shape mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("residual_combine: lambda must lie in [0, 1]");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lambda * x[i] + (1.0 - lambda) * fx[i];
  return out;
}

Tensor last_layer_normalize(const Tensor& weights) {
  if (weights.rank() != 2) throw ShapeError("last_layer_normalize: expected a matrix");
  const std::size_t rows = weights.dim(0);
  const std::size_t cols = weights.dim(1);
  Tensor out = weights;
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += weights[r * cols + c] * weights[r * cols + c];
    if (s == 0.0) throw InvalidArgument("last_layer_normalize: row " + std::to_string(r) + " is zero");
    const double inv = 1.0 / std::sqrt(s);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] *= inv;
  }
  return out;
}

}  // namespace lot
