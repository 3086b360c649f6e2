#include "lot/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "lot/error.hpp"

namespace lot {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string shape_string(const std::vector<std::size_t>& s) {
  std::string out;
  for (auto d : s) out += (out.empty() ? "" : "x") + std::to_string(d);
  return out;
}

ComplexMatrix to_complex(const Tensor& m) {
  ComplexMatrix out(m.dim(0), m.dim(1));
  for (std::size_t i = 0; i < m.size(); ++i) out.entries()[i] = m[i];
  return out;
}

}  // namespace

Tensor LinearHead::effective() const {
  return type == HeadType::lln ? last_layer_normalize(weights) : weights;
}

Network::Network(std::vector<std::size_t> input_shape, std::vector<BodyLayer> body,
                 std::optional<LinearHead> head)
    : input_shape_(std::move(input_shape)), body_(std::move(body)), head_(std::move(head)) {
  if (input_shape_.size() != 3 || input_shape_[1] != input_shape_[2])
    throw ShapeError("Network: input shape must be c×w×w, got " + shape_string(input_shape_));
  shapes_.push_back(input_shape_);
  for (std::size_t idx = 0; idx < body_.size(); ++idx) {
    auto s = shapes_.back();
    std::visit(overloaded{
                   [&](const LotLayer& l) {
                     if (s[0] != l.c_in() || s[1] != l.input_side())
                       throw ShapeError("Network: layer " + std::to_string(idx) + " expects " +
                                        std::to_string(l.c_in()) + "x" + std::to_string(l.input_side()) +
                                        "x" + std::to_string(l.input_side()) + ", got " + shape_string(s));
                     s[0] = l.c_out();
                   },
                   [&](const MaxMinLayer&) {
                     if (s[0] % 2 != 0)
                       throw ShapeError("Network: MaxMin at layer " + std::to_string(idx) +
                                        " needs an even channel count");
                   },
                   [&](const DownsampleLayer&) {
                     if (s[1] % 2 != 0)
                       throw ShapeError("Network: downsampling at layer " + std::to_string(idx) +
                                        " needs an even side");
                     s = {4 * s[0], s[1] / 2, s[2] / 2};
                   },
               },
               body_[idx]);
    shapes_.push_back(std::move(s));
  }
  if (head_) {
    if (head_->weights.rank() != 2 || head_->weights.dim(1) != feature_count())
      throw ShapeError("Network: head expects " +
                       (head_->weights.rank() == 2 ? std::to_string(head_->weights.dim(1)) : std::string("?")) +
                       " features, body produces " + std::to_string(feature_count()));
    if (head_->weights.dim(0) < 1) throw ShapeError("Network: head needs at least one class");
  }
}

std::size_t Network::feature_count() const { return shape_product(shapes_.back()); }

std::size_t Network::classes() const { return head_ ? head_->weights.dim(0) : feature_count(); }

void Network::precompute() {
  for (auto& layer : body_)
    if (auto* l = std::get_if<LotLayer>(&layer)) l->precompute();
}

Tensor Network::features(const Tensor& x) const {
  if (x.shape() != input_shape_)
    throw ShapeError("Network: input " + shape_string(x.shape()) + " does not match " +
                     shape_string(input_shape_));
  Tensor h = x;
  for (const auto& layer : body_) {
    h = std::visit(overloaded{
                       [&](const LotLayer& l) { return l.forward(h); },
                       [&](const MaxMinLayer&) { return maxmin_activation(h); },
                       [&](const DownsampleLayer&) { return invertible_downsample(h); },
                   },
                   layer);
    if (!h.all_finite()) throw NumericalBreakdown("Network: non-finite activation");
  }
  return h;
}

std::vector<double> Network::forward(const Tensor& x) const {
  const Tensor h = features(x);
  if (!head_) return h.values();
  return apply_head(*head_, h);
}

std::vector<double> apply_head(const LinearHead& head, const Tensor& h) {
  const Tensor m = head.effective();
  if (m.dim(1) != h.size()) throw ShapeError("apply_head: feature count mismatch");
  const std::size_t rows = m.dim(0);
  const std::size_t cols = m.dim(1);
  std::vector<double> logits(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += m[r * cols + c] * h[c];
    logits[r] = acc;
  }
  return logits;
}

Tensor Network::forward_batch(const Tensor& batch) const {
  if (batch.rank() != 4 || batch.dim(1) != input_shape_[0] || batch.dim(2) != input_shape_[1] ||
      batch.dim(3) != input_shape_[2])
    throw ShapeError("Network: batch " + shape_string(batch.shape()) + " does not match n×" +
                     shape_string(input_shape_));
  const std::size_t n = batch.dim(0);
  const std::size_t per = shape_product(input_shape_);
  Tensor out({n, classes()});
  for (std::size_t b = 0; b < n; ++b) {
    Tensor x(input_shape_, std::vector<double>(batch.values().begin() + b * per,
                                               batch.values().begin() + (b + 1) * per));
    const auto logits = forward(x);
    std::copy(logits.begin(), logits.end(), out.values().begin() + b * classes());
  }
  return out;
}

Network concatenate(const Network& first, const Network& second) {
  if (first.head()) throw ShapeError("concatenate: first network must not have a head");
  if (first.shapes().back() != second.input_shape())
    throw ShapeError("concatenate: output of first does not match input of second");
  std::vector<BodyLayer> body = first.body();
  body.insert(body.end(), second.body().begin(), second.body().end());
  return Network(first.input_shape(), std::move(body), second.head());
}

// ---------------------------------------------------------------------------
// Lipschitz bookkeeping

double lot_layer_bound(const LotLayer& layer) {
  const FrequencyKernel w = layer.has_cache() ? layer.cache()->widen() : layer.orthogonalized_kernel();
  double sigma = 0.0;
  for (const auto& px : w.pixels()) sigma = std::max(sigma, max_singular_value(px));
  const double lambda = layer.residual().value_or(0.0);
  return lambda + (1.0 - lambda) * sigma;
}

LipschitzReport lipschitz_bound(const Network& net) {
  LipschitzReport report;
  for (const auto& layer : net.body()) {
    LayerBound lb = std::visit(overloaded{
                                   [](const LotLayer& l) { return LayerBound{"lot", lot_layer_bound(l)}; },
                                   [](const MaxMinLayer&) { return LayerBound{"maxmin", 1.0}; },
                                   [](const DownsampleLayer&) { return LayerBound{"downsample", 1.0}; },
                               },
                               layer);
    report.backbone *= lb.bound;
    report.layers.push_back(std::move(lb));
  }
  if (net.head()) {
    report.head = max_singular_value(to_complex(net.head()->effective()));
    report.layers.push_back({net.head()->type == HeadType::lln ? "head-lln" : "head", report.head});
  }
  report.total = report.backbone * report.head;
  return report;
}

// ---------------------------------------------------------------------------
// Margins and certificates

double margin(std::span<const double> logits) {
  if (logits.size() < 2) throw InvalidArgument("margin: need at least two classes");
  double top = -std::numeric_limits<double>::infinity();
  double second = top;
  for (double v : logits) {
    if (v > top) {
      second = top;
      top = v;
    } else if (v > second) {
      second = v;
    }
  }
  return top - second;
}

namespace {

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

void finish(CertificationResult& r, std::span<const double> radii) {
  if (!r.correct || !(r.radius > 0.0)) r.radius = 0.0;
  r.radii.assign(radii.begin(), radii.end());
  r.certified.clear();
  for (double rho : radii) r.certified.push_back(r.correct && r.radius > rho);
}

CertificationResult prepare(std::span<const double> logits, std::optional<std::size_t> label) {
  if (logits.size() < 2) throw InvalidArgument("certify: need at least two classes");
  CertificationResult r;
  r.logits.assign(logits.begin(), logits.end());
  r.predicted = argmax(logits);
  r.label = label;
  if (label && *label >= logits.size()) throw InvalidArgument("certify: label out of range");
  r.correct = !label || *label == r.predicted;
  r.margin = margin(logits);
  return r;
}

}  // namespace

CertificationResult certified_radius(std::span<const double> logits, double lip_bound,
                                     std::optional<std::size_t> label, std::span<const double> radii) {
  if (!(lip_bound > 0.0)) throw InvalidArgument("certified_radius: Lipschitz bound must be positive");
  CertificationResult r = prepare(logits, label);
  r.lipschitz = lip_bound;
  r.radius = r.margin / (std::numbers::sqrt2 * lip_bound);
  finish(r, radii);
  return r;
}

CertificationResult certified_radius_lln(std::span<const double> logits, const Tensor& head_rows,
                                         double backbone_lip, std::optional<std::size_t> label,
                                         std::span<const double> radii) {
  if (!(backbone_lip > 0.0)) throw InvalidArgument("certified_radius_lln: Lipschitz bound must be positive");
  if (head_rows.rank() != 2 || head_rows.dim(0) != logits.size())
    throw ShapeError("certified_radius_lln: head rows do not match logits");
  const std::size_t cols = head_rows.dim(1);
  for (std::size_t r = 0; r < head_rows.dim(0); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += head_rows[r * cols + c] * head_rows[r * cols + c];
    if (std::abs(std::sqrt(s) - 1.0) > 1e-9)
      throw InvalidArgument("certified_radius_lln: head row " + std::to_string(r) + " is not unit-norm");
  }

  CertificationResult res = prepare(logits, label);
  res.lipschitz = backbone_lip;
  const std::size_t top = res.predicted;
  double radius = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j == top) continue;
    const double gap = logits[top] - logits[j];
    double dist2 = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = head_rows[top * cols + c] - head_rows[j * cols + c];
      dist2 += d * d;
    }
    const double dist = std::sqrt(dist2);
    if (dist < 1e-15) {
      // Identical rows: the pair's gap is identically zero, so no radius.
      res.head_degenerate = true;
      radius = gap > 0.0 ? radius : 0.0;
      continue;
    }
    radius = std::min(radius, gap / (backbone_lip * dist));
  }
  res.radius = std::isfinite(radius) ? radius : std::numeric_limits<double>::max();
  finish(res, radii);
  return res;
}

CertificationResult certify(const Network& net, const LipschitzReport& lip, const Tensor& x,
                            std::optional<std::size_t> label, std::span<const double> radii) {
  const auto logits = net.forward(x);
  if (net.head() && net.head()->type == HeadType::lln)
    return certified_radius_lln(logits, net.head()->effective(), lip.backbone, label, radii);
  return certified_radius(logits, lip.total, label, radii);
}

double creg_loss(std::span<const double> logits, std::size_t label, double gamma) {
  if (label >= logits.size()) throw InvalidArgument("creg_loss: label out of range");
  if (gamma < 0.0) throw InvalidArgument("creg_loss: gamma must be nonnegative");
  double other = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (i != label) other = std::max(other, logits[i]);
  const double gap = (logits[label] - other) / std::numbers::sqrt2;
  return -gamma * std::max(0.0, gap);
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) throw InvalidArgument("cross_entropy: label out of range");
  const double top = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double v : logits) s += std::exp(v - top);
  return std::log(s) + top - logits[label];
}

// ---------------------------------------------------------------------------
// Builder

Network make_lipconvnet(const LipConvNetConfig& cfg) {
  if (cfg.width == 0 || cfg.width % 2 != 0) throw InvalidArgument("make_lipconvnet: width must be even");
  if (cfg.blocks == 0) throw InvalidArgument("make_lipconvnet: need at least one block");

  std::size_t possible = 0;
  for (std::size_t side = cfg.input_side; side % 2 == 0 && side / 2 >= 2; side /= 2) ++possible;
  const std::size_t downsamples = std::min({possible, cfg.max_downsamples, cfg.blocks - 1});
  std::vector<bool> downsample_at(cfg.blocks, false);
  for (std::size_t t = 1; t <= downsamples; ++t)
    downsample_at[(cfg.blocks * t) / (downsamples + 1)] = true;

  std::uint64_t seed = cfg.seed;
  auto init = [&](std::size_t c_out, std::size_t c_in) {
    const bool square = c_out == c_in;
    if (cfg.init == InitScheme::identity_mixed && !square) return ConvKernel::identity(c_out, c_in, cfg.kernel_size);
    return ConvKernel::gaussian(c_out, c_in, cfg.kernel_size, 0.05, ++seed);
  };

  std::vector<BodyLayer> body;
  std::size_t channels = cfg.input_channels;
  std::size_t side = cfg.input_side;
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    std::optional<double> residual;
    if (downsample_at[b]) {
      body.emplace_back(DownsampleLayer{});
      channels *= 4;
      side /= 2;
    } else if (b > 0) {
      residual = cfg.residual;
    }
    const std::size_t k = std::min(cfg.kernel_size, side);
    auto params = init(cfg.width, channels);
    if (k != cfg.kernel_size) params = ConvKernel::identity(cfg.width, channels, k);
    body.emplace_back(LotLayer(std::move(params), side, cfg.padding, residual, cfg.newton));
    body.emplace_back(MaxMinLayer{});
    channels = cfg.width;
  }

  const std::size_t features = channels * side * side;
  Tensor head({cfg.classes, features});
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : head.values()) v = dist(rng);
  if (cfg.head == HeadType::plain) {
    // Scale to unit spectral norm so the plain head does not inflate the bound.
    head = last_layer_normalize(head);
    const double s = max_singular_value(to_complex(head));
    for (auto& v : head.values()) v /= s;
  }
  return Network({cfg.input_channels, cfg.input_side, cfg.input_side}, std::move(body),
                 LinearHead{std::move(head), cfg.head});
}

}  // namespace lot
