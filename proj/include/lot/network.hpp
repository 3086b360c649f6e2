#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lot/layers.hpp"
#include "lot/tensor.hpp"

namespace lot {

struct MaxMinLayer {};
struct DownsampleLayer {};

using BodyLayer = std::variant<LotLayer, MaxMinLayer, DownsampleLayer>;

enum class HeadType { plain, lln };

/// Linear classification head over the flattened features (no bias).
struct LinearHead {
  Tensor weights;  ///< classes × features
  HeadType type = HeadType::plain;

  /// The matrix actually applied: rows unit-normalised for LLN heads.
  Tensor effective() const;
};

/// Logits of a head applied to flattened features.
std::vector<double> apply_head(const LinearHead& head, const Tensor& features);

/// Ordered stack of 1-Lipschitz layers with an optional linear head.
class Network {
 public:
  Network() = default;
  /// Validates that shapes chain from `input_shape` (c, w, w) to the head.
  Network(std::vector<std::size_t> input_shape, std::vector<BodyLayer> body,
          std::optional<LinearHead> head);

  const std::vector<std::size_t>& input_shape() const noexcept { return input_shape_; }
  const std::vector<BodyLayer>& body() const noexcept { return body_; }
  std::vector<BodyLayer>& mutable_body() noexcept { return body_; }
  const std::optional<LinearHead>& head() const noexcept { return head_; }
  std::optional<LinearHead>& mutable_head() noexcept { return head_; }

  /// Shape after each body layer; entry 0 is the input shape.
  const std::vector<std::vector<std::size_t>>& shapes() const noexcept { return shapes_; }
  std::size_t feature_count() const;
  std::size_t classes() const;

  /// Fills every LOT layer's evaluation cache.
  void precompute();

  /// Output of the body (c × w × w).
  Tensor features(const Tensor& x) const;
  /// Logits when a head is present; otherwise the flattened features.
  std::vector<double> forward(const Tensor& x) const;
  /// n × c × w × w input, n × classes output.
  Tensor forward_batch(const Tensor& batch) const;

 private:
  std::vector<std::size_t> input_shape_;
  std::vector<BodyLayer> body_;
  std::optional<LinearHead> head_;
  std::vector<std::vector<std::size_t>> shapes_;
};

Network concatenate(const Network& first, const Network& second);

struct LayerBound {
  std::string kind;
  double bound = 1.0;
};

struct LipschitzReport {
  std::vector<LayerBound> layers;  ///< one per body layer, then the head if any
  double backbone = 1.0;           ///< product over body layers
  double head = 1.0;               ///< σ_max of the applied head matrix
  double total = 1.0;              ///< backbone · head
};

/// LOT layers: max over frequency pixels of σ_max(W̃), combined with the
/// residual weight as λ + (1 − λ)·σ. The zero-padded layer is a restriction
/// of the circular operator on the padded grid, so the same bound applies.
LipschitzReport lipschitz_bound(const Network& net);
/// Bound of a single LOT layer.
double lot_layer_bound(const LotLayer& layer);

/// top-1 minus top-2 logit; ties give 0.
double margin(std::span<const double> logits);

inline constexpr std::array<double, 3> kDefaultRadii = {36.0 / 255.0, 72.0 / 255.0, 108.0 / 255.0};

struct CertificationResult {
  std::vector<double> logits;
  std::size_t predicted = 0;
  std::optional<std::size_t> label;
  bool correct = true;
  double margin = 0.0;
  double lipschitz = 1.0;
  double radius = 0.0;
  std::vector<double> radii;
  std::vector<bool> certified;  ///< correct && radius > ρ, per entry of `radii`
  bool head_degenerate = false;  ///< LLN certificate met two identical head rows
};

/// r = margin / (√2 · lip). r = 0 when the prediction is wrong.
CertificationResult certified_radius(std::span<const double> logits, double lip_bound,
                                     std::optional<std::size_t> label = std::nullopt,
                                     std::span<const double> radii = kDefaultRadii);

/// Pairwise certificate for a head with unit-norm rows w_j:
/// r = min_{j≠ŷ} (f_ŷ − f_j) / (lip · ‖w_ŷ − w_j‖₂).
CertificationResult certified_radius_lln(std::span<const double> logits, const Tensor& head_rows,
                                         double backbone_lip,
                                         std::optional<std::size_t> label = std::nullopt,
                                         std::span<const double> radii = kDefaultRadii);

/// Certificate of `net` at input x, using the LLN pairwise bound when the
/// head is LLN and the plain formula otherwise.
CertificationResult certify(const Network& net, const LipschitzReport& lip, const Tensor& x,
                            std::optional<std::size_t> label = std::nullopt,
                            std::span<const double> radii = kDefaultRadii);

inline constexpr double kDefaultCregGamma = 0.5;

/// −γ · ReLU((f_y − max_{i≠y} f_i) / √2)
double creg_loss(std::span<const double> logits, std::size_t label, double gamma = kDefaultCregGamma);
double cross_entropy(std::span<const double> logits, std::size_t label);

enum class InitScheme {
  /// Identity for channel-changing layers, Gaussian (std 0.05) for square ones.
  identity_mixed,
  /// Gaussian (std 0.05) everywhere.
  gaussian,
};

struct LipConvNetConfig {
  std::size_t input_channels = 2;
  std::size_t input_side = 8;
  std::size_t width = 4;  ///< even, for MaxMin
  std::size_t blocks = 5;
  std::size_t max_downsamples = 2;
  std::size_t kernel_size = 3;
  std::size_t classes = 2;
  double residual = 0.5;
  Padding padding = Padding::zero;
  HeadType head = HeadType::lln;
  InitScheme init = InitScheme::identity_mixed;
  NewtonOptions newton = {};
  std::uint64_t seed = 0;
};

/// Toy LipConvNet-style stack. Block 0 maps the input to `width` channels;
/// every later block is LOT(width→width, residual) + MaxMin, except those
/// chosen for downsampling, which are space-to-depth + LOT(4·width→width) +
/// MaxMin. Downsampling blocks are spread evenly and limited so the side stays
/// at least 2.
Network make_lipconvnet(const LipConvNetConfig& config);

}  // namespace lot
