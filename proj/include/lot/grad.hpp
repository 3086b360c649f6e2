#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lot/layers.hpp"
#include "lot/network.hpp"
#include "lot/orthogonalizer.hpp"
#include "lot/spectral.hpp"

namespace lot::grad {

/// Saved intermediates of one pixel's orthogonalisation, enough to run the
/// reverse pass of the executed (finite) Newton recurrence.
struct PixelTape {
  ComplexMatrix v;             ///< Ṽ at this pixel
  double gram_norm = 0.0;      ///< ‖Ṽ·Ṽ*‖_F
  ComplexMatrix scaled;        ///< V̂ = Ṽ / sqrt(gram_norm)
  bool left = true;            ///< Gram V̂·V̂* (else V̂*·V̂)
  std::vector<NewtonState> states;  ///< Y_k, Z_k for k = 0..K
};

/// Orthogonalisation of a whole layer kernel with its reverse-pass record.
struct KernelTape {
  std::vector<PixelTape> pixels;
  FrequencyKernel w;  ///< W̃, bit-identical to LotLayer::orthogonalized_kernel()
};

KernelTape record_kernel(const LotLayer& layer);

/// dL/dW̃ (per pixel) → dL/dV for the layer's real kernel.
ConvKernel kernel_backward(const LotLayer& layer, const KernelTape& tape, const FrequencyKernel& grad_w);

/// dL/dW̃ at one pixel → dL/dṼ at that pixel.
ComplexMatrix pixel_backward(const PixelTape& tape, const ComplexMatrix& grad_w);

/// Reverse pass of the frequency-domain application for one input. Adds
/// dL/dW̃ into grad_w and returns dL/dx (including the residual branch).
Tensor apply_backward(const LotLayer& layer, const FrequencyKernel& w,
                      const std::vector<spectral::FrequencyPlane>& x_spectra, const Tensor& upstream,
                      FrequencyKernel& grad_w);

struct LotLayerGrad {
  ConvKernel grad_v;
  Tensor grad_x;
};

/// Vector-Jacobian product of the full layer (orthogonalisation included).
LotLayerGrad vjp_lot_layer(const LotLayer& layer, const Tensor& x, const Tensor& upstream);

// ---------------------------------------------------------------------------
// Network-level tape

/// Forward record of one input through a network whose kernels were recorded
/// once. Replaying recomputes the forward from the saved input.
class Tape {
 public:
  /// Records the kernels of every LOT layer of `net`.
  static std::vector<std::optional<KernelTape>> record_kernels(const Network& net);

  static Tape record(const Network& net, const std::vector<std::optional<KernelTape>>& kernels,
                     const Tensor& x);

  const Tensor& input() const noexcept { return activations_.front(); }
  const std::vector<Tensor>& activations() const noexcept { return activations_; }
  const std::vector<double>& logits() const noexcept { return logits_; }

  /// Re-runs the forward from the saved input; equals logits() bit for bit.
  std::vector<double> replay(const Network& net,
                             const std::vector<std::optional<KernelTape>>& kernels) const;

  friend struct NetworkBackward;

 private:
  std::vector<Tensor> activations_;  ///< input of each body layer, then the features
  std::vector<std::vector<spectral::FrequencyPlane>> spectra_;  ///< per body layer (LOT only)
  std::vector<double> logits_;
};

/// Gradients w.r.t. every trainable parameter of a network.
struct NetworkGradients {
  std::vector<std::optional<FrequencyKernel>> grad_w;  ///< per body layer (LOT only)
  std::optional<Tensor> grad_head;
  Tensor grad_input;
};

/// Reverse pass for one input given dL/dlogits.
NetworkGradients backward(const Network& net, const std::vector<std::optional<KernelTape>>& kernels,
                          const Tape& tape, const std::vector<double>& grad_logits);

struct Loss {
  double value = 0.0;
  std::vector<double> grad;  ///< dL/dlogits
};

/// Cross-entropy plus CReg (γ) and its gradient.
Loss training_loss(const std::vector<double>& logits, std::size_t label, double gamma);

// ---------------------------------------------------------------------------
// Finite-difference validation

struct GradcheckCase {
  std::size_t c_out = 0, c_in = 0, k = 0, w = 0;
  Padding padding = Padding::zero;
  bool residual = false;
  double rel_error_v = 0.0;
  double rel_error_x = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_rel_error = 0.0;
  bool passed(double tol = 1e-4) const noexcept { return max_rel_error <= tol; }
};

/// Directional derivatives of L = ⟨u, f(V, x)⟩ by central differences
/// (ε = 1e-5) against the reverse-mode gradient, on seeded random layers
/// with c ≤ 4, w ≤ 8, k ≤ 3 and exactly `steps` Newton updates.
GradcheckReport gradcheck_lot_layer(std::uint64_t seed, std::size_t cases, int steps = kDefaultNewtonSteps);

// ---------------------------------------------------------------------------
// Toy training

struct Dataset {
  Tensor inputs;                   ///< n × c × w × w
  std::vector<std::size_t> labels; ///< n entries
  std::size_t size() const noexcept { return labels.size(); }
  Tensor sample(std::size_t i) const;
};

/// 2 × 8 × 8 inputs with i.i.d. N(0,1) pixels; the label is the sign of the
/// total intensity of the top-left 4×4 quadrant (both channels) plus N(0, 0.5²)
/// noise.
Dataset synthetic_quadrant_task(std::size_t samples, std::uint64_t seed);

/// Newton steps of the toy network and its training loop.
inline constexpr int kToyNewtonSteps = 30;

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t samples = 512;
  std::size_t epochs = 30;
  std::size_t batch = 32;
  double lr = 0.05;
  double momentum = 0.9;
  double gamma = kDefaultCregGamma;
  int newton_steps = kToyNewtonSteps;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;          ///< mean training loss during the epoch
  double accuracy = 0.0;      ///< train accuracy after the epoch
  double max_orthogonality_residual = 0.0;  ///< over every step of the epoch
  double max_sigma = 0.0;
};

struct TrainingReport {
  std::vector<EpochStats> epochs;
  std::size_t steps = 0;
  bool diverged = false;
  std::string message;
  Network network;
  double final_accuracy() const noexcept { return epochs.empty() ? 0.0 : epochs.back().accuracy; }
};

/// Default toy network for the synthetic task: LOT(2→8) + MaxMin,
/// LOT(8→8, λ = 0.5) + MaxMin, space-to-depth, LOT(32→8) + MaxMin, LLN head.
Network toy_network(std::uint64_t seed, int newton_steps = kToyNewtonSteps);

/// Momentum SGD on cross-entropy + CReg. Deterministic for a given config.
TrainingReport train_toy(const TrainConfig& config);
TrainingReport train(Network net, const Dataset& data, const TrainConfig& config);

}  // namespace lot::grad
