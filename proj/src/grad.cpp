#include "lot/grad.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>

#include "lot/error.hpp"
#include "lot/parallel.hpp"

namespace lot::grad {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ComplexMatrix three_minus(const ComplexMatrix& zy) {
  ComplexMatrix t = -1.0 * zy;
  for (std::size_t i = 0; i < t.rows(); ++i) t(i, i) += 3.0;
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Kernel orthogonalisation

KernelTape record_kernel(const LotLayer& layer) {
  const FrequencyKernel fk = layer.frequency_kernel();
  KernelTape tape;
  tape.w = FrequencyKernel(fk.side(), fk.c_out(), fk.c_in());
  tape.pixels.resize(fk.pixel_count());
  std::vector<std::exception_ptr> failures(fk.pixel_count());
  parallel_for(fk.pixel_count(), [&](std::size_t p) {
    try {
      PixelTape& pt = tape.pixels[p];
      pt.v = fk.pixel(p);
      pt.gram_norm = frobenius_norm(matmul_adjoint_right(pt.v, pt.v));
      // Same sequence of operations as orthogonalize_pixel, so W̃ is bit-identical.
      pt.scaled = rescale(pt.v);
      pt.left = uses_left_gram(pt.scaled);
      const ComplexMatrix gram = hermitian_part(orthogonalization_gram(pt.scaled));
      check_gram_rank(gram);
      const NewtonResult nr = newton_inverse_sqrt(gram, layer.newton(),
                                                  [&pt](const NewtonState& s) { pt.states.push_back(s); });
      tape.w.pixel(p) = pt.left ? matmul(nr.inv_sqrt, pt.scaled) : matmul(pt.scaled, nr.inv_sqrt);
    } catch (...) {
      failures[p] = std::current_exception();
    }
  });
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  tape.w.set_orthogonalized(true);
  return tape;
}

ComplexMatrix pixel_backward(const PixelTape& tape, const ComplexMatrix& grad_w) {
  const auto& states = tape.states;
  const ComplexMatrix& vhat = tape.scaled;
  const ComplexMatrix& z_final = states.back().z;

  ComplexMatrix g_z;
  ComplexMatrix g_vhat;
  if (tape.left) {  // W = Z·V̂
    g_z = matmul_adjoint_right(grad_w, vhat);
    g_vhat = matmul_adjoint_left(z_final, grad_w);
  } else {  // W = V̂·Z
    g_z = matmul_adjoint_left(vhat, grad_w);
    g_vhat = matmul_adjoint_right(grad_w, z_final);
  }

  const std::size_t n = z_final.rows();
  ComplexMatrix g_y(n, n);
  for (std::size_t k = states.size() - 1; k-- > 0;) {
    const NewtonState& s = states[k];
    const ComplexMatrix t = three_minus(s.zy);
    ComplexMatrix g_t = matmul_adjoint_left(s.y, g_y) + matmul_adjoint_right(g_z, s.z);
    g_t *= 0.5;
    ComplexMatrix g_y_prev = matmul_adjoint_right(g_y, t);
    g_y_prev *= 0.5;
    g_y_prev -= matmul_adjoint_left(s.z, g_t);
    ComplexMatrix g_z_prev = matmul_adjoint_left(t, g_z);
    g_z_prev *= 0.5;
    g_z_prev -= matmul_adjoint_right(g_t, s.y);
    g_y = std::move(g_y_prev);
    g_z = std::move(g_z_prev);
  }

  // Y₀ is the symmetrised Gram matrix; Z₀ = I carries no gradient.
  const ComplexMatrix g_gram = hermitian_part(g_y);
  ComplexMatrix twice = g_gram;
  twice *= 2.0;
  g_vhat += tape.left ? matmul(twice, vhat) : matmul(vhat, twice);

  // V̂ = Ṽ·β with β = ‖ṼṼ*‖_F^{-1/2}.
  const double s = tape.gram_norm;
  const double beta = 1.0 / std::sqrt(s);
  ComplexMatrix g_v = g_vhat;
  g_v *= beta;
  const double g_beta = real_inner(g_vhat, tape.v);
  const double g_s = g_beta * -0.5 * beta / s;
  ComplexMatrix g_b = matmul_adjoint_right(tape.v, tape.v);
  g_b *= 2.0 * g_s / s;
  g_v += matmul(g_b, tape.v);
  return g_v;
}

ConvKernel kernel_backward(const LotLayer& layer, const KernelTape& tape, const FrequencyKernel& grad_w) {
  const std::size_t s = layer.transform_side();
  const std::size_t k = layer.params().k();
  const std::size_t c = layer.params().center();
  if (grad_w.side() != s || grad_w.pixel_count() != tape.pixels.size())
    throw ShapeError("kernel_backward: gradient does not match the tape");

  std::vector<ComplexMatrix> g_pixels(tape.pixels.size());
  parallel_for(tape.pixels.size(),
               [&](std::size_t p) { g_pixels[p] = pixel_backward(tape.pixels[p], grad_w.pixel(p)); });

  ConvKernel g(layer.c_out(), layer.c_in(), k);
  const double scale = static_cast<double>(s * s);
  spectral::FrequencyPlane plane(s);
  for (std::size_t j = 0; j < layer.c_out(); ++j)
    for (std::size_t i = 0; i < layer.c_in(); ++i) {
      for (std::size_t p = 0; p < s * s; ++p) plane.entries[p] = g_pixels[p](j, i);
      const auto spatial = spectral::idft2d(plane);
      for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < k; ++v)
          g(j, i, u, v) = scale * spatial((u + s - c) % s, (v + s - c) % s).real();
    }
  return g;
}

Tensor apply_backward(const LotLayer& layer, const FrequencyKernel& w,
                      const std::vector<spectral::FrequencyPlane>& x_spectra, const Tensor& upstream,
                      FrequencyKernel& grad_w) {
  const std::size_t s = layer.transform_side();
  const std::size_t off = layer.offset();
  const std::size_t side = layer.input_side();
  const std::size_t c_out = layer.c_out();
  const std::size_t c_in = layer.c_in();
  if (upstream.rank() != 3 || upstream.dim(0) != c_out || upstream.dim(1) != side || upstream.dim(2) != side)
    throw ShapeError("apply_backward: upstream gradient has the wrong shape");

  const double lambda = layer.residual().value_or(0.0);
  const double conv_weight = layer.residual() ? 1.0 - lambda : 1.0;
  const double inv_area = 1.0 / static_cast<double>(s * s);

  std::vector<spectral::FrequencyPlane> g_y(c_out);
  for (std::size_t j = 0; j < c_out; ++j) {
    spectral::FrequencyPlane plane(s);
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t col = 0; col < side; ++col)
        plane(r + off, col + off) = conv_weight * upstream.at(j, r, col);
    g_y[j] = spectral::dft2d(plane);
    for (auto& e : g_y[j].entries) e *= inv_area;
  }

  std::vector<spectral::FrequencyPlane> g_x(c_in, spectral::FrequencyPlane(s));
  for (std::size_t p = 0; p < s * s; ++p) {
    const ComplexMatrix& wp = w.pixel(p);
    ComplexMatrix& gp = grad_w.pixel(p);
    for (std::size_t j = 0; j < c_out; ++j) {
      const Complex gy = g_y[j].entries[p];
      for (std::size_t i = 0; i < c_in; ++i) {
        gp(j, i) += gy * std::conj(x_spectra[i].entries[p]);
        g_x[i].entries[p] += std::conj(wp(j, i)) * gy;
      }
    }
  }

  Tensor out({c_in, side, side});
  const double area = static_cast<double>(s * s);
  for (std::size_t i = 0; i < c_in; ++i) {
    const auto spatial = spectral::idft2d(g_x[i]);
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t col = 0; col < side; ++col)
        out.at(i, r, col) = area * spatial(r + off, col + off).real();
  }
  if (layer.residual()) {
    for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] += lambda * upstream[idx];
  }
  return out;
}

LotLayerGrad vjp_lot_layer(const LotLayer& layer, const Tensor& x, const Tensor& upstream) {
  const KernelTape tape = record_kernel(layer);
  const auto spectra = layer.input_spectra(x);
  FrequencyKernel grad_w(layer.transform_side(), layer.c_out(), layer.c_in());
  Tensor grad_x = apply_backward(layer, tape.w, spectra, upstream, grad_w);
  return {kernel_backward(layer, tape, grad_w), std::move(grad_x)};
}

// ---------------------------------------------------------------------------
// Network tape

std::vector<std::optional<KernelTape>> Tape::record_kernels(const Network& net) {
  std::vector<std::optional<KernelTape>> out(net.body().size());
  for (std::size_t i = 0; i < net.body().size(); ++i)
    if (const auto* l = std::get_if<LotLayer>(&net.body()[i])) out[i] = record_kernel(*l);
  return out;
}

Tape Tape::record(const Network& net, const std::vector<std::optional<KernelTape>>& kernels,
                  const Tensor& x) {
  if (kernels.size() != net.body().size()) throw ShapeError("Tape: kernel record does not match network");
  if (x.shape() != net.input_shape()) throw ShapeError("Tape: input does not match network");
  Tape tape;
  tape.activations_.push_back(x);
  tape.spectra_.resize(net.body().size());
  for (std::size_t idx = 0; idx < net.body().size(); ++idx) {
    const Tensor& h = tape.activations_.back();
    Tensor next = std::visit(
        overloaded{
            [&](const LotLayer& l) {
              tape.spectra_[idx] = l.input_spectra(h);
              Tensor conv = l.crop_output(l.apply_spectra(kernels[idx]->w, tape.spectra_[idx]));
              return l.residual() ? residual_combine(h, conv, *l.residual()) : conv;
            },
            [&](const MaxMinLayer&) { return maxmin_activation(h); },
            [&](const DownsampleLayer&) { return invertible_downsample(h); },
        },
        net.body()[idx]);
    tape.activations_.push_back(std::move(next));
  }
  const Tensor& features = tape.activations_.back();
  tape.logits_ = net.head() ? apply_head(*net.head(), features) : features.values();
  return tape;
}

std::vector<double> Tape::replay(const Network& net,
                                 const std::vector<std::optional<KernelTape>>& kernels) const {
  return record(net, kernels, input()).logits();
}

struct NetworkBackward {
  static NetworkGradients run(const Network& net, const std::vector<std::optional<KernelTape>>& kernels,
                              const Tape& tape, const std::vector<double>& grad_logits) {
    NetworkGradients out;
    out.grad_w.resize(net.body().size());
    const Tensor& features = tape.activations_.back();

    Tensor g(features.shape());
    if (net.head()) {
      const LinearHead& head = *net.head();
      const Tensor m = head.effective();
      const std::size_t rows = m.dim(0);
      const std::size_t cols = m.dim(1);
      if (grad_logits.size() != rows) throw ShapeError("backward: gradient does not match logits");
      Tensor g_m({rows, cols});
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          g_m[r * cols + c] = grad_logits[r] * features[c];
          g[c] += m[r * cols + c] * grad_logits[r];
        }
      if (head.type == HeadType::lln) {
        // u = w/‖w‖  ⇒  dL/dw = (dL/du − u·⟨u, dL/du⟩)/‖w‖, row by row.
        Tensor g_w({rows, cols});
        for (std::size_t r = 0; r < rows; ++r) {
          double n2 = 0.0;
          double proj = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            n2 += head.weights[r * cols + c] * head.weights[r * cols + c];
            proj += m[r * cols + c] * g_m[r * cols + c];
          }
          const double n = std::sqrt(n2);
          for (std::size_t c = 0; c < cols; ++c)
            g_w[r * cols + c] = (g_m[r * cols + c] - m[r * cols + c] * proj) / n;
        }
        out.grad_head = std::move(g_w);
      } else {
        out.grad_head = std::move(g_m);
      }
    } else {
      if (grad_logits.size() != g.size()) throw ShapeError("backward: gradient does not match features");
      std::copy(grad_logits.begin(), grad_logits.end(), g.values().begin());
    }

    for (std::size_t idx = net.body().size(); idx-- > 0;) {
      const Tensor& input = tape.activations_[idx];
      g = std::visit(overloaded{
                         [&](const LotLayer& l) {
                           FrequencyKernel gw(l.transform_side(), l.c_out(), l.c_in());
                           Tensor gx = apply_backward(l, kernels[idx]->w, tape.spectra_[idx], g, gw);
                           out.grad_w[idx] = std::move(gw);
                           return gx;
                         },
                         [&](const MaxMinLayer&) {
                           const std::size_t plane = input.size() / input.dim(0);
                           Tensor gx(input.shape());
                           for (std::size_t m = 0; m < input.dim(0) / 2; ++m)
                             for (std::size_t p = 0; p < plane; ++p) {
                               const std::size_t ia = (2 * m) * plane + p;
                               const std::size_t ib = (2 * m + 1) * plane + p;
                               if (input[ia] >= input[ib]) {
                                 gx[ia] = g[ia];
                                 gx[ib] = g[ib];
                               } else {
                                 gx[ia] = g[ib];
                                 gx[ib] = g[ia];
                               }
                             }
                           return gx;
                         },
                         [&](const DownsampleLayer&) { return invertible_upsample(g); },
                     },
                     net.body()[idx]);
    }
    out.grad_input = std::move(g);
    return out;
  }
};

NetworkGradients backward(const Network& net, const std::vector<std::optional<KernelTape>>& kernels,
                          const Tape& tape, const std::vector<double>& grad_logits) {
  return NetworkBackward::run(net, kernels, tape, grad_logits);
}

Loss training_loss(const std::vector<double>& logits, std::size_t label, double gamma) {
  Loss loss;
  loss.value = cross_entropy(logits, label) + creg_loss(logits, label, gamma);
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - top);
  loss.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    loss.grad[i] = std::exp(logits[i] - top) / z - (i == label ? 1.0 : 0.0);

  std::size_t runner_up = label == 0 ? 1 : 0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (i != label && logits[i] > logits[runner_up]) runner_up = i;
  if (logits[label] - logits[runner_up] > 0.0) {
    const double c = gamma / std::numbers::sqrt2;
    loss.grad[label] -= c;
    loss.grad[runner_up] += c;
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Gradient check

namespace {

// `scale` bounds the directional derivative's magnitude; the floor keeps
// derivatives that vanish identically from reporting pure rounding noise.
double rel_error(double a, double b, double scale) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-7 * scale});
}

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

GradcheckReport gradcheck_lot_layer(std::uint64_t seed, std::size_t cases, int steps) {
  constexpr double eps = 1e-5;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto pick = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto fill = [&](std::vector<double>& v) {
    for (auto& x : v) x = normal(rng);
  };

  GradcheckReport report;
  for (std::size_t n = 0; n < cases; ++n) {
    GradcheckCase gc;
    gc.c_out = pick(1, 4);
    gc.c_in = pick(1, 4);
    gc.w = pick(2, 8);
    gc.k = pick(1, std::min<std::size_t>(3, gc.w));
    gc.padding = pick(0, 1) == 0 ? Padding::zero : Padding::circular;
    gc.residual = gc.c_out == gc.c_in && pick(0, 1) == 1;

    ConvKernel v(gc.c_out, gc.c_in, gc.k);
    fill(v.values());
    Tensor x({gc.c_in, gc.w, gc.w});
    fill(x.values());
    Tensor u({gc.c_out, gc.w, gc.w});
    fill(u.values());
    std::vector<double> dv(v.values().size());
    fill(dv);
    Tensor dx(x.shape());
    fill(dx.values());

    const NewtonOptions newton{steps, 0.0};
    const std::optional<double> residual = gc.residual ? std::optional<double>(0.5) : std::nullopt;
    auto objective = [&](const ConvKernel& params, const Tensor& input) {
      const LotLayer layer(params, gc.w, gc.padding, residual, newton);
      return dot(u, layer.forward_with(layer.orthogonalized_kernel(), input));
    };

    const LotLayer layer(v, gc.w, gc.padding, residual, newton);
    const LotLayerGrad g = vjp_lot_layer(layer, x, u);

    ConvKernel vp = v, vm = v;
    for (std::size_t i = 0; i < dv.size(); ++i) {
      vp.values()[i] += eps * dv[i];
      vm.values()[i] -= eps * dv[i];
    }
    const double fd_v = (objective(vp, x) - objective(vm, x)) / (2.0 * eps);
    double an_v = 0.0;
    for (std::size_t i = 0; i < dv.size(); ++i) an_v += g.grad_v.values()[i] * dv[i];

    Tensor xp = x, xm = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] += eps * dx[i];
      xm[i] -= eps * dx[i];
    }
    const double fd_x = (objective(v, xp) - objective(v, xm)) / (2.0 * eps);
    const double an_x = dot(g.grad_x, dx);

    // The layer is 1-Lipschitz in x and degree-0 homogeneous in V.
    const double scale_x = u.norm() * dx.norm();
    const double scale_v = u.norm() * x.norm() * l2(dv) / l2(v.values());
    gc.rel_error_v = rel_error(fd_v, an_v, scale_v);
    gc.rel_error_x = rel_error(fd_x, an_x, scale_x);
    report.max_rel_error = std::max({report.max_rel_error, gc.rel_error_v, gc.rel_error_x});
    report.cases.push_back(gc);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Toy training

Tensor Dataset::sample(std::size_t i) const {
  const std::size_t per = inputs.size() / inputs.dim(0);
  return Tensor({inputs.dim(1), inputs.dim(2), inputs.dim(3)},
                std::vector<double>(inputs.values().begin() + i * per, inputs.values().begin() + (i + 1) * per));
}

Dataset synthetic_quadrant_task(std::size_t samples, std::uint64_t seed) {
  constexpr std::size_t channels = 2, side = 8, quadrant = 4;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.inputs = Tensor({samples, channels, side, side});
  d.labels.resize(samples);
  const std::size_t per = channels * side * side;
  for (std::size_t n = 0; n < samples; ++n) {
    double q = 0.0;
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j) {
          const double v = normal(rng);
          d.inputs[n * per + (c * side + i) * side + j] = v;
          if (i < quadrant && j < quadrant) q += v;
        }
    d.labels[n] = q + 0.5 * normal(rng) > 0.0 ? 1 : 0;
  }
  return d;
}

Network toy_network(std::uint64_t seed, int newton_steps) {
  const NewtonOptions newton{newton_steps, 0.0};
  std::vector<BodyLayer> body;
  body.emplace_back(LotLayer(ConvKernel::identity(8, 2, 3), 8, Padding::zero, std::nullopt, newton));
  body.emplace_back(MaxMinLayer{});
  body.emplace_back(LotLayer(ConvKernel::gaussian(8, 8, 3, 0.05, seed + 1), 8, Padding::zero, 0.5, newton));
  body.emplace_back(MaxMinLayer{});
  body.emplace_back(DownsampleLayer{});
  body.emplace_back(LotLayer(ConvKernel::identity(8, 32, 3), 4, Padding::zero, std::nullopt, newton));
  body.emplace_back(MaxMinLayer{});

  Tensor head({2, 8 * 4 * 4});
  std::mt19937_64 rng(seed ^ 0x7f4a7c159e3779b9ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : head.values()) v = normal(rng);
  return Network({2, 8, 8}, std::move(body), LinearHead{std::move(head), HeadType::lln});
}

namespace {

struct Invariants {
  double residual = 0.0;
  double sigma = 0.0;
};

// Per pixel ‖WW* − I‖_F (or ‖W*W − I‖_F for tall W) and σ_max(W).
Invariants check_invariants(const std::vector<std::optional<KernelTape>>& kernels) {
  Invariants inv;
  for (const auto& k : kernels) {
    if (!k) continue;
    for (const auto& w : k->w.pixels()) {
      const bool wide = w.rows() <= w.cols();
      const double r = identity_residual(wide ? matmul_adjoint_right(w, w) : matmul_adjoint_left(w, w));
      inv.residual = std::max(inv.residual, r);
      inv.sigma = std::max(inv.sigma, max_singular_value(w));
    }
  }
  return inv;
}

}  // namespace

TrainingReport train(Network net, const Dataset& data, const TrainConfig& cfg) {
  if (cfg.batch == 0) throw InvalidArgument("train: batch size must be positive");
  const std::size_t n = data.size();
  const std::size_t layers = net.body().size();

  std::vector<std::vector<double>> velocity(layers);
  for (std::size_t i = 0; i < layers; ++i)
    if (const auto* l = std::get_if<LotLayer>(&net.body()[i])) velocity[i].assign(l->params().values().size(), 0.0);
  std::vector<double> head_velocity(net.head() ? net.head()->weights.size() : 0, 0.0);

  TrainingReport report;
  std::mt19937_64 rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  auto kernels = Tape::record_kernels(net);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> sample_loss(n, 0.0);
    Invariants worst = check_invariants(kernels);

    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t count = std::min(cfg.batch, n - start);
      std::vector<NetworkGradients> grads(count);
      std::vector<double> losses(count);
      parallel_for(count, [&](std::size_t b) {
        const std::size_t idx = order[start + b];
        const Tape tape = Tape::record(net, kernels, data.sample(idx));
        const Loss loss = training_loss(tape.logits(), data.labels[idx], cfg.gamma);
        losses[b] = loss.value;
        grads[b] = backward(net, kernels, tape, loss.grad);
      });
      for (std::size_t b = 0; b < count; ++b) sample_loss[order[start + b]] = losses[b];
      if (!std::all_of(losses.begin(), losses.end(), [](double v) { return std::isfinite(v); })) {
        report.diverged = true;
        report.message = "non-finite loss at epoch " + std::to_string(epoch);
        report.network = std::move(net);
        return report;
      }

      const double scale = 1.0 / static_cast<double>(count);
      for (std::size_t i = 0; i < layers; ++i) {
        auto* l = std::get_if<LotLayer>(&net.mutable_body()[i]);
        if (!l) continue;
        FrequencyKernel gw = *grads[0].grad_w[i];
        for (std::size_t b = 1; b < count; ++b)
          for (std::size_t p = 0; p < gw.pixel_count(); ++p) gw.pixel(p) += grads[b].grad_w[i]->pixel(p);
        const ConvKernel gv = kernel_backward(*l, *kernels[i], gw);
        auto& params = l->mutable_params().values();
        for (std::size_t e = 0; e < params.size(); ++e) {
          velocity[i][e] = cfg.momentum * velocity[i][e] + scale * gv.values()[e];
          params[e] -= cfg.lr * velocity[i][e];
        }
      }
      if (net.head()) {
        auto& w = net.mutable_head()->weights.values();
        for (std::size_t e = 0; e < w.size(); ++e) {
          double g = 0.0;
          for (std::size_t b = 0; b < count; ++b) g += (*grads[b].grad_head)[e];
          head_velocity[e] = cfg.momentum * head_velocity[e] + scale * g;
          w[e] -= cfg.lr * head_velocity[e];
        }
      }
      ++report.steps;

      kernels = Tape::record_kernels(net);
      const Invariants inv = check_invariants(kernels);
      worst.residual = std::max(worst.residual, inv.residual);
      worst.sigma = std::max(worst.sigma, inv.sigma);
    }

    EpochStats stats;
    stats.epoch = epoch;
    double total = 0.0;
    for (double v : sample_loss) total += v;
    stats.loss = total / static_cast<double>(n);
    std::vector<int> hit(n, 0);
    parallel_for(n, [&](std::size_t i) {
      const Tape tape = Tape::record(net, kernels, data.sample(i));
      const auto& logits = tape.logits();
      const auto pred = static_cast<std::size_t>(
          std::distance(logits.begin(), std::max_element(logits.begin(), logits.end())));
      hit[i] = pred == data.labels[i] ? 1 : 0;
    });
    std::size_t correct = 0;
    for (int h : hit) correct += static_cast<std::size_t>(h);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    stats.max_orthogonality_residual = worst.residual;
    stats.max_sigma = worst.sigma;
    report.epochs.push_back(stats);
  }
  report.network = std::move(net);
  return report;
}

TrainingReport train_toy(const TrainConfig& cfg) {
  return train(toy_network(cfg.seed, cfg.newton_steps), synthetic_quadrant_task(cfg.samples, cfg.seed), cfg);
}

}  // namespace lot::grad
