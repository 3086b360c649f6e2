#include <doctest.h>

#include <cmath>
#include <random>

#include "lot/grad.hpp"
#include "oracles.hpp"

using namespace lot;
using namespace lot::grad;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double objective(const Network& net, const Tensor& x, const std::vector<double>& u) {
  const auto kernels = Tape::record_kernels(net);
  return dot(Tape::record(net, kernels, x).logits(), u);
}

}  // namespace

TEST_CASE("gradcheck on seeded layers") {
  const auto rep = gradcheck_lot_layer(7, 20);
  CHECK(rep.cases.size() == 20);
  CHECK(rep.passed());
  CHECK(rep.max_rel_error < 1e-6);
  bool saw_circular = false, saw_residual = false, saw_rect = false;
  for (const auto& c : rep.cases) {
    saw_circular |= c.padding == Padding::circular;
    saw_residual |= c.residual;
    saw_rect |= c.c_in != c.c_out;
  }
  CHECK(saw_circular);
  CHECK(saw_residual);
  CHECK(saw_rect);
}

TEST_CASE("gradcheck is deterministic") {
  const auto a = gradcheck_lot_layer(3, 4), b = gradcheck_lot_layer(3, 4);
  for (std::size_t i = 0; i < a.cases.size(); ++i) CHECK(a.cases[i].rel_error_v == b.cases[i].rel_error_v);
}

TEST_CASE("recorded kernel matches the layer forward") {
  const LotLayer layer(ConvKernel::gaussian(3, 2, 3, 0.3, 11), 5, Padding::zero, std::nullopt, {10, 0.0});
  const auto tape = record_kernel(layer);
  const auto w = layer.orthogonalized_kernel();
  REQUIRE(tape.w.pixel_count() == w.pixel_count());
  for (std::size_t p = 0; p < w.pixel_count(); ++p) CHECK(tape.w.pixel(p) == w.pixel(p));
}

TEST_CASE("tape replay is bit-identical") {
  const Network net = toy_network(5);
  const auto kernels = Tape::record_kernels(net);
  std::mt19937_64 rng(12);
  const Tensor x = oracle::random_tensor(net.input_shape(), rng);
  const Tape tape = Tape::record(net, kernels, x);
  CHECK(tape.replay(net, kernels) == tape.logits());
  CHECK(tape.logits() == net.forward(x));
}

static void check_network_fd(int steps, double eps, double tol) {
  Network net = toy_network(21, steps);
  // Move every kernel away from its identity start so the check is not trivial.
  std::mt19937_64 rng(22);
  std::normal_distribution<double> nd(0.0, 0.05);
  for (auto& l : net.mutable_body())
    if (auto* p = std::get_if<LotLayer>(&l))
      for (auto& v : p->mutable_params().values()) v += nd(rng);
  const Tensor x = oracle::random_tensor(net.input_shape(), rng);
  std::vector<double> u(net.classes());
  for (auto& v : u) v = nd(rng) * 20.0;

  const auto kernels = Tape::record_kernels(net);
  const Tape tape = Tape::record(net, kernels, x);
  const auto g = backward(net, kernels, tape, u);

  SUBCASE("input") {
    const Tensor d = oracle::random_tensor(net.input_shape(), rng);
    Tensor xp = x, xm = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] += eps * d[i];
      xm[i] -= eps * d[i];
    }
    const double fd = (objective(net, xp, u) - objective(net, xm, u)) / (2 * eps);
    double an = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) an += g.grad_input[i] * d[i];
    CHECK(std::abs(fd - an) <= tol * std::max(1.0, std::abs(fd)));
  }

  SUBCASE("head") {
    REQUIRE(g.grad_head.has_value());
    const Tensor d = oracle::random_tensor(net.head()->weights.shape(), rng);
    Network np = net, nm = net;
    for (std::size_t i = 0; i < d.size(); ++i) {
      np.mutable_head()->weights[i] += eps * d[i];
      nm.mutable_head()->weights[i] -= eps * d[i];
    }
    const double fd = (objective(np, x, u) - objective(nm, x, u)) / (2 * eps);
    double an = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) an += (*g.grad_head)[i] * d[i];
    CHECK(std::abs(fd - an) <= tol * std::max(1.0, std::abs(fd)));
  }

  SUBCASE("kernels") {
    for (std::size_t li = 0; li < net.body().size(); ++li) {
      const auto* layer = std::get_if<LotLayer>(&net.body()[li]);
      if (!layer) continue;
      REQUIRE(g.grad_w[li].has_value());
      const ConvKernel gv = kernel_backward(*layer, *kernels[li], *g.grad_w[li]);
      ConvKernel d = layer->params();
      for (auto& v : d.values()) v = nd(rng);
      Network np = net, nm = net;
      auto& pp = std::get<LotLayer>(np.mutable_body()[li]).mutable_params().values();
      auto& pm = std::get<LotLayer>(nm.mutable_body()[li]).mutable_params().values();
      for (std::size_t i = 0; i < pp.size(); ++i) {
        pp[i] += eps * d.values()[i];
        pm[i] -= eps * d.values()[i];
      }
      const double fd = (objective(np, x, u) - objective(nm, x, u)) / (2 * eps);
      const double an = dot(gv.values(), d.values());
      CAPTURE(li);
      CHECK(std::abs(fd - an) <= tol * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("network backward matches finite differences") { check_network_fd(kDefaultNewtonSteps, 1e-5, 1e-6); }

// More steps sharpen the near-singular pixels, so the objective is strongly
// curved and central differences need a much smaller step.
TEST_CASE("network backward matches finite differences at the toy step count") {
  check_network_fd(kToyNewtonSteps, 1e-7, 1e-4);
}

TEST_CASE("training_loss gradient") {
  const std::vector<double> logits{0.3, -0.2};
  for (double gamma : {0.0, 0.5}) {
    for (std::size_t label : {0u, 1u}) {
      const auto l = training_loss(logits, label, gamma);
      for (std::size_t i = 0; i < logits.size(); ++i) {
        auto p = logits, m = logits;
        p[i] += 1e-6;
        m[i] -= 1e-6;
        const double fd = (training_loss(p, label, gamma).value - training_loss(m, label, gamma).value) / 2e-6;
        CHECK(l.grad[i] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
  // Cross-entropy alone at equal logits.
  CHECK(training_loss({1.0, 1.0}, 0, 0.0).value == doctest::Approx(std::log(2.0)));
}

TEST_CASE("synthetic task is deterministic and balanced") {
  const auto a = synthetic_quadrant_task(200, 4), b = synthetic_quadrant_task(200, 4);
  CHECK(a.inputs.values() == b.inputs.values());
  CHECK(a.labels == b.labels);
  std::size_t ones = 0;
  for (auto l : a.labels) ones += l;
  CHECK(ones > 60);
  CHECK(ones < 140);
  CHECK(a.sample(3).shape() == std::vector<std::size_t>{2, 8, 8});
}

TEST_CASE("short training run keeps the invariants") {
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.samples = 64;
  cfg.epochs = 2;
  cfg.batch = 16;
  const auto rep = train_toy(cfg);
  CHECK_FALSE(rep.diverged);
  REQUIRE(rep.epochs.size() == 2);
  CHECK(rep.steps == 8);
  for (const auto& e : rep.epochs) {
    CHECK(std::isfinite(e.loss));
    CHECK(e.max_sigma <= 1.0 + 1e-6);
  }
  const auto again = train_toy(cfg);
  CHECK(again.epochs.back().loss == rep.epochs.back().loss);
}
