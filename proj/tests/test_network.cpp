#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lot/error.hpp"
#include "lot/network.hpp"
#include "oracles.hpp"

using namespace lot;

namespace {

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Tensor random_unit(std::vector<std::size_t> shape, double norm, std::mt19937_64& rng) {
  Tensor t = oracle::random_tensor(std::move(shape), rng);
  const double n = t.norm();
  for (auto& v : t.values()) v *= norm / n;
  return t;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

}  // namespace

TEST_CASE("identity chain network") {
  std::vector<BodyLayer> body;
  body.emplace_back(LotLayer(ConvKernel::identity(1, 1, 1), 2));
  const Tensor head({2, 4}, std::vector<double>{1, 0, 0, 0, 0, 1, 0, 0});
  const Network net({1, 2, 2}, std::move(body), LinearHead{head, HeadType::plain});
  const Tensor x({1, 2, 2}, std::vector<double>{0.25, -1.5, 2.0, 3.0});
  const auto logits = net.forward(x);
  CHECK(logits[0] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(logits[1] == doctest::Approx(-1.5).epsilon(1e-6));
}

TEST_CASE("network forward is non-expansive and batch consistent") {
  LipConvNetConfig cfg;
  cfg.blocks = 3;
  cfg.seed = 61;
  const Network net = make_lipconvnet(cfg);
  std::mt19937_64 rng(62);
  for (int t = 0; t < 20; ++t) {
    const Tensor a = oracle::random_tensor(net.input_shape(), rng), b = oracle::random_tensor(net.input_shape(), rng);
    CHECK(dist(net.forward(a), net.forward(b)) <= (a - b).norm() * (1.0 + 1e-6));
  }
  Tensor batch({3, 2, 8, 8});
  for (auto& v : batch.values()) v = std::normal_distribution<double>(0.0, 1.0)(rng);
  const Tensor out = net.forward_batch(batch);
  const std::size_t per = 2 * 8 * 8;
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor xi({2, 8, 8}, std::vector<double>(batch.values().begin() + i * per, batch.values().begin() + (i + 1) * per));
    const auto li = net.forward(xi);
    for (std::size_t c = 0; c < li.size(); ++c) CHECK(out[i * li.size() + c] == li[c]);
  }
  CHECK_THROWS_AS(net.forward(Tensor({3, 8, 8})), ShapeError);
}

TEST_CASE("network shape validation") {
  std::vector<BodyLayer> body;
  body.emplace_back(LotLayer(ConvKernel::identity(3, 2, 3), 4));
  body.emplace_back(MaxMinLayer{});
  CHECK_THROWS_AS(Network({2, 4, 4}, body, std::nullopt), ShapeError);
  std::vector<BodyLayer> body2;
  body2.emplace_back(DownsampleLayer{});
  CHECK_THROWS_AS(Network({1, 3, 3}, body2, std::nullopt), ShapeError);
  CHECK_THROWS_AS(Network({1, 4, 4}, body2, LinearHead{Tensor({2, 5}), HeadType::plain}), ShapeError);
  const Network ok({1, 4, 4}, body2, LinearHead{Tensor({2, 16}, 1.0), HeadType::plain});
  CHECK(ok.shapes().back() == std::vector<std::size_t>{4, 2, 2});
  CHECK(ok.classes() == 2);
}

TEST_CASE("margin") {
  const double a[] = {3.0, 1.0}, b[] = {1.0, 1.0}, c[] = {0.2, 0.9, 0.5};
  CHECK(margin(a) == 2.0);
  CHECK(margin(b) == 0.0);
  CHECK(margin(c) == doctest::Approx(0.4));
  const double one[] = {1.0};
  CHECK_THROWS_AS(margin(one), InvalidArgument);
}

TEST_CASE("certified_radius") {
  const double l[] = {3.0, 1.0};
  const auto r = certified_radius(l, 1.0);
  CHECK(r.radius == doctest::Approx(std::numbers::sqrt2));
  const double tie[] = {1.0, 1.0};
  CHECK(certified_radius(tie, 1.0).radius == 0.0);

  const double close[] = {0.5, 0.3};
  const auto c = certified_radius(close, 1.0, 0);
  CHECK(c.radius == doctest::Approx(0.2 / std::numbers::sqrt2));
  CHECK(c.certified == std::vector<bool>{true, false, false});

  const auto wrong = certified_radius(l, 1.0, 1);
  CHECK_FALSE(wrong.correct);
  CHECK(wrong.radius == 0.0);
  CHECK(wrong.certified == std::vector<bool>{false, false, false});
  CHECK_THROWS_AS(certified_radius(l, 0.0), InvalidArgument);

  // Scaling logits and the bound together leaves flags unchanged; scaling
  // logits alone scales the radius.
  const double scaled[] = {6.0, 2.0};
  CHECK(certified_radius(scaled, 1.0).radius == doctest::Approx(2.0 * r.radius));
  CHECK(certified_radius(scaled, 2.0).certified == r.certified);
  const double bigger[] = {4.0, 1.0};
  CHECK(certified_radius(bigger, 1.0).radius >= r.radius);
}

TEST_CASE("certified_radius_lln") {
  const Tensor ortho({2, 3}, std::vector<double>{1, 0, 0, 0, 1, 0});
  const double l[] = {3.0, 1.0};
  CHECK(certified_radius_lln(l, ortho, 1.0).radius == doctest::Approx(certified_radius(l, 1.0).radius));

  const Tensor dup({2, 2}, std::vector<double>{1, 0, 1, 0});
  const double same[] = {0.7, 0.7};
  const auto d = certified_radius_lln(same, dup, 1.0);
  CHECK(d.head_degenerate);
  CHECK(d.radius == 0.0);

  const Tensor non_unit({2, 2}, std::vector<double>{2, 0, 0, 1});
  CHECK_THROWS_AS(certified_radius_lln(l, non_unit, 1.0), InvalidArgument);

  // Sampling falsification on a unit-row head over random features.
  std::mt19937_64 rng(63);
  const Tensor rows = last_layer_normalize(oracle::random_tensor({4, 6}, rng));
  for (int t = 0; t < 20; ++t) {
    const Tensor f = oracle::random_tensor({6}, rng);
    auto logits_of = [&](const Tensor& x) {
      std::vector<double> out(4, 0.0);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 6; ++j) out[i] += rows[i * 6 + j] * x[j];
      return out;
    };
    const auto lf = logits_of(f);
    const auto cert = certified_radius_lln(lf, rows, 1.0);
    for (int s = 0; s < 100; ++s) {
      const auto lp = logits_of(f + random_unit({6}, 0.99 * cert.radius, rng));
      CHECK(std::distance(lp.begin(), std::max_element(lp.begin(), lp.end())) ==
            static_cast<long>(cert.predicted));
    }
  }
}

TEST_CASE("creg_loss") {
  const double l[] = {3.0, 1.0};
  CHECK(creg_loss(l, 0, 0.5) == doctest::Approx(-std::numbers::sqrt2 / 2.0));
  CHECK(creg_loss(l, 1, 0.5) == 0.0);
  CHECK(creg_loss(l, 0, 0.0) == 0.0);
  CHECK_THROWS_AS(creg_loss(l, 0, -1.0), InvalidArgument);
}

TEST_CASE("lipschitz_bound") {
  LipConvNetConfig cfg;
  cfg.blocks = 4;
  cfg.seed = 64;
  cfg.head = HeadType::plain;
  cfg.newton = {60, 1e-12};
  const Network net = make_lipconvnet(cfg);
  const auto rep = lipschitz_bound(net);
  CHECK(rep.total >= 0.999);
  CHECK(rep.total <= 1.0 + 1e-6);

  const double d[] = {2.0, 2.0};
  Tensor diag({2, 2}, std::vector<double>{2, 0, 0, 2});
  const Network lin({2, 1, 1}, {}, LinearHead{diag, HeadType::plain});
  CHECK(lipschitz_bound(lin).total == doctest::Approx(2.0));
  (void)d;
  const Network empty({1, 2, 2}, {}, std::nullopt);
  CHECK(lipschitz_bound(empty).total == 1.0);

  LipConvNetConfig small = cfg;
  small.blocks = 2;
  small.head = HeadType::plain;
  const Network first = make_lipconvnet(small);
  std::vector<BodyLayer> tail_body;
  tail_body.emplace_back(LotLayer(ConvKernel::gaussian(4, 4, 2, 1.0, 65), 4, Padding::zero, std::nullopt, {3, 0.0}));
  const Network second(first.shapes().back(), std::move(tail_body), first.head());
  const Network both = concatenate(Network(first.input_shape(), first.body(), std::nullopt), second);
  const auto a = lipschitz_bound(Network(first.input_shape(), first.body(), std::nullopt));
  const auto b = lipschitz_bound(second);
  CHECK(lipschitz_bound(both).total == a.total * b.total);
}

TEST_CASE("make_lipconvnet layout") {
  LipConvNetConfig cfg;
  cfg.blocks = 5;
  const Network net = make_lipconvnet(cfg);
  std::size_t downs = 0, lots = 0;
  for (const auto& l : net.body()) {
    downs += std::holds_alternative<DownsampleLayer>(l);
    lots += std::holds_alternative<LotLayer>(l);
  }
  CHECK(lots == 5);
  CHECK(downs == 2);
  CHECK(net.shapes().back() == std::vector<std::size_t>{4, 2, 2});
  CHECK(net.head()->type == HeadType::lln);

  // Channel-changing layers start at the identity, square ones are random.
  const auto& first = std::get<LotLayer>(net.body()[0]);
  CHECK(first.params().values() == ConvKernel::identity(4, 2, 3).values());
  const LotLayer* square = nullptr;
  for (const auto& l : net.body())
    if (const auto* p = std::get_if<LotLayer>(&l); p && p->c_in() == p->c_out()) square = p;
  REQUIRE(square != nullptr);
  CHECK(square->residual().has_value());
  CHECK(square->params().values() != ConvKernel::identity(4, 4, 3).values());

  cfg.width = 3;
  CHECK_THROWS_AS(make_lipconvnet(cfg), InvalidArgument);
}

TEST_CASE("certify on a network uses the head-appropriate bound") {
  LipConvNetConfig cfg;
  cfg.blocks = 2;
  cfg.seed = 66;
  const Network lln = make_lipconvnet(cfg);
  const auto rep = lipschitz_bound(lln);
  std::mt19937_64 rng(67);
  const Tensor x = oracle::random_tensor(lln.input_shape(), rng);
  const auto c = certify(lln, rep, x);
  const auto logits = lln.forward(x);
  CHECK(c.radius == doctest::Approx(certified_radius_lln(logits, lln.head()->effective(), rep.backbone).radius));
}
