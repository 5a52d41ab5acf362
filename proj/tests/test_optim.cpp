#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mcl/optim.hpp"
#include "test_util.hpp"

using namespace mcl;
using namespace mcl::optim;

namespace {

ParamSet single_param(const Tensor& t) {
  ParamSet p(Role::kPLN);
  p.add("p", t);
  return p;
}

GradMap grad_for(const Tensor& g) {
  GradMap m;
  m["p"] = g;
  return m;
}

// Plain scalar Adam recurrence, kept independent of the library code.
struct ScalarAdamRef {
  double m = 0.0, v = 0.0;
  long t = 0;
  double step(double p, double g, double lr, const AdamHyper& h = {}) {
    ++t;
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g * g;
    const double mh = m / (1.0 - std::pow(h.beta1, t));
    const double vh = v / (1.0 - std::pow(h.beta2, t));
    return p - lr * mh / (std::sqrt(vh) + h.eps);
  }
};

} // namespace

TEST_CASE("sgd_step moves each coordinate by -lr * g") {
  ParamSet p = single_param(Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0}));
  GradMap g = grad_for(Tensor({2, 2}, {0.5, -1.0, 0.0, 2.0}));
  ParamSet q = sgd_step(p, g, 0.1);
  const double expect[] = {0.95, 2.1, 3.0, 3.8};
  for (int i = 0; i < 4; ++i)
    CHECK(q.at("p").data()[i] == doctest::Approx(expect[i]).epsilon(1e-15));
  // inputs untouched
  CHECK(p.at("p").data()[0] == 1.0);
}

TEST_CASE("sgd_step on a quadratic converges to the minimum") {
  // f(x) = (x - 3)^2, gradient 2 (x - 3).
  ParamSet p = single_param(Tensor({1}, {0.0}));
  for (int i = 0; i < 200; ++i) {
    Tensor g({1}, {2.0 * (p.at("p").data()[0] - 3.0)});
    p = sgd_step(p, grad_for(g), 0.1);
  }
  CHECK(p.at("p").data()[0] == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("sgd_step rejects missing or mis-shaped gradients") {
  ParamSet p = single_param(Tensor({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(sgd_step(p, GradMap{}, 0.1), Error);
  CHECK_THROWS_AS(sgd_step(p, grad_for(Tensor({3})), 0.1), Error);
}

TEST_CASE("adam first step has magnitude lr * |g| / (|g| + eps)") {
  ParamSet p = single_param(Tensor({2}, {1.0, -2.0}));
  AdamState st = AdamState::init(p);
  GradMap g = grad_for(Tensor({2}, {0.3, -7.0}));
  auto [q, st1] = adam_step(st, p, g, 0.01);
  for (int i = 0; i < 2; ++i) {
    const double gv = g.at("p").data()[i];
    const double expect = 0.01 * std::fabs(gv) / (std::fabs(gv) + 1e-8);
    CHECK(std::fabs(q.at("p").data()[i] - p.at("p").data()[i]) ==
          doctest::Approx(expect).epsilon(1e-9));
    // step opposes the gradient
    CHECK((q.at("p").data()[i] - p.at("p").data()[i]) * gv < 0.0);
  }
  CHECK(st1.step_count() == 1);
}

TEST_CASE("adam zero gradient is a no-op on the parameters") {
  ParamSet p = single_param(testutil::random_tensor({3}, 11));
  AdamState st = AdamState::init(p);
  auto [q, st1] = adam_step(st, p, grad_for(Tensor({3})), 0.05);
  for (int i = 0; i < 3; ++i)
    CHECK(q.at("p").data()[i] == p.at("p").data()[i]);
  CHECK(st1.step_count() == 1);
}

TEST_CASE("adam matches an independent scalar recurrence over 10 steps") {
  ParamSet p = single_param(Tensor({1}, {0.7}));
  AdamState st = AdamState::init(p);
  ScalarAdamRef ref;
  double x = 0.7;
  for (int i = 0; i < 10; ++i) {
    const double g = 2.0 * (x - 1.5) + 0.1 * std::sin(i); // arbitrary stream
    x = ref.step(x, g, 0.03);
    auto [q, st1] = adam_step(st, p, grad_for(Tensor({1}, {g})), 0.03);
    p = std::move(q);
    st = std::move(st1);
    CHECK(std::fabs(p.at("p").data()[0] - x) <= 1e-12);
  }
}

TEST_CASE("stepping from a superseded adam state is an error") {
  ParamSet p = single_param(Tensor({1}, {0.0}));
  AdamState st = AdamState::init(p);
  GradMap g = grad_for(Tensor({1}, {1.0}));
  auto [q, st1] = adam_step(st, p, g, 0.01);
  CHECK_THROWS_AS(adam_step(st, p, g, 0.01), Error); // stale
  auto [r, st2] = adam_step(st1, q, g, 0.01);        // newest is fine
  CHECK(st2.step_count() == 2);
}

TEST_CASE("adam is deterministic and does not mutate inputs") {
  ParamSet p = single_param(testutil::random_tensor({4}, 21));
  GradMap g = grad_for(testutil::random_tensor({4}, 22));
  const double before = p.at("p").data()[2];
  auto [a, sa] = adam_step(AdamState::init(p), p, g, 0.02);
  auto [b, sb] = adam_step(AdamState::init(p), p, g, 0.02);
  for (int i = 0; i < 4; ++i)
    CHECK(a.at("p").data()[i] == b.at("p").data()[i]);
  CHECK(p.at("p").data()[2] == before);
}

TEST_CASE("cosine schedule endpoints, midpoint, and monotonicity") {
  CosineSchedule s{1.0, 0.1, 10};
  CHECK(cosine_lr(s, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_lr(s, 10) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(cosine_lr(s, 5) == doctest::Approx(0.55).epsilon(1e-12));
  double prev = cosine_lr(s, 0);
  for (int i = 1; i <= 10; ++i) {
    const double cur = cosine_lr(s, i);
    CHECK(cur < prev);
    prev = cur;
  }
  // closed form at an off-center step
  const double expect =
      0.1 + 0.5 * 0.9 * (1.0 + std::cos(std::numbers::pi * 3.0 / 10.0));
  CHECK(cosine_lr(s, 3) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("cosine schedule rejects invalid inputs") {
  CHECK_THROWS_AS(cosine_lr({1.0, 0.1, 10}, -1), Error);
  CHECK_THROWS_AS(cosine_lr({1.0, 0.1, 10}, 11), Error);
  CHECK_THROWS_AS(cosine_lr({0.0, 0.0, 10}, 0), Error);
  CHECK_THROWS_AS(cosine_lr({1.0, 0.1, 0}, 0), Error);
  CHECK_THROWS_AS(cosine_lr({1.0, 2.0, 10}, 0), Error); // min above max
}
