#include <doctest.h>

#include <cmath>

#include "mcl/paramset.hpp"
#include "mcl/tensor.hpp"
#include "test_util.hpp"

using namespace mcl;
using testutil::random_tensor;

namespace {

// Two-layer tanh MLP loss used by several gradient checks.
double mlp_loss(Graph& g, const ParamSet& p, const Tensor& x,
                const Tensor& target, Tensor* out_loss = nullptr) {
  Tensor h = ops::tanh(g, ops::add(g, ops::matmul(g, x, g.leaf(p.at("w1"))),
                                   g.leaf(p.at("b1"))));
  Tensor y = ops::add(g, ops::matmul(g, h, g.leaf(p.at("w2"))),
                      g.leaf(p.at("b2")));
  Tensor l = ops::mse(g, y, target);
  if (out_loss) *out_loss = l;
  return l.item();
}

ParamSet random_mlp(std::uint64_t key) {
  ParamSet p;
  p.add("w1", random_tensor({3, 4}, rng::derive(key, 1)));
  p.add("b1", random_tensor({4}, rng::derive(key, 2), 0.2));
  p.add("w2", random_tensor({4, 2}, rng::derive(key, 3)));
  p.add("b2", random_tensor({2}, rng::derive(key, 4), 0.2));
  return p;
}

} // namespace

TEST_CASE("softmax cross-entropy of uniform logits is ln C") {
  Graph g;
  Tensor logits({3, 4});
  Tensor l = ops::softmax_cross_entropy(g, logits, {0, 1, 3});
  CHECK(l.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("mse of a tensor with itself is zero") {
  Graph g;
  Tensor x = random_tensor({5, 3}, 7);
  CHECK(ops::mse(g, x, x).item() == 0.0);
}

TEST_CASE("matmul with identity") {
  Graph g;
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor c = ops::matmul(g, a, eye);
  for (int i = 0; i < 4; ++i) CHECK(c.data()[i] == a.data()[i]);
}

TEST_CASE("backward of x*y") {
  Graph g;
  Tensor x = Tensor::scalar(3.0), y = Tensor::scalar(5.0);
  ParamSet p;
  p.add("x", x);
  p.add("y", y);
  Tensor f = ops::mul(g, g.leaf(x), g.leaf(y));
  GradMap grads = backward(g, f, p);
  CHECK(grads.at("x").item() == 5.0);
  CHECK(grads.at("y").item() == 3.0);
}

TEST_CASE("cross-entropy gradient equals softmax minus one-hot") {
  const std::size_t b = 4, c = 5;
  Tensor logits = random_tensor({(int)b, (int)c}, 11, 2.0);
  std::vector<int> labels = {0, 2, 4, 1};
  ParamSet p;
  p.add("logits", logits);

  Graph g;
  Tensor l = ops::softmax_cross_entropy(g, g.leaf(logits), labels);
  GradMap grads = backward(g, l, p);

  // analytic: (softmax - onehot)/b
  for (std::size_t i = 0; i < b; ++i) {
    const double* row = logits.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < c; ++j) {
      double expect = std::exp(row[j] - mx) / z;
      if ((int)j == labels[i]) expect -= 1.0;
      expect /= b;
      CHECK(grads.at("logits").data()[i * c + j] ==
            doctest::Approx(expect).epsilon(1e-10));
    }
  }

  // numeric cross-check
  auto f = [&](const ParamSet& q) {
    Graph gg;
    return ops::softmax_cross_entropy(gg, gg.leaf(q.at("logits")), labels)
        .item();
  };
  GradMap fd = finite_diff_grad(f, p, 1e-6);
  CHECK(max_rel_err(grads, fd) <= 1e-4);
}

TEST_CASE("cross-entropy logit gradient rows sum to zero") {
  Tensor logits = random_tensor({6, 3}, 13, 3.0);
  ParamSet p;
  p.add("logits", logits);
  Graph g;
  Tensor l = ops::softmax_cross_entropy(g, g.leaf(logits), {0, 1, 2, 0, 1, 2});
  GradMap grads = backward(g, l, p);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    total += grads.at("logits").data()[i];
  CHECK(std::fabs(total) <= 1e-12);
}

TEST_CASE("two-layer tanh MLP matches finite differences") {
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    ParamSet p = random_mlp(100 + trial);
    Tensor x = random_tensor({4, 3}, rng::derive(trial, 9));
    Tensor target = random_tensor({4, 2}, rng::derive(trial, 10));
    Graph g;
    Tensor loss;
    mlp_loss(g, p, x, target, &loss);
    GradMap grads = backward(g, loss, p);
    auto f = [&](const ParamSet& q) {
      Graph gg;
      return mlp_loss(gg, q, x, target);
    };
    GradMap fd = finite_diff_grad(f, p, 1e-6);
    CHECK(max_rel_err(grads, fd) <= 1e-4);
  }
}

TEST_CASE("every primitive passes a randomized finite-difference check") {
  // One param flows through each primitive; 100+ random shapes/seeds.
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int m = 2 + (int)rng::below(rng::derive(seed, 1), 3);
    const int k = 2 + (int)rng::below(rng::derive(seed, 2), 3);
    const int n = 2 + (int)rng::below(rng::derive(seed, 3), 3);
    ParamSet p;
    p.add("a", random_tensor({m, k}, rng::derive(seed, 4)));
    p.add("b", random_tensor({k, n}, rng::derive(seed, 5)));
    p.add("bias", random_tensor({n}, rng::derive(seed, 6)));
    p.add("tab", random_tensor({5, k}, rng::derive(seed, 7)));
    std::vector<int> ids = {0, 2, 4, 1, 3, 2};
    std::vector<double> mask = {1, 1, 0, 1, 0, 0};
    Tensor target({m, 1});
    auto build = [&](Graph& g, const ParamSet& q) {
      Tensor emb = ops::embedding_lookup(g, g.leaf(q.at("tab")), ids, {2, 3});
      Tensor pooled = ops::masked_mean_pool(g, emb, mask); // [2 x k]
      Tensor a = g.leaf(q.at("a"));
      Tensor h = ops::matmul(g, a, g.leaf(q.at("b")));
      h = ops::add(g, h, g.leaf(q.at("bias")));
      h = ops::tanh(g, h);
      h = ops::relu(g, ops::scale(g, h, 1.3));
      Tensor hm = ops::mul(g, h, h);
      Tensor col = ops::mean_axis(g, hm, 1); // [m]
      // fold the pooled branch in so the lookup params matter
      Tensor ps = ops::mean_axis(g, pooled, 1); // [2]
      Tensor pss = ops::mean_axis(g, ps, 0);    // scalar-ish [1]
      Tensor cs = ops::mean_axis(g, col, 0);
      return ops::add(g, cs, pss);
    };
    Graph g;
    Tensor out = build(g, p);
    Tensor loss = ops::mse(g, out, Tensor({1}));
    GradMap grads = backward(g, loss, p);
    auto f = [&](const ParamSet& q) {
      Graph gg;
      Tensor o = build(gg, q);
      return ops::mse(gg, o, Tensor({1})).item();
    };
    GradMap fd = finite_diff_grad(f, p, 1e-6);
    CHECK(max_rel_err(grads, fd) <= 1e-4);
    checked += (int)p.num_coords();
  }
  CHECK(checked >= 100);
}

TEST_CASE("backward is linear in the root") {
  ParamSet p = random_mlp(55);
  Tensor x = random_tensor({3, 3}, 56);
  Tensor target = random_tensor({3, 2}, 57);
  const double a = 2.5, b = -0.75;
  auto run = [&](double ca, double cb) {
    Graph g;
    Tensor l1;
    mlp_loss(g, p, x, target, &l1);
    Tensor sq = ops::mul(g, l1, l1);
    Tensor root = ops::add(g, ops::scale(g, l1, ca), ops::scale(g, sq, cb));
    return backward(g, root, p);
  };
  GradMap gf = run(1.0, 0.0);
  GradMap gg = run(0.0, 1.0);
  GradMap combined = run(a, b);
  for (const auto& [name, t] : combined) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double expect = a * gf.at(name).data()[i] + b * gg.at(name).data()[i];
      CHECK(t.data()[i] == doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("dropout in eval mode is the identity, bit for bit") {
  Graph g;
  Tensor x = random_tensor({7, 9}, 77);
  Tensor y = ops::dropout(g, x, 0.5, 123, Mode::kEval);
  CHECK(y.data() == x.data()); // same storage
}

TEST_CASE("dropout in train mode scales kept entries") {
  Graph g;
  Tensor x({1, 1000});
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = 1.0;
  Tensor y = ops::dropout(g, x, 0.25, 99, Mode::kTrain);
  int kept = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y.data()[i] != 0.0) {
      CHECK(y.data()[i] == doctest::Approx(1.0 / 0.75));
      ++kept;
    }
  }
  CHECK(kept > 600);
  CHECK(kept < 900);
  // same key reproduces the same mask
  Graph g2;
  Tensor y2 = ops::dropout(g2, x, 0.25, 99, Mode::kTrain);
  for (std::size_t i = 0; i < y.size(); ++i)
    CHECK(y.data()[i] == y2.data()[i]);
}

TEST_CASE("finite differences on a quadratic") {
  ParamSet p;
  p.add("p", Tensor({2}, {1.0, 2.0}));
  auto f = [](const ParamSet& q) {
    const Tensor& t = q.at("p");
    return t.data()[0] * t.data()[0] + t.data()[1] * t.data()[1];
  };
  GradMap fd = finite_diff_grad(f, p, 1e-5);
  CHECK(fd.at("p").data()[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(fd.at("p").data()[1] == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("finite differences of a constant function are zero") {
  ParamSet p;
  p.add("p", random_tensor({4}, 3));
  GradMap fd = finite_diff_grad([](const ParamSet&) { return 1.5; }, p, 1e-5);
  for (std::size_t i = 0; i < 4; ++i) CHECK(fd.at("p").data()[i] == 0.0);
}

TEST_CASE("shape errors name the primitive and both shapes") {
  Graph g;
  Tensor a({2, 3}), b({4, 5});
  try {
    ops::matmul(g, a, b);
    CHECK(false);
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
  CHECK_THROWS_AS(ops::add(g, a, b), Error);
  CHECK_THROWS_AS(ops::mul(g, a, b), Error);
}

TEST_CASE("non-finite values are reported") {
  Graph g;
  Tensor a({1, 2}, {1.0, std::numeric_limits<double>::infinity()});
  Tensor b({2, 1}, {1.0, 1.0});
  CHECK_THROWS_AS(ops::matmul(g, a, b), Error);
  CHECK_THROWS_AS(ops::tanh(g, a), Error);
}

TEST_CASE("backward rejects non-scalar roots and double use") {
  Graph g;
  Tensor x = random_tensor({2, 2}, 5);
  Tensor y = ops::tanh(g, g.leaf(x));
  CHECK_THROWS_AS(g.backward(y), Error);
  Graph g2;
  Tensor x2 = Tensor::scalar(0.5);
  Tensor y2 = ops::tanh(g2, g2.leaf(x2));
  Tensor l2 = ops::mse(g2, y2, Tensor::scalar(0.0));
  g2.backward(l2);
  CHECK_THROWS_AS(g2.backward(l2), Error);
}

TEST_CASE("out-of-range class index is rejected") {
  Graph g;
  Tensor logits({2, 3});
  CHECK_THROWS_AS(ops::softmax_cross_entropy(g, logits, {0, 3}), Error);
}
