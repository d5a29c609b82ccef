#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gradcheck.hpp"
#include "hippd/autograd.hpp"
#include "hippd/parameter_store.hpp"
#include "hippd/rng.hpp"
#include "hippd/tensor.hpp"

using namespace hippd;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("softmax") {
  auto half = softmax(Tensor::vector({0.0, 0.0}));
  CHECK(half[0] == doctest::Approx(0.5));
  CHECK(half[1] == doctest::Approx(0.5));

  for (double c : {-50.0, 0.0, 3.5, 700.0}) {
    auto third = softmax(Tensor::vector({c, c, c}));
    for (double v : third.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  // exp(k) / (e + e^2 + e^3), evaluated independently in double precision.
  auto p = softmax(Tensor::vector({1.0, 2.0, 3.0}));
  CHECK(p[0] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.24472847105479767).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(0.6652409557748219).epsilon(1e-12));

  CHECK_THROWS_AS(softmax(Tensor()), std::invalid_argument);
}

TEST_CASE("softmax sums to one and is shift invariant") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(12);
    auto v = random_tensor({n}, rng, -30.0, 30.0);
    auto p = softmax(v);
    double total = std::accumulate(p.values().begin(), p.values().end(), 0.0);
    CHECK(std::abs(total - 1.0) < 1e-9);
    const double shift = rng.uniform(-100.0, 100.0);
    Tensor shifted = v;
    for (auto& x : shifted.values()) x += shift;
    CHECK(max_abs_difference(softmax(shifted), p) < 1e-12);
  }
}

TEST_CASE("elementwise operations") {
  CHECK(apply(UnaryOp::sigmoid, Tensor::scalar(0.0)).item() == 0.5);
  CHECK(apply(UnaryOp::tanh, Tensor::scalar(0.0)).item() == 0.0);
  CHECK(clamp(Tensor::scalar(1.3), 0.0, 1.0).item() == 1.0);
  CHECK(apply(BinaryOp::add, Tensor::vector({1, 2}), Tensor::vector({3, 4})) == Tensor::vector({4, 6}));
  CHECK(apply(BinaryOp::multiply, Tensor::vector({1, 2}), Tensor::vector({3, 4})) == Tensor::vector({3, 8}));
  CHECK_THROWS_AS(apply(BinaryOp::add, Tensor::vector({1, 2}), Tensor::vector({1, 2, 3})), std::invalid_argument);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("clamp subgradient counts the boundary as interior") {
  ParameterStore store;
  auto id = store.add("x", Tensor::vector({-0.5, 0.0, 0.5, 1.0, 1.5}));
  Tape tape;
  auto y = ad::clamp(tape.param(store, id), 0.0, 1.0);
  tape.backward(ad::sum(y));
  CHECK(store[id].grad == Tensor::vector({0.0, 1.0, 1.0, 1.0, 0.0}));
}

TEST_CASE("matmul") {
  Rng rng(3);
  auto m = random_tensor({3, 4}, rng);
  CHECK(matmul(Tensor::identity(3), m) == m);
  CHECK(matmul(m, Tensor({4, 2})) == Tensor({3, 2}));
  auto r = matmul(Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::matrix(2, 1, {1, 1}));
  CHECK(r == Tensor::matrix(2, 1, {3, 7}));
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(matvec(Tensor({2, 3}), Tensor({2})), std::invalid_argument);
}

TEST_CASE("backward on simple losses") {
  ParameterStore store;
  auto p = store.add("p", Tensor::vector({0.3, -1.2, 2.5}));
  auto unused = store.add("unused", Tensor::vector({1.0, 1.0}));

  {
    Tape tape;
    tape.backward(ad::sum(tape.param(store, p)));
    CHECK(store[p].grad == Tensor::vector({1, 1, 1}));
    CHECK(store[unused].grad == Tensor::vector({0, 0}));
  }
  store.zero_grad();
  {
    Tape tape;
    auto v = tape.param(store, p);
    tape.backward(ad::scale(ad::dot(v, v), 0.5));
    CHECK(max_abs_difference(store[p].grad, store[p].value) < 1e-15);
  }

  Tape tape;
  auto v = tape.param(store, p);
  CHECK_THROWS_AS(tape.backward(v), std::invalid_argument);
}

TEST_CASE("gradients of every differentiable op match central differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    ParameterStore store;
    auto a = store.add("a", random_tensor({3, 4}, rng));
    auto b = store.add("b", random_tensor({4, 2}, rng));
    auto x = store.add("x", random_tensor({4}, rng));
    auto y = store.add("y", random_tensor({3}, rng));
    auto h = store.add("h", random_tensor({3, 4}, rng));
    auto k = store.add("k", random_tensor({5, 12}, rng, -0.5, 0.5));
    auto kb = store.add("kb", random_tensor({5}, rng));

    auto loss = [&](Tape& t, ParameterStore& s) {
      auto A = t.param(s, a), B = t.param(s, b), X = t.param(s, x), Y = t.param(s, y);
      auto H = t.param(s, h), K = t.param(s, k), KB = t.param(s, kb);
      auto ab = ad::matmul(A, B);                                 // 3x2
      auto ax = ad::sigmoid(ad::matvec(A, X));                    // 3
      auto mixed = ad::mul(ad::tanh(ad::add(ax, Y)), ad::sub(Y, ax));
      auto soft = ad::softmax(ad::contract_about_mean(mixed, 0.7));
      auto conv = ad::tanh(ad::conv1d_same(H, K, KB));            // 3x5
      auto pooled = ad::max_rows(conv);                           // 5
      auto avg = ad::mean_rows(ad::transpose(ab));                // 3
      const Var parts[] = {soft, pooled, avg, ad::row(H, 1)};
      auto cat = ad::concat(parts);
      auto piece = ad::slice(cat, 2, 6);
      auto logs = ad::log(ad::affine(ad::sigmoid(piece), 0.9, 0.05));
      auto clamped = ad::clamp(ad::scale(X, 0.2), -1.0, 1.0);
      return ad::add(ad::add(ad::sum(logs), ad::dot(piece, piece)), ad::sum(clamped));
    };
    auto results = testing::check_gradients(store, loss);
    for (const auto& r : results) {
      INFO(r.name);
      CHECK(r.max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradients leave parameters unchanged") {
    ParameterStore store;
    auto id = store.add("w", Tensor::vector({1.0, -2.0}));
    store.adam_step(0.1);
    CHECK(store[id].value == Tensor::vector({1.0, -2.0}));
    CHECK(store.step() == 1);
  }
  SUBCASE("first step moves by the learning rate") {
    ParameterStore store;
    auto id = store.add("w", Tensor::scalar(0.5));
    store[id].grad[0] = 1.0;
    store.adam_step(0.1);
    // m_hat = g, v_hat = g^2 after bias correction.
    CHECK(store[id].value.item() == doctest::Approx(0.5 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(store[id].grad.item() == 0.0);
  }
  SUBCASE("identical stores stay identical") {
    ParameterStore s1, s2;
    Rng r1(5), r2(5);
    s1.add_xavier("w", 3, 3, r1);
    s2.add_xavier("w", 3, 3, r2);
    for (int step = 0; step < 10; ++step) {
      for (auto* s : {&s1, &s2}) {
        Tape tape;
        auto w = tape.param(*s, 0);
        tape.backward(ad::sum(ad::tanh(ad::matmul(w, w))));
        s->adam_step(0.01);
      }
    }
    CHECK(s1[0].value == s2[0].value);
  }
}

TEST_CASE("rng determinism and gumbel sampling") {
  Rng a(99), b(99);
  CHECK(sample_gumbel({4, 3}, a) == sample_gumbel({4, 3}, b));
  CHECK(gumbel_from_uniform(1.0 / std::exp(1.0)) == doctest::Approx(0.0).epsilon(1e-15));

  Rng rng(123);
  double total = 0.0;
  const int n = 100000;
  auto g = sample_gumbel({static_cast<std::size_t>(n)}, rng);
  for (double v : g.values()) {
    REQUIRE(std::isfinite(v));
    total += v;
  }
  CHECK(std::abs(total / n - 0.5772156649015329) < 0.02);

  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= Rng::kUniformEpsilon);
    CHECK(x <= 1.0 - Rng::kUniformEpsilon);
  }
}

TEST_CASE("rng state round-trips") {
  Rng rng(77);
  for (int i = 0; i < 10; ++i) rng.next_u64();
  auto copy = Rng::deserialize(rng.serialize());
  CHECK(copy == rng);
  CHECK(copy.next_u64() == rng.next_u64());
  CHECK(rng.fork(1).next_u64() != rng.fork(2).next_u64());
}
