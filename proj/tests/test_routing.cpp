#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "hippd/routing.hpp"

using namespace hippd;

namespace {

double entropy(const Tensor& p) {
  double h = 0.0;
  for (double v : p.values())
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

Tensor random_vector(std::size_t n, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t({n});
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("suitability_scores") {
  Tape tape(false);
  auto m = tape.constant(Tensor::vector({1.0, 0.0}));
  CHECK(suitability_scores(m, tape.constant(Tensor({3, 2})), tape.constant(Tensor({3}))).value() == Tensor({3}));

  auto s = suitability_scores(m, tape.constant(Tensor::matrix(2, 2, {2, 0, 0, 0})), tape.constant(Tensor::vector({1, 0})));
  CHECK(s.value()[0] == 3.0);

  Rng rng(1);
  Tensor w({3, 4});
  for (auto& v : w.values()) v = rng.uniform(-1, 1);
  auto b = random_vector(3, rng);
  auto x = random_vector(4, rng);
  auto scores = suitability_scores(tape.constant(x), tape.constant(w), tape.constant(b)).value();
  for (std::size_t k = 0; k < 3; ++k) {
    double expected = b[k];
    for (std::size_t j = 0; j < 4; ++j) expected += w.at(k, j) * x[j];
    CHECK(scores[k] == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK_THROWS_AS(suitability_scores(tape.constant(Tensor({3})), tape.constant(w), tape.constant(b)),
                  std::invalid_argument);
}

TEST_CASE("modulate_scores") {
  Tape tape(false);
  auto s = tape.constant(Tensor::vector({2.0, 0.0}));
  CHECK(modulate_scores(s, 0.0, 0.1).value() == s.value());
  auto flat = modulate_scores(s, 1.0, 0.1).value();
  CHECK(flat[0] == doctest::Approx(1.9).epsilon(1e-15));
  CHECK(flat[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(modulate_scores(s, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(modulate_scores(s, 1.2, 0.1), std::invalid_argument);
}

TEST_CASE("score modulation preserves the winner and flattens with error") {
  Rng rng(21);
  const double grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int trial = 0; trial < 300; ++trial) {
    const auto k = 2 + rng.below(5);
    auto s = random_vector(k, rng, -5, 5);
    const double lambda = rng.uniform(0.0, 0.99);
    Tape tape(false);
    auto sv = tape.constant(s);
    const auto winner = argmax_route(s.values());
    double previous = -1.0;
    for (double pe : grid) {
      auto mod = modulate_scores(sv, pe, lambda).value();
      CHECK(argmax_route(mod.values()) == winner);
      const double h = entropy(softmax(mod));
      CHECK(h >= previous - 1e-12);
      previous = h;
    }
  }
}

TEST_CASE("temperature_at") {
  TemperatureSchedule sched;
  CHECK(temperature_at(0, sched) == 1.0);
  CHECK(temperature_at(10, sched) == 0.55);
  CHECK(temperature_at(20, sched) == 0.1);
  CHECK(temperature_at(30, sched) == 0.1);
  for (std::size_t e = 1; e <= 20; ++e) CHECK(temperature_at(e, sched) < temperature_at(e - 1, sched));
  CHECK_THROWS_AS(temperature_at(0, TemperatureSchedule{0.1, 1.0, 20}), std::invalid_argument);
}

TEST_CASE("gumbel_softmax_route") {
  Tape tape(false);
  auto even = gumbel_softmax_route(tape.constant(Tensor::vector({1, 1})), 1.0, Tensor({2})).value();
  CHECK(even == Tensor::vector({0.5, 0.5}));

  auto sharp = gumbel_softmax_route(tape.constant(Tensor::vector({2, 1, 0})), 0.01, Tensor({3})).value();
  CHECK(sharp[0] >= 0.99);
  CHECK(sharp[0] == doctest::Approx(1.0 / (1.0 + std::exp(-100.0) + std::exp(-200.0))));

  Rng rng(5);
  CHECK_THROWS_AS(gumbel_softmax_route(tape.constant(Tensor::vector({1, 0})), 0.0, rng), std::invalid_argument);

  // Gumbel-max: argmax frequencies follow softmax(s').
  const int n = 10000;
  int zero_wins = 0;
  auto scores = tape.constant(Tensor::vector({1.0, 0.0}));
  for (int i = 0; i < n; ++i) {
    Tape local(false);
    auto p = gumbel_softmax_route(local.constant(scores.value()), 1.0, rng).value();
    if (argmax_route(p.values()) == 0) ++zero_wins;
  }
  CHECK(std::abs(static_cast<double>(zero_wins) / n - sigmoid(1.0)) < 0.02);
}

TEST_CASE("gumbel softmax approaches the noisy argmax as tau shrinks") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_vector(4, rng);
    auto noise = sample_gumbel({4}, rng);
    Tensor perturbed = apply(BinaryOp::add, s, noise);
    const auto winner = argmax(perturbed.values());
    Tape tape(false);
    double previous = 0.0;
    for (double tau : {1.0, 0.3, 0.1, 0.03, 0.01, 0.001}) {
      auto p = gumbel_softmax_route(tape.constant(s), tau, noise).value();
      CHECK(p[winner] >= previous - 1e-12);
      previous = p[winner];
    }
    // Separation of the top two perturbed scores bounds how close to one-hot it gets.
    Tensor sorted = perturbed;
    std::sort(sorted.values().begin(), sorted.values().end());
    const double gap = sorted[3] - sorted[2];
    if (gap > 0.02) CHECK(previous > 0.999);
  }
}

TEST_CASE("argmax_route") {
  CHECK(argmax_route(Tensor::vector({2, 1, 0}).values()) == 0);
  CHECK(argmax_route(Tensor::vector({1, 1}).values()) == 0);
  CHECK(argmax_route(Tensor::vector({0, 3, 3}).values()) == 1);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    auto s = random_vector(5, rng);
    Tensor shifted = s;
    for (auto& v : shifted.values()) v += 17.25;
    CHECK(argmax_route(s.values()) == argmax_route(shifted.values()));
  }
  CHECK_THROWS_AS(argmax_route(std::span<const double>()), std::invalid_argument);
}

TEST_CASE("specialist_forward") {
  Rng rng(13);
  SpecialistConfig cfg{6, 5, 4};

  SUBCASE("zero mlp is the zero map") {
    ParameterStore store;
    auto pool = SpecialistPool::create(store, {SpecialistKind::mlp, SpecialistKind::mlp}, 4, 4, 4, cfg, rng);
    for (auto& p : store.params()) p.value.fill(0.0);
    Tape tape(false);
    auto y = pool.forward(0, tape.constant(Tensor::vector({1, 2, 3, 4})), tape.constant(Tensor({2, 4}, 1.0)), tape, store);
    CHECK(y.value() == Tensor({4}));
  }

  SUBCASE("independently initialized specialists disagree") {
    ParameterStore store;
    auto pool = SpecialistPool::create(store, {SpecialistKind::mlp, SpecialistKind::mlp, SpecialistKind::recurrent,
                                              SpecialistKind::conv},
                                       4, 6, 4, cfg, rng);
    Tape tape(false);
    auto m = tape.constant(random_vector(4, rng));
    Tensor rows({3, 6});
    for (auto& v : rows.values()) v = rng.uniform(-1, 1);
    auto h = tape.constant(rows);
    std::vector<Tensor> outs;
    for (std::size_t k = 0; k < pool.size(); ++k) outs.push_back(pool.forward(k, m, h, tape, store).value());
    for (std::size_t a = 0; a < outs.size(); ++a)
      for (std::size_t b = a + 1; b < outs.size(); ++b) CHECK(max_abs_difference(outs[a], outs[b]) > 1e-12);
  }

  SUBCASE("mlp matches a two-layer oracle") {
    ParameterStore store;
    auto pool = SpecialistPool::create(store, {SpecialistKind::mlp, SpecialistKind::conv}, 4, 4, 4, cfg, rng);
    for (auto& p : store.params())
      for (auto& v : p.value.values()) v = rng.uniform(-1, 1);
    auto x = random_vector(4, rng);
    Tape tape(false);
    auto y = pool.forward(0, tape.constant(x), tape.constant(Tensor({1, 4})), tape, store).value();

    const auto& w1 = store[store.id("specialist0.mlp.W1")].value;
    const auto& b1 = store[store.id("specialist0.mlp.b1")].value;
    const auto& w2 = store[store.id("specialist0.mlp.W2")].value;
    const auto& b2 = store[store.id("specialist0.mlp.b2")].value;
    std::vector<double> hidden(cfg.mlp_hidden);
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      double acc = b1[i];
      for (std::size_t j = 0; j < 4; ++j) acc += w1.at(i, j) * x[j];
      hidden[i] = std::tanh(acc);
    }
    for (std::size_t i = 0; i < 4; ++i) {
      double acc = b2[i];
      for (std::size_t j = 0; j < hidden.size(); ++j) acc += w2.at(i, j) * hidden[j];
      CHECK(y[i] == doctest::Approx(acc).epsilon(1e-14));
    }
  }

  SUBCASE("invalid index") {
    ParameterStore store;
    auto pool = SpecialistPool::create(store, {SpecialistKind::mlp, SpecialistKind::mlp}, 4, 4, 4, cfg, rng);
    Tape tape(false);
    CHECK_THROWS_AS(pool.forward(2, tape.constant(Tensor({4})), tape.constant(Tensor({1, 4})), tape, store),
                    std::invalid_argument);
  }
}

TEST_CASE("specialist gradients match finite differences") {
  Rng rng(99);
  ParameterStore store;
  SpecialistConfig cfg{5, 3, 4};
  auto pool = SpecialistPool::create(store, {SpecialistKind::mlp, SpecialistKind::recurrent, SpecialistKind::conv}, 4,
                                     5, 3, cfg, rng);
  auto m_id = store.add("m", random_vector(4, rng));
  Tensor rows({3, 5});
  for (auto& v : rows.values()) v = rng.uniform(-1, 1);
  auto rows_id = store.add("rows", rows);
  auto gating = GatingParameters::create(store, "gate", 3, 4, rng);
  const Tensor noise = sample_gumbel({3}, rng);

  auto loss = [&](Tape& t, ParameterStore& s) {
    auto m = t.param(s, m_id);
    auto h = t.param(s, rows_id);
    auto scores = modulate_scores(suitability_scores(m, t.param(s, gating.weights), t.param(s, gating.bias)), 0.4, 0.1);
    RoutingDecision decision{scores, scores, gumbel_softmax_route(scores, 0.7, noise), 0};
    std::vector<std::optional<Var>> outs;
    for (std::size_t k = 0; k < pool.size(); ++k) outs.emplace_back(pool.forward(k, m, h, t, s));
    auto y = routed_output(decision, outs, Mode::train);
    return ad::dot(y, ad::tanh(y));
  };
  auto results = testing::check_gradients(store, loss);
  for (const auto& r : results) {
    INFO(r.name);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("routed_output") {
  Tape tape(false);
  std::vector<std::optional<Var>> outs = {tape.constant(Tensor::vector({1, 0})), tape.constant(Tensor::vector({0, 1}))};
  auto scores = tape.constant(Tensor::vector({0.0, 0.0}));

  RoutingDecision one_hot{scores, scores, tape.constant(Tensor::vector({0.0, 1.0})), 1};
  CHECK(routed_output(one_hot, outs, Mode::train).value() == outs[1]->value());

  RoutingDecision half{scores, scores, tape.constant(Tensor::vector({0.5, 0.5})), 0};
  CHECK(routed_output(half, outs, Mode::train).value() == Tensor::vector({0.5, 0.5}));

  std::vector<std::optional<Var>> winner_only = {std::nullopt, outs[1]};
  RoutingDecision hard{scores, scores, std::nullopt, 1};
  CHECK(routed_output(hard, winner_only, Mode::eval).value() == outs[1]->value());
  RoutingDecision wrong{scores, scores, std::nullopt, 0};
  CHECK_THROWS_AS(routed_output(wrong, winner_only, Mode::eval), std::invalid_argument);
  CHECK_THROWS_AS(routed_output(half, winner_only, Mode::train), std::invalid_argument);
}

TEST_CASE("relaxed mixture at low temperature equals the hard winner") {
  Rng rng(4);
  ParameterStore store;
  SpecialistConfig cfg{6, 4, 4};
  auto pool = SpecialistPool::create(store, {SpecialistKind::mlp, SpecialistKind::recurrent, SpecialistKind::conv}, 4,
                                     4, 4, cfg, rng);
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape(false);
    auto m = tape.constant(random_vector(4, rng, -1, 1));
    Tensor rows({2, 4});
    for (auto& v : rows.values()) v = rng.uniform(-1, 1);
    auto h = tape.constant(rows);
    auto s = random_vector(3, rng, -3, 3);
    Tensor sorted = s;
    std::sort(sorted.values().begin(), sorted.values().end());
    if (sorted[2] - sorted[1] < 0.2) continue;  // softmax(s/0.01) is one-hot only with a clear margin
    auto scores = tape.constant(s);
    const auto winner = argmax_route(s.values());

    std::vector<std::optional<Var>> all, only;
    for (std::size_t k = 0; k < 3; ++k) {
      all.emplace_back(pool.forward(k, m, h, tape, store));
      only.emplace_back(k == winner ? all.back() : std::nullopt);
    }
    RoutingDecision train{scores, scores, gumbel_softmax_route(scores, 0.01, Tensor({3})), winner};
    RoutingDecision eval{scores, scores, std::nullopt, winner};
    CHECK(max_abs_difference(routed_output(train, all, Mode::train).value(),
                             routed_output(eval, only, Mode::eval).value()) < 1e-6);
  }
}
