// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "hippd/analysis.hpp"
#include "hippd/synthetic.hpp"
#include "hippd/trainer.hpp"

using namespace hippd;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr double kMemoryTolerance = 1e-12;
constexpr double kGumbelTarget = 0.731;
constexpr double kGumbelBand = 0.02;
constexpr int kGumbelSamples = 10000;
constexpr double kSharpMin = 0.99;
constexpr double kMixtureTolerance = 1e-6;
constexpr int kModulationVectors = 1000;
constexpr double kEntropySlack = 1e-12;  // floating-point noise only
constexpr double kMacroF1Target = 0.90;
constexpr double kPurityTarget = 0.80;
constexpr double kEndToEndSeconds = 600.0;
constexpr double kUniformLossRounded = 5.5452;  // 4 ln 2 + ln 16 to four decimals
constexpr double kLossTolerance = 1e-6;
constexpr double kProbabilitySumTolerance = 1e-6;

// Learning rate for the end-to-end runs; the config default stays 1e-4.
constexpr double kDeskLearningRate = 1e-3;
constexpr std::uint64_t kCorpusSeed = 2024;
const std::vector<std::uint64_t> kTrainSeeds = {1, 2, 3, 4, 5};

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double entropy(const Tensor& p) {
  double h = 0.0;
  for (double v : p.values())
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// 1. Full-pipeline gradients against central differences.
void gradient_integrity() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::set<std::string> groups;
  for (std::uint64_t seed : {11, 12, 13}) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.d = 8;
    cfg.h = 8;
    cfg.K = 3;
    cfg.mlp_hidden = 8;
    cfg.recurrent_hidden = 4;
    cfg.conv_channels = 4;
    HippdModel model(cfg);
    Rng data_rng(seed + 100);
    Tensor rows({2, cfg.d});
    for (auto& v : rows.values()) v = data_rng.uniform(-1, 1);
    const auto labels = MbtiLabels::from_type_index(static_cast<int>(data_rng.below(16)));
    auto loss = [&](Tape& tape, ParameterStore&) {
      Rng rng(seed + 200);
      return model.forward(tape, rows, &labels, Mode::train, 0.4, 0.5, rng).loss->total;
    };
    for (const auto& r : testing::check_gradients(model.params(), loss)) {
      worst = std::max(worst, r.max_relative_error);
      groups.insert(r.name.substr(0, r.name.find('.')));
    }
  }
  const double elapsed = seconds_since(start);
  const bool covered = groups.count("encoder") && groups.count("memory") && groups.count("gating") &&
                       groups.count("specialist0") && groups.count("specialist1") && groups.count("specialist2") &&
                       groups.count("heads");
  report(1, "gradient integrity", worst < kGradTolerance && elapsed < kGradSeconds && covered,
         fmt("max relative error %.3g (< %g) over %g parameter groups, ", worst, kGradTolerance,
             double(groups.size())) +
             fmt("%.1f s (< %g s)", elapsed, kGradSeconds));
}

// 2. Unmodulated memory against a plain-loop recurrence.
void memory_equivalence() {
  Rng rng(2);
  double worst = 0.0;
  MemoryModulationConfig cfg;
  cfg.dropout = 0.0;
  cfg.positional_coeff = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 4 + rng.below(9), steps = 1 + rng.below(10);
    ParameterStore store;
    auto ids = GateParameters::create(store, "memory", d, rng);
    for (auto& p : store.params())
      for (auto& v : p.value.values()) v = rng.uniform(-1, 1);
    Tensor z({d});
    for (auto& v : z.values()) v = rng.uniform(-2, 2);
    Tape tape(false);
    const auto w = GateWeights::bind(tape, store, ids);
    const auto m = run_memory(tape.constant(z), steps, w, 0.0, cfg, Mode::train, rng).m.value();

    auto pre = [&](ParamId W, ParamId U, ParamId b, const std::vector<double>& prev, std::size_t i) {
      double s = store[b].value[i];
      for (std::size_t j = 0; j < d; ++j) s += store[W].value.at(i, j) * z[j] + store[U].value.at(i, j) * prev[j];
      return s;
    };
    std::vector<double> state(d, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> next(d);
      for (std::size_t i = 0; i < d; ++i) {
        const double in = logistic(pre(ids.w_input, ids.u_input, ids.b_input, state, i));
        const double fg = logistic(pre(ids.w_forget, ids.u_forget, ids.b_forget, state, i));
        const double g = std::tanh(pre(ids.w_candidate, ids.u_candidate, ids.b_candidate, state, i));
        next[i] = fg * state[i] + in * g;
      }
      state = next;
    }
    for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(m[i] - state[i]));
  }
  report(2, "unmodulated memory equivalence", worst < kMemoryTolerance,
         fmt("max abs error %.3g (< %g) over 100 sequences", worst, kMemoryTolerance));
}

// 3. Gumbel-max frequency and the low-temperature limit.
void routing_distribution() {
  Rng rng(3);
  int zero_wins = 0;
  for (int i = 0; i < kGumbelSamples; ++i) {
    Tape tape(false);
    const auto p = gumbel_softmax_route(tape.constant(Tensor::vector({1.0, 0.0})), 1.0, rng).value();
    zero_wins += argmax_route(p.values()) == 0;
  }
  const double freq = double(zero_wins) / kGumbelSamples;

  ParameterStore store;
  Rng init(4);
  const auto pool = SpecialistPool::create(store, {SpecialistKind::mlp, SpecialistKind::mlp}, 6, 6, 5,
                                           SpecialistConfig{8, 4, 4}, init);
  Tape tape(false);
  Tensor mv({6}), rows({2, 6});
  for (auto& v : mv.values()) v = init.uniform(-1, 1);
  for (auto& v : rows.values()) v = init.uniform(-1, 1);
  const auto m = tape.constant(mv), h = tape.constant(rows);
  std::vector<std::optional<Var>> outputs{pool.forward(0, m, h, tape, store), pool.forward(1, m, h, tape, store)};
  RoutingDecision decision;
  decision.relaxed = gumbel_softmax_route(tape.constant(Tensor::vector({1.0, 0.0})), 0.01, Tensor({2}));
  decision.winner = argmax_route(decision.relaxed->value().values());
  const double pmax = decision.relaxed->value()[decision.winner];
  const auto mixture = routed_output(decision, outputs, Mode::train).value();
  const double gap = max_abs_difference(mixture, outputs[decision.winner]->value());

  const bool pass = std::abs(freq - kGumbelTarget) <= kGumbelBand && pmax >= kSharpMin && gap < kMixtureTolerance;
  report(3, "routing distribution", pass,
         fmt("argmax freq %.4f (%.3f +/- %.2f), ", freq, kGumbelTarget, kGumbelBand) +
             fmt("max p %.6f (>= %.2f), mixture vs winner %.3g (< %g)", pmax, kSharpMin, gap, kMixtureTolerance));
}

// 4. Modulation laws over the pe grid.
void modulation_laws() {
  const double grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  Rng rng(5);
  int violations = 0;
  MemoryModulationConfig mem;
  for (int trial = 0; trial < kModulationVectors; ++trial) {
    const std::size_t k = 2 + rng.below(7);
    Tensor s({k});
    for (auto& v : s.values()) v = rng.uniform(-5, 5);
    Tensor i({k}), f({k});
    for (auto& v : i.values()) v = rng.uniform();
    for (auto& v : f.values()) v = rng.uniform();
    Tape tape(false);
    const auto sv = tape.constant(s), iv = tape.constant(i), fv = tape.constant(f);
    const auto winner = argmax_route(s.values());
    double prev_h = -1.0;
    Tensor prev_i = i, prev_f = f;
    for (double pe : grid) {
      const auto mod = modulate_scores(sv, pe, 0.1).value();
      violations += argmax_route(mod.values()) != winner;
      const double h = entropy(softmax(mod));
      violations += h < prev_h - kEntropySlack;
      prev_h = h;
      const auto [im, fm] = modulate_gates(iv, fv, pe, mem);
      for (std::size_t j = 0; j < k; ++j) {
        violations += im.value()[j] < prev_i[j];
        violations += fm.value()[j] > prev_f[j];
      }
      prev_i = im.value();
      prev_f = fm.value();
    }
  }
  report(4, "modulation laws", violations == 0,
         fmt("%g violations over %g vectors x 5 pe values", violations, kModulationVectors));
}

// 5. Temperature schedule.
void temperature_schedule() {
  const TemperatureSchedule sched = TrainConfig{}.temperature();
  const double t0 = temperature_at(0, sched), t10 = temperature_at(10, sched), t20 = temperature_at(20, sched),
               t30 = temperature_at(30, sched);
  report(5, "temperature schedule", t0 == 1.0 && t10 == 0.55 && t20 == 0.1 && t30 == 0.1,
         fmt("tau(0)=%.17g tau(10)=%.17g tau(20)=%.17g ", t0, t10, t20) + fmt("tau(30)=%.17g", t30));
}

// 6. Metrics against a brute-force confusion matrix.
void metric_oracle() {
  struct Confusion {
    std::vector<std::vector<std::size_t>> m;
    std::size_t n;
    Confusion(const std::vector<int>& y, const std::vector<int>& p, std::size_t c)
        : m(c, std::vector<std::size_t>(c, 0)), n(y.size()) {
      for (std::size_t a = 0; a < c; ++a)
        for (std::size_t b = 0; b < c; ++b)
          for (std::size_t i = 0; i < n; ++i) m[a][b] += y[i] == int(a) && p[i] == int(b);
    }
    double prec(std::size_t c) const {
      std::size_t col = 0;
      for (const auto& row : m) col += row[c];
      return col ? double(m[c][c]) / double(col) : 0.0;
    }
    double rec(std::size_t c) const {
      const std::size_t row = std::accumulate(m[c].begin(), m[c].end(), std::size_t{0});
      return row ? double(m[c][c]) / double(row) : 0.0;
    }
    double f1(std::size_t c) const {
      const double p = prec(c), r = rec(c);
      return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    }
    double acc() const {
      std::size_t d = 0;
      for (std::size_t c = 0; c < m.size(); ++c) d += m[c][c];
      return double(d) / double(n);
    }
  };

  Rng rng(6);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(80);
    std::vector<int> yb(n), pb(n), yt(n), pt(n);
    for (std::size_t i = 0; i < n; ++i) {
      yb[i] = int(rng.below(2));
      pb[i] = rng.bernoulli(0.6) ? yb[i] : int(rng.below(2));
      yt[i] = int(rng.below(16));
      pt[i] = rng.bernoulli(0.4) ? yt[i] : int(rng.below(16));
    }
    const Confusion cb(yb, pb, 2), ct(yt, pt, 16);
    const auto b = binary_metrics(yb, pb);
    mismatches += b.accuracy != cb.acc();
    mismatches += b.macro_f1 != (cb.f1(1) + cb.f1(0)) / 2.0;
    const auto t = multiclass_metrics(yt, pt);
    double mp = 0, mr = 0, mf = 0;
    for (std::size_t c = 0; c < 16; ++c) {
      mp += ct.prec(c);
      mr += ct.rec(c);
      mf += ct.f1(c);
    }
    mismatches += t.accuracy != ct.acc();
    mismatches += t.macro_precision != mp / 16.0;
    mismatches += t.macro_recall != mr / 16.0;
    mismatches += t.macro_f1 != mf / 16.0;
  }
  const double hand = binary_metrics(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}).macro_f1;
  report(6, "metric oracle", mismatches == 0 && hand == 0.5,
         fmt("%g mismatches over 100 binary and 100 16-type sets, hand case macro-F1 %.17g", mismatches, hand));
}

TrainConfig desk_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.learning_rate = kDeskLearningRate;
  return cfg;
}

// 7. Synthetic end-to-end.
void synthetic_end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  GeneratorConfig gen;
  gen.styles = 3;
  gen.users = 600;
  gen.posts_per_user = 8;
  gen.positive_rates[0] = 0.23;
  const auto data = generate_synthetic(gen, kCorpusSeed);
  std::vector<double> f1, purity;
  for (auto seed : kTrainSeeds) {
    const auto r = train(desk_config(seed), data).report;
    f1.push_back(r.average_macro_f1);
    purity.push_back(r.routing_purity.value_or(0.0));
    std::printf("       seed %llu: macro-F1 %.4f, purity %.4f, histogram [%zu %zu %zu]\n",
                static_cast<unsigned long long>(seed), r.average_macro_f1, purity.back(), r.routing_histogram[0],
                r.routing_histogram[1], r.routing_histogram[2]);
  }
  const double elapsed = seconds_since(start);
  const double mf = median(f1), mp = median(purity);
  report(7, "synthetic end-to-end", mf >= kMacroF1Target && mp >= kPurityTarget && elapsed < kEndToEndSeconds,
         fmt("median macro-F1 %.4f (>= %.2f), median purity %.4f (>= %.2f), ", mf, kMacroF1Target, mp,
             kPurityTarget) +
             fmt("%.0f s (< %g s), lr %g", elapsed, kEndToEndSeconds, kDeskLearningRate));
}

// 8. Ablation direction on the noisy variant.
void ablation_direction() {
  GeneratorConfig gen;
  gen.token_noise = 0.3;
  const auto data = generate_synthetic(gen, kCorpusSeed);
  auto median_f1 = [&](const std::function<void(AblationFlags&)>& set) {
    std::vector<double> f1;
    for (auto seed : kTrainSeeds) {
      auto cfg = desk_config(seed);
      set(cfg.flags);
      f1.push_back(train(cfg, data).report.average_macro_f1);
    }
    return median(f1);
  };
  const double full = median_f1([](AblationFlags&) {});
  const double no_memory = median_f1([](AblationFlags& f) { f.no_memory = true; });
  const double random = median_f1([](AblationFlags& f) { f.random_routing = true; });
  report(8, "ablation direction", full >= no_memory && full >= random,
         fmt("median macro-F1 full %.4f, no_memory %.4f, random_routing %.4f", full, no_memory, random));
}

// 9. Determinism and persistence.
void determinism_and_persistence() {
  GeneratorConfig gen;
  gen.users = 120;
  gen.posts_per_user = 4;
  const auto data = generate_synthetic(gen, 9);
  auto cfg = desk_config(9);
  cfg.epochs = 3;
  const auto a = train(cfg, data);
  const auto b = train(cfg, data);
  const auto dir = fs::temp_directory_path() / "hippd_acceptance";
  fs::create_directories(dir);
  save_checkpoint(dir / "a.json", a.checkpoint);
  save_checkpoint(dir / "b.json", b.checkpoint);
  auto bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const bool same_files = bytes(dir / "a.json") == bytes(dir / "b.json");
  const bool same_ckpt = identical(a.checkpoint, b.checkpoint);
  const auto loaded = load_checkpoint(dir / "a.json");
  const bool round_trip = identical(loaded, a.checkpoint);
  const bool same_report = evaluate(a.checkpoint, a.split.test, data) == evaluate(loaded, a.split.test, data);
  report(9, "determinism and persistence", same_files && same_ckpt && round_trip && same_report,
         std::string("identical checkpoints ") + (same_ckpt ? "yes" : "no") + ", identical files " +
             (same_files ? "yes" : "no") + ", bit-exact reload " + (round_trip ? "yes" : "no") +
             ", identical reports " + (same_report ? "yes" : "no"));
}

// 10. Leakage scan.
void leakage() {
  static const char* codes[] = {"INFJ", "entp", "IsTj", "esfp,", "(INTP)", "enfj!", "Isfp", "ESTJ.",
                                "infp", "ENTJ", "istp", "ESFJ", "enfp", "ISFJ", "estp?", "INTJ"};
  auto docs = generate_synthetic(GeneratorConfig{.users = 200, .posts_per_user = 4}, 10);
  Rng rng(10);
  for (auto& d : docs)
    for (auto& p : d.posts) p += std::string(" ") + codes[rng.below(16)] + " information";
  const std::size_t before = count_label_tokens(docs);
  const auto clean = preprocess(docs);
  const std::size_t after = count_label_tokens(clean);
  bool information = true;
  for (const auto& d : clean)
    for (const auto& p : d.posts) information = information && p.find("information") != std::string::npos;
  report(10, "leakage filter", before > 0 && after == 0 && information,
         fmt("%g label tokens before, %g after; 'information' survives: ", double(before), double(after)) +
             (information ? "yes" : "no"));
}

// 11. Loss sanity.
void loss_sanity() {
  const double analytic = 4.0 * std::log(2.0) + std::log(16.0);
  Tape tape(false);
  double worst_loss = 0.0;
  for (int t = 0; t < 16; ++t) {
    const auto l = joint_loss(tape.constant(Tensor({4}, 0.5)), tape.constant(Tensor({16}, 1.0 / 16)),
                              MbtiLabels::from_type_index(t));
    worst_loss = std::max(worst_loss, std::abs(l.total.item() - analytic));
  }
  Rng rng(11);
  double worst_sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t h = 1 + rng.below(40);
    const double scale = rng.uniform(0.1, 50.0);
    Tensor y({h}), w({16, h}), b({16});
    for (auto& v : y.values()) v = rng.uniform(-scale, scale);
    for (auto& v : w.values()) v = rng.uniform(-1, 1);
    for (auto& v : b.values()) v = rng.uniform(-scale, scale);
    const auto p = multiclass_head(tape.constant(y), tape.constant(w), tape.constant(b)).value();
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(p.values().begin(), p.values().end(), 0.0) - 1.0));
  }
  const bool rounds = std::round(analytic * 1e4) / 1e4 == kUniformLossRounded;
  report(11, "loss sanity", rounds && worst_loss < kLossTolerance && worst_sum < kProbabilitySumTolerance,
         fmt("|uniform loss - 4 ln 2 - ln 16| = %.3g (< %g), analytic %.6f rounds to %.4f, ", worst_loss,
             kLossTolerance, analytic, kUniformLossRounded) +
             fmt("max |sum p - 1| = %.3g (< %g)", worst_sum, kProbabilitySumTolerance));
}

}  // namespace

int main() {
  gradient_integrity();
  memory_equivalence();
  routing_distribution();
  modulation_laws();
  temperature_schedule();
  metric_oracle();
  synthetic_end_to_end();
  ablation_direction();
  determinism_and_persistence();
  leakage();
  loss_sanity();
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
