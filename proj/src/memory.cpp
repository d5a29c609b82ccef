#include "hippd/memory.hpp"

#include <algorithm>
#include <stdexcept>

namespace hippd {

GateParameters GateParameters::create(ParameterStore& store, const std::string& prefix, std::size_t d, Rng& rng) {
  GateParameters p;
  p.w_input = store.add_xavier(prefix + ".W_i", d, d, rng);
  p.w_forget = store.add_xavier(prefix + ".W_f", d, d, rng);
  p.w_candidate = store.add_xavier(prefix + ".W_c", d, d, rng);
  p.u_input = store.add_xavier(prefix + ".U_i", d, d, rng);
  p.u_forget = store.add_xavier(prefix + ".U_f", d, d, rng);
  p.u_candidate = store.add_xavier(prefix + ".U_c", d, d, rng);
  p.b_input = store.add_zeros(prefix + ".b_i", {d});
  p.b_forget = store.add_zeros(prefix + ".b_f", {d});
  p.b_candidate = store.add_zeros(prefix + ".b_c", {d});
  return p;
}

GateWeights GateWeights::bind(Tape& tape, ParameterStore& store, const GateParameters& ids) {
  return GateWeights{tape.param(store, ids.w_input),  tape.param(store, ids.w_forget),
                     tape.param(store, ids.w_candidate), tape.param(store, ids.u_input),
                     tape.param(store, ids.u_forget), tape.param(store, ids.u_candidate),
                     tape.param(store, ids.b_input),  tape.param(store, ids.b_forget),
                     tape.param(store, ids.b_candidate)};
}

InputDrive input_drive(Var z, const GateWeights& w) {
  if (z.size() != w.w_input.value().cols()) throw std::invalid_argument("gate_forward: input width mismatch");
  return InputDrive{ad::matvec(w.w_input, z), ad::matvec(w.w_forget, z), ad::matvec(w.w_candidate, z)};
}

Gates gate_forward(const InputDrive& drive, const MemoryState& prev, const GateWeights& w) {
  if (prev.m.size() != w.u_input.value().cols()) throw std::invalid_argument("gate_forward: memory width mismatch");
  auto pre = [](Var x, Var u, Var m, Var b) { return ad::add(ad::add(x, ad::matvec(u, m)), b); };
  return Gates{ad::sigmoid(pre(drive.input, w.u_input, prev.m, w.b_input)),
               ad::sigmoid(pre(drive.forget, w.u_forget, prev.m, w.b_forget)),
               ad::tanh(pre(drive.candidate, w.u_candidate, prev.m, w.b_candidate))};
}

Gates gate_forward(Var z, const MemoryState& prev, const GateWeights& w) {
  return gate_forward(input_drive(z, w), prev, w);
}

std::pair<Var, Var> modulate_gates(Var input, Var forget, double pe, const MemoryModulationConfig& cfg) {
  if (!(pe >= 0.0 && pe <= 1.0)) throw std::invalid_argument("modulate_gates: pe must lie in [0,1]");
  if (pe == 0.0) return {input, forget};
  return {ad::clamp(ad::affine(input, 1.0, cfg.alpha * pe), 0.0, 1.0),
          ad::clamp(ad::affine(forget, 1.0, -cfg.beta * pe), 0.0, 1.0)};
}

double positional_signal(std::size_t t, std::size_t total) {
  if (total <= 1) return 0.0;
  const double pos = 2.0 * static_cast<double>(t) / static_cast<double>(total - 1) - 1.0;
  return std::clamp(pos, -1.0, 1.0);
}

MemoryState memory_update(const MemoryState& prev, Var input_mod, Var forget_mod, Var candidate,
                          const MemoryModulationConfig& cfg, std::size_t total_steps, Mode mode, Rng& rng) {
  if (input_mod.shape() != prev.m.shape() || forget_mod.shape() != prev.m.shape() ||
      candidate.shape() != prev.m.shape()) {
    throw std::invalid_argument("memory_update: width mismatch");
  }
  Var m = ad::add(ad::mul(forget_mod, prev.m), ad::mul(input_mod, candidate));
  const double shift = cfg.positional_coeff * positional_signal(prev.step, total_steps);
  if (shift != 0.0) m = ad::affine(m, 1.0, shift);
  if (mode == Mode::train && cfg.dropout > 0.0) {
    Tensor mask(m.shape());
    const double keep_scale = 1.0 / (1.0 - cfg.dropout);
    for (auto& v : mask.values()) v = rng.uniform() < cfg.dropout ? 0.0 : keep_scale;
    m = ad::mul(m, m.tape().constant(std::move(mask)));
  }
  return MemoryState{m, prev.step + 1};
}

Var project_memory(Var m, std::optional<Var> projection) {
  if (!projection) return m;
  if (projection->value().cols() != m.size()) throw std::invalid_argument("project_memory: width mismatch");
  return ad::matvec(*projection, m);
}

MemoryState run_memory(Var z, std::size_t steps, const GateWeights& w, double pe,
                       const MemoryModulationConfig& cfg, Mode mode, Rng& rng) {
  if (steps == 0) throw std::invalid_argument("run_memory: at least one step required");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0,1)");
  MemoryState state{z.tape().constant(Tensor({w.width()})), 0};
  const auto drive = input_drive(z, w);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto gates = gate_forward(drive, state, w);
    const auto [input_mod, forget_mod] = modulate_gates(gates.input, gates.forget, pe, cfg);
    state = memory_update(state, input_mod, forget_mod, gates.candidate, cfg, steps, mode, rng);
  }
  return state;
}

PerceptronMemoryParameters PerceptronMemoryParameters::create(ParameterStore& store, const std::string& prefix,
                                                              std::size_t d, Rng& rng) {
  PerceptronMemoryParameters p;
  p.w1 = store.add_xavier(prefix + ".W1", d, d, rng);
  p.b1 = store.add_zeros(prefix + ".b1", {d});
  p.w2 = store.add_xavier(prefix + ".W2", d, d, rng);
  p.b2 = store.add_zeros(prefix + ".b2", {d});
  return p;
}

Var perceptron_memory(Var z, Tape& tape, ParameterStore& store, const PerceptronMemoryParameters& ids) {
  auto hidden = ad::tanh(ad::add(ad::matvec(tape.param(store, ids.w1), z), tape.param(store, ids.b1)));
  return ad::tanh(ad::add(ad::matvec(tape.param(store, ids.w2), hidden), tape.param(store, ids.b2)));
}

}  // namespace hippd
