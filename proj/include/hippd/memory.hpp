#pragma once

#include <optional>
#include <string>

#include "hippd/autograd.hpp"
#include "hippd/parameter_store.hpp"
#include "hippd/rng.hpp"

namespace hippd {

/// Gated working-memory cell parameters. W_* act on the input z, U_* on the
/// previous memory; all are d x d and Xavier-initialized, biases start at zero.
struct GateParameters {
  ParamId w_input, w_forget, w_candidate;
  ParamId u_input, u_forget, u_candidate;
  ParamId b_input, b_forget, b_candidate;

  static GateParameters create(ParameterStore& store, const std::string& prefix, std::size_t d, Rng& rng);
};

struct GateWeights {
  Var w_input, w_forget, w_candidate;
  Var u_input, u_forget, u_candidate;
  Var b_input, b_forget, b_candidate;

  static GateWeights bind(Tape& tape, ParameterStore& store, const GateParameters& ids);
  std::size_t width() const { return b_input.size(); }
};

struct MemoryState {
  Var m;
  std::size_t step = 0;
};

struct MemoryModulationConfig {
  double alpha = 0.1;
  double beta = 0.1;
  double dropout = 0.2;
  double positional_coeff = 0.1;
  std::optional<std::size_t> projection_width;
};

struct Gates {
  Var input;      // i, in (0,1)
  Var forget;     // f, in (0,1)
  Var candidate;  // g = tanh(...), in (-1,1)
};

/// Input-dependent half of the gate pre-activations (W z for each gate).
/// Constant across steps when the same z is fed at every step.
struct InputDrive {
  Var input, forget, candidate;
};

InputDrive input_drive(Var z, const GateWeights& w);
Gates gate_forward(const InputDrive& drive, const MemoryState& prev, const GateWeights& w);
Gates gate_forward(Var z, const MemoryState& prev, const GateWeights& w);

/// i' = clamp(i + alpha pe, 0, 1), f' = clamp(f - beta pe, 0, 1).
/// pe is a detached scalar in [0,1].
std::pair<Var, Var> modulate_gates(Var input, Var forget, double pe, const MemoryModulationConfig& cfg);

/// Normalized post position 2t/(T-1) - 1 clipped to [-1,1]; 0 when T = 1.
double positional_signal(std::size_t t, std::size_t total);

/// m_t = f' * m_{t-1} + i' * g + positional_coeff * pos(t), then dropout in training.
MemoryState memory_update(const MemoryState& prev, Var input_mod, Var forget_mod, Var candidate,
                          const MemoryModulationConfig& cfg, std::size_t total_steps, Mode mode, Rng& rng);

Var project_memory(Var m, std::optional<Var> projection);

/// Runs the PE-modulated recurrence for `steps` updates, feeding z at each
/// step from m_0 = 0. Returns the final state.
MemoryState run_memory(Var z, std::size_t steps, const GateWeights& w, double pe,
                       const MemoryModulationConfig& cfg, Mode mode, Rng& rng);

/// One-hidden-layer perceptron used in place of the gated cell (ablation):
/// m = tanh(W2 tanh(W1 z + b1) + b2).
struct PerceptronMemoryParameters {
  ParamId w1, b1, w2, b2;
  static PerceptronMemoryParameters create(ParameterStore& store, const std::string& prefix, std::size_t d,
                                           Rng& rng);
};

Var perceptron_memory(Var z, Tape& tape, ParameterStore& store, const PerceptronMemoryParameters& ids);

}  // namespace hippd
