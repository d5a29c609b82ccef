#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hippd/parameter_store.hpp"
#include "hippd/tensor.hpp"

namespace hippd {

/// Training enables dropout and stochastic routing; evaluation is deterministic.
enum class Mode { train, eval };

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; it and references from
/// value() stay valid for the tape's lifetime.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }
  bool valid() const noexcept { return tape_ != nullptr; }

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape. Nodes are appended in evaluation order, so
/// reverse insertion order is a valid topological order for backward().
///
/// A tape built with record = false keeps values only: no closures are
/// stored and backward() is unavailable.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }

  Var constant(Tensor value);
  /// Leaf bound to a store parameter. Repeated calls within one tape return the same node.
  Var param(ParameterStore& store, ParamId id);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded node; gradients of
  /// bound parameters are added into the store's accumulators.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Gradient buffer of `id`, zero-initialized on first touch.
  Tensor& grad_buffer(std::size_t id);

  Var push(Tensor value, std::span<const Var> parents, Backward backward);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
    ParameterStore* store = nullptr;
    ParamId param = 0;
  };

  bool record_;
  std::deque<Node> nodes_;  // stable references across push
  std::unordered_map<const ParameterStore*, std::unordered_map<ParamId, std::size_t>> bound_;
};

/// Differentiable operations over Vars. Forward values use the kernels in
/// tensor.hpp; each op records its vector-Jacobian product.
namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// a * s for a single-element `s`.
Var scale_by(Var a, Var s);
/// factor * a + offset, elementwise.
Var affine(Var a, double factor, double offset);

Var sigmoid(Var a);
Var tanh(Var a);
/// Subgradient 1 on [lo, hi] (boundary counts as interior), 0 outside.
Var clamp(Var a, double lo, double hi);
Var log(Var a);

Var softmax(Var a);
Var matmul(Var a, Var b);
Var matvec(Var a, Var x);
Var transpose(Var a);

Var dot(Var a, Var b);
Var sum(Var a);
Var mean_rows(Var a);
/// Per-column maximum over the rows of a matrix; gradient routes to the first maximal row.
Var max_rows(Var a);

Var concat(std::span<const Var> parts);
Var slice(Var a, std::size_t offset, std::size_t length);
Var row(Var a, std::size_t r);

/// mean(a) + factor * (a - mean(a)).
Var contract_about_mean(Var a, double factor);

/// Same-padded width-3 convolution over the rows of `input` (M x d).
/// `kernel` is C x 3d acting on [row(t-1), row(t), row(t+1)], `bias` has width C.
/// Result is M x C.
Var conv1d_same(Var input, Var kernel, Var bias);

}  // namespace ad

}  // namespace hippd
