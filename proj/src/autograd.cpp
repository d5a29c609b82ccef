#include "hippd/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hippd {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(ParameterStore& store, ParamId id) {
  auto& bound = bound_[&store];
  if (auto it = bound.find(id); it != bound.end()) return Var(this, it->second);
  Node node;
  node.value = store[id].value;
  node.requires_grad = record_;
  node.store = &store;
  node.param = id;
  nodes_.push_back(std::move(node));
  bound.emplace(id, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor::zeros_like(node.value);
  return node.grad;
}

Var Tape::push(Tensor value, std::span<const Var> parents, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (record_) {
    for (const auto& p : parents) {
      if (&p.tape() != this) throw std::invalid_argument("operands recorded on different tapes");
      node.requires_grad = node.requires_grad || nodes_[p.id()].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (!record_) throw std::logic_error("backward() on a tape that does not record");
  if (&loss.tape() != this) throw std::invalid_argument("backward(): loss belongs to another tape");
  if (loss.size() != 1) {
    throw std::invalid_argument("backward(): loss must be a scalar, got " +
                                std::to_string(loss.size()) + " elements");
  }
  for (auto& node : nodes_) node.grad = Tensor();
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, i);
    if (node.store != nullptr) {
      auto dst = (*node.store)[node.param].grad.values();
      auto src = node.grad.values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

namespace ad {

namespace {

// Adds `g` into the gradient of `parent` when it participates.
void accumulate(Tape& t, std::size_t parent, const Tensor& g) {
  if (!t.requires_grad(parent)) return;
  auto dst = t.grad_buffer(parent).values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename Fn>
void accumulate_each(Tape& t, std::size_t parent, Fn&& per_element) {
  if (!t.requires_grad(parent)) return;
  auto dst = t.grad_buffer(parent).values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += per_element(i);
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const Var parents[] = {a, b};
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(apply(BinaryOp::add, a.value(), b.value()), parents, [ia, ib](Tape& t, std::size_t self) {
    accumulate(t, ia, t.grad(self));
    accumulate(t, ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const Var parents[] = {a, b};
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(apply(BinaryOp::subtract, a.value(), b.value()), parents,
                       [ia, ib](Tape& t, std::size_t self) {
                         const auto& g = t.grad(self);
                         accumulate(t, ia, g);
                         accumulate_each(t, ib, [&](std::size_t i) { return -g[i]; });
                       });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const Var parents[] = {a, b};
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(apply(BinaryOp::multiply, a.value(), b.value()), parents,
                       [ia, ib](Tape& t, std::size_t self) {
                         const auto& g = t.grad(self);
                         const auto& av = t.value(ia);
                         const auto& bv = t.value(ib);
                         accumulate_each(t, ia, [&](std::size_t i) { return g[i] * bv[i]; });
                         accumulate_each(t, ib, [&](std::size_t i) { return g[i] * av[i]; });
                       });
}

Var scale(Var a, double factor) { return affine(a, factor, 0.0); }

Var scale_by(Var a, Var s) {
  if (s.size() != 1) throw std::invalid_argument("scale_by: factor must be a single element");
  const double factor = s.value()[0];
  Tensor out = a.value();
  for (auto& v : out.values()) v *= factor;
  const Var parents[] = {a, s};
  const auto ia = a.id(), is = s.id();
  return a.tape().push(std::move(out), parents, [ia, is](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& av = t.value(ia);
    const double factor = t.value(is)[0];
    accumulate_each(t, ia, [&](std::size_t i) { return factor * g[i]; });
    if (t.requires_grad(is)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      t.grad_buffer(is)[0] += acc;
    }
  });
}

Var affine(Var a, double factor, double offset) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = factor * v + offset;
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(std::move(out), parents, [ia, factor](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    accumulate_each(t, ia, [&](std::size_t i) { return factor * g[i]; });
  });
}

Var sigmoid(Var a) {
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(apply(UnaryOp::sigmoid, a.value()), parents, [ia](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    accumulate_each(t, ia, [&](std::size_t i) { return g[i] * y[i] * (1.0 - y[i]); });
  });
}

Var tanh(Var a) {
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(apply(UnaryOp::tanh, a.value()), parents, [ia](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    accumulate_each(t, ia, [&](std::size_t i) { return g[i] * (1.0 - y[i] * y[i]); });
  });
}

Var clamp(Var a, double lo, double hi) {
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(hippd::clamp(a.value(), lo, hi), parents, [ia, lo, hi](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(ia);
    accumulate_each(t, ia, [&](std::size_t i) { return (x[i] >= lo && x[i] <= hi) ? g[i] : 0.0; });
  });
}

Var log(Var a) {
  Tensor out = a.value();
  for (auto& v : out.values()) {
    if (!(v > 0.0)) throw std::invalid_argument("log: non-positive input");
    v = std::log(v);
  }
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(std::move(out), parents, [ia](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(ia);
    accumulate_each(t, ia, [&](std::size_t i) { return g[i] / x[i]; });
  });
}

Var softmax(Var a) {
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(hippd::softmax(a.value()), parents, [ia](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    double gy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) gy += g[i] * y[i];
    accumulate_each(t, ia, [&](std::size_t i) { return y[i] * (g[i] - gy); });
  });
}

Var matmul(Var a, Var b) {
  const Var parents[] = {a, b};
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(hippd::matmul(a.value(), b.value()), parents, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t, ia, hippd::matmul(g, hippd::transpose(t.value(ib))));
    if (t.requires_grad(ib)) accumulate(t, ib, hippd::matmul(hippd::transpose(t.value(ia)), g));
  });
}

Var matvec(Var a, Var x) {
  const Var parents[] = {a, x};
  const auto ia = a.id(), ix = x.id();
  return a.tape().push(hippd::matvec(a.value(), x.value()), parents, [ia, ix](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& av = t.value(ia);
    const auto& xv = t.value(ix);
    const auto n = av.rows(), m = av.cols();
    if (t.requires_grad(ia)) {
      auto dst = t.grad_buffer(ia).values();
      for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) dst[i * m + j] += gi * xv[j];
      }
    }
    if (t.requires_grad(ix)) {
      auto dst = t.grad_buffer(ix).values();
      for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        const auto r = av.row(i);
        for (std::size_t j = 0; j < m; ++j) dst[j] += gi * r[j];
      }
    }
  });
}

Var transpose(Var a) {
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(hippd::transpose(a.value()), parents, [ia](Tape& t, std::size_t self) {
    accumulate(t, ia, hippd::transpose(t.grad(self)));
  });
}

Var dot(Var a, Var b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.value()[i] * b.value()[i];
  const Var parents[] = {a, b};
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(Tensor::scalar(acc), parents, [ia, ib](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const auto& av = t.value(ia);
    const auto& bv = t.value(ib);
    accumulate_each(t, ia, [&](std::size_t i) { return g * bv[i]; });
    accumulate_each(t, ib, [&](std::size_t i) { return g * av[i]; });
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(Tensor::scalar(acc), parents, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    accumulate_each(t, ia, [&](std::size_t) { return g; });
  });
}

Var mean_rows(Var a) {
  const auto& av = a.value();
  const auto n = av.rows(), m = av.cols();
  Tensor out({m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += av.at(i, j);
  for (auto& v : out.values()) v /= static_cast<double>(n);
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(std::move(out), parents, [ia, n, m](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    accumulate_each(t, ia, [&](std::size_t k) { return g[k % m] / static_cast<double>(n); });
  });
}

Var max_rows(Var a) {
  const auto& av = a.value();
  const auto n = av.rows(), m = av.cols();
  Tensor out({m});
  std::vector<std::size_t> winner(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = av.at(0, j);
    for (std::size_t i = 1; i < n; ++i) {
      if (av.at(i, j) > out[j]) {
        out[j] = av.at(i, j);
        winner[j] = i;
      }
    }
  }
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(std::move(out), parents, [ia, m, winner = std::move(winner)](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    const auto& g = t.grad(self);
    auto dst = t.grad_buffer(ia).values();
    for (std::size_t j = 0; j < m; ++j) dst[winner[j] * m + j] += g[j];
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no operands");
  std::vector<double> values;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.value().rank() != 1) throw std::invalid_argument("concat: operands must be rank 1");
    offsets.push_back(values.size());
    auto v = p.value().values();
    values.insert(values.end(), v.begin(), v.end());
  }
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return parts.front().tape().push(
      Tensor::vector(std::move(values)), parts,
      [ids = std::move(ids), offsets = std::move(offsets)](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          const auto off = offsets[k];
          accumulate_each(t, ids[k], [&](std::size_t i) { return g[off + i]; });
        }
      });
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  const auto& av = a.value();
  if (av.rank() != 1 || length == 0 || offset + length > av.size()) {
    throw std::invalid_argument("slice: range out of bounds");
  }
  std::vector<double> values(av.values().begin() + static_cast<std::ptrdiff_t>(offset),
                             av.values().begin() + static_cast<std::ptrdiff_t>(offset + length));
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(Tensor::vector(std::move(values)), parents, [ia, offset](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    const auto& g = t.grad(self);
    auto dst = t.grad_buffer(ia).values();
    for (std::size_t i = 0; i < g.size(); ++i) dst[offset + i] += g[i];
  });
}

Var row(Var a, std::size_t r) {
  const auto& av = a.value();
  if (r >= av.rows()) throw std::invalid_argument("row: index out of range");
  const auto src = av.row(r);
  const auto m = av.cols();
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(Tensor::vector({src.begin(), src.end()}), parents, [ia, r, m](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    const auto& g = t.grad(self);
    auto dst = t.grad_buffer(ia).values();
    for (std::size_t j = 0; j < m; ++j) dst[r * m + j] += g[j];
  });
}

Var contract_about_mean(Var a, double factor) {
  const auto& av = a.value();
  if (av.empty()) throw std::invalid_argument("contract_about_mean: empty input");
  const double n = static_cast<double>(av.size());
  double mu = 0.0;
  for (double v : av.values()) mu += v;
  mu /= n;
  Tensor out = av;
  for (auto& v : out.values()) v = mu + factor * (v - mu);
  const Var parents[] = {a};
  const auto ia = a.id();
  return a.tape().push(std::move(out), parents, [ia, factor, n](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    double g_mean = 0.0;
    for (double v : g.values()) g_mean += v;
    g_mean /= n;
    accumulate_each(t, ia, [&](std::size_t i) { return factor * g[i] + (1.0 - factor) * g_mean; });
  });
}

Var conv1d_same(Var input, Var kernel, Var bias) {
  const auto& x = input.value();
  const auto& w = kernel.value();
  const auto& b = bias.value();
  const auto rows = x.rows(), width = x.cols();
  const auto channels = w.rows();
  if (w.cols() != 3 * width || b.size() != channels) {
    throw std::invalid_argument("conv1d_same: kernel must be C x 3d and bias width C");
  }
  Tensor out({rows, channels});
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = b[c];
      const auto wr = w.row(c);
      for (std::size_t tap = 0; tap < 3; ++tap) {
        const auto src = static_cast<std::ptrdiff_t>(pos) + static_cast<std::ptrdiff_t>(tap) - 1;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(rows)) continue;
        const auto xr = x.row(static_cast<std::size_t>(src));
        for (std::size_t j = 0; j < width; ++j) acc += wr[tap * width + j] * xr[j];
      }
      out.at(pos, c) = acc;
    }
  }
  const Var parents[] = {input, kernel, bias};
  const auto ix = input.id(), iw = kernel.id(), ib = bias.id();
  return input.tape().push(std::move(out), parents, [ix, iw, ib, rows, width, channels](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& xv = t.value(ix);
    const auto& wv = t.value(iw);
    const bool need_x = t.requires_grad(ix), need_w = t.requires_grad(iw), need_b = t.requires_grad(ib);
    for (std::size_t pos = 0; pos < rows; ++pos) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double gpc = g.at(pos, c);
        if (gpc == 0.0) continue;
        if (need_b) t.grad_buffer(ib)[c] += gpc;
        for (std::size_t tap = 0; tap < 3; ++tap) {
          const auto src = static_cast<std::ptrdiff_t>(pos) + static_cast<std::ptrdiff_t>(tap) - 1;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(rows)) continue;
          const auto s = static_cast<std::size_t>(src);
          if (need_w) {
            auto gw = t.grad_buffer(iw).row(c);
            const auto xr = xv.row(s);
            for (std::size_t j = 0; j < width; ++j) gw[tap * width + j] += gpc * xr[j];
          }
          if (need_x) {
            auto gx = t.grad_buffer(ix).row(s);
            const auto wr = wv.row(c);
            for (std::size_t j = 0; j < width; ++j) gx[j] += gpc * wr[tap * width + j];
          }
        }
      }
    }
  });
}

}  // namespace ad

}  // namespace hippd
