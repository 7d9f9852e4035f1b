#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "rtgnn/tensor.hpp"

namespace rtgnn::nd {

/// Handle to a value recorded on a Tape. Only meaningful for the tape that
/// produced it, and only until that tape's backward() runs.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// One coefficient-weighted matrix entry, used by pick_sum.
struct Entry {
  std::size_t row;
  std::size_t col;
  double coeff;
};

/// A KL term coeff · D_KL(ref[ref_row] ‖ q[target_row]) where the reference
/// row is a constant and q is supplied in log-space.
struct KlTerm {
  std::size_t target_row;
  std::size_t ref_row;
  double coeff;
};

/// Gradients of a scalar with respect to every requires_grad leaf.
class Gradients {
 public:
  const Tensor& of(Var leaf) const;
  bool has(Var leaf) const { return grads_.count(leaf.id) != 0; }

 private:
  friend class Tape;
  std::unordered_map<std::size_t, Tensor> grads_;
};

/// Reverse-mode autodiff tape.
///
/// Nodes are appended in execution order, so their ids already form a
/// topological order; backward() walks them once from the loss downwards.
/// Accumulation order is fixed, which makes gradients bit-reproducible.
class Tape {
 public:
  /// Backward rule: receives the upstream gradient, the op's own output, the
  /// input values, and one gradient slot per input. A slot is null when that
  /// input does not need a gradient; otherwise the rule must add (not assign)
  /// its contribution.
  struct BackwardArgs {
    const Tensor& upstream;
    const Tensor& output;
    std::span<const Tensor* const> inputs;
    std::span<Tensor* const> grads;
  };
  using BackwardFn = std::function<void(const BackwardArgs&)>;

  Var leaf(Tensor value);
  Var constant(Tensor value);
  /// Records an arbitrary differentiable operation.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool needs_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// Adds a 1×cols row vector to every row of a.
  Var add_row(Var a, Var row);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var clamped_log(Var a);
  Var row_softmax(Var a);
  /// Multiplies entry-wise by a constant mask (dropout with a pre-drawn mask).
  Var mask(Var a, const Tensor& mask);
  Var sum(Var a);
  /// Σ coeff · a[row, col] over the given entries, as a 1×1 tensor.
  Var pick_sum(Var a, std::vector<Entry> entries);
  /// Σ coeff · Σ_c ref[ref_row, c] · (log ref[ref_row, c] − log_q[target_row, c]).
  /// The reference is a constant; gradients flow only into log_q.
  Var detached_kl(const Tensor& ref, Var log_q, std::vector<KlTerm> terms);

  /// Gradients of a 1×1 loss. Clears the tape afterwards.
  Gradients backward(Var loss);

 private:
  struct Node {
    Tensor value;
    std::vector<Var> inputs;
    BackwardFn backward;
    bool is_leaf = false;
    bool needs_grad = false;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace rtgnn::nd
