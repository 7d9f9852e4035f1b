#include "rtgnn/tape.hpp"

#include <cmath>
#include <memory>
#include <optional>

namespace rtgnn::nd {

const Tensor& Gradients::of(Var leaf) const {
  auto it = grads_.find(leaf.id);
  if (it == grads_.end()) throw std::out_of_range("Gradients::of: no gradient for this leaf");
  return it->second;
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("Tape: stale or foreign Var");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::needs_grad(Var v) const { return node(v).needs_grad; }

Var Tape::leaf(Tensor value) {
  Node n;
  n.needs_grad = value.requires_grad();
  n.is_leaf = true;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  value.set_requires_grad(false);
  return leaf(std::move(value));
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  for (Var in : inputs) n.needs_grad = n.needs_grad || node(in).needs_grad;
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::matmul(Var a, Var b) {
  return record(nd::matmul(value(a), value(b)), {a, b}, [](const BackwardArgs& args) {
    if (args.grads[0]) *args.grads[0] += matmul_nt(args.upstream, *args.inputs[1]);
    if (args.grads[1]) *args.grads[1] += matmul_tn(*args.inputs[0], args.upstream);
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Tensor out = value(a);
  out += value(b);
  return record(std::move(out), {a, b}, [](const BackwardArgs& args) {
    if (args.grads[0]) *args.grads[0] += args.upstream;
    if (args.grads[1]) *args.grads[1] += args.upstream;
  });
}

Var Tape::add_row(Var a, Var row) {
  const Tensor& va = value(a);
  const Tensor& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols()) {
    throw ShapeError("add_row: shape mismatch " + va.shape_string() + " vs " + vr.shape_string());
  }
  Tensor out = va;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += vr(0, c);
  }
  return record(std::move(out), {a, row}, [](const BackwardArgs& args) {
    const Tensor& g = args.upstream;
    if (args.grads[0]) *args.grads[0] += g;
    if (args.grads[1]) {
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) (*args.grads[1])(0, c) += g(r, c);
      }
    }
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Tensor out = value(a);
  const auto vb = value(b).values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= vb[i];
  return record(std::move(out), {a, b}, [](const BackwardArgs& args) {
    if (args.grads[0]) *args.grads[0] += args.upstream;
    if (args.grads[1]) {
      auto d = args.grads[1]->values();
      auto gv = args.upstream.values();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= gv[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Tensor out = value(a);
  auto o = out.values();
  auto bv = value(b).values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return record(std::move(out), {a, b}, [](const BackwardArgs& args) {
    auto gv = args.upstream.values();
    for (std::size_t k = 0; k < 2; ++k) {
      if (!args.grads[k]) continue;
      auto d = args.grads[k]->values();
      auto other = args.inputs[1 - k]->values();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * other[i];
    }
  });
}

Var Tape::scale(Var a, double s) {
  Tensor out = value(a);
  out *= s;
  return record(std::move(out), {a}, [s](const BackwardArgs& args) {
    auto d = args.grads[0]->values();
    auto gv = args.upstream.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * gv[i];
  });
}

Var Tape::relu(Var a) {
  return record(nd::relu(value(a)), {a}, [](const BackwardArgs& args) {
    auto d = args.grads[0]->values();
    auto gv = args.upstream.values();
    auto y = args.output.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (y[i] > 0.0) d[i] += gv[i];
    }
  });
}

Var Tape::clamped_log(Var a) {
  return record(nd::clamped_log(value(a)), {a}, [](const BackwardArgs& args) {
    auto d = args.grads[0]->values();
    auto gv = args.upstream.values();
    auto x = args.inputs[0]->values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (x[i] > kLogFloor) d[i] += gv[i] / x[i];
    }
  });
}

Var Tape::row_softmax(Var a) {
  return record(nd::row_softmax(value(a)), {a}, [](const BackwardArgs& args) {
    const Tensor& g = args.upstream;
    Tensor& d = *args.grads[0];
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto p = args.output.row(r);
      auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < p.size(); ++c) dot += gr[c] * p[c];
      auto dr = d.row(r);
      for (std::size_t c = 0; c < p.size(); ++c) dr[c] += p[c] * (gr[c] - dot);
    }
  });
}

Var Tape::mask(Var a, const Tensor& mask) {
  require_same_shape(value(a), mask, "mask");
  auto m = std::make_shared<Tensor>(mask);
  Tensor out = value(a);
  auto o = out.values();
  auto mv = m->values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= mv[i];
  return record(std::move(out), {a}, [m](const BackwardArgs& args) {
    auto d = args.grads[0]->values();
    auto gv = args.upstream.values();
    auto mv = m->values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * mv[i];
  });
}

Var Tape::sum(Var a) {
  return record(Tensor::scalar(nd::sum(value(a))), {a}, [](const BackwardArgs& args) {
    const double s = args.upstream.item();
    for (double& v : args.grads[0]->values()) v += s;
  });
}

Var Tape::pick_sum(Var a, std::vector<Entry> entries) {
  const Tensor& va = value(a);
  double total = 0.0;
  for (const Entry& e : entries) {
    if (e.row >= va.rows() || e.col >= va.cols()) {
      throw ShapeError("pick_sum: entry out of range for " + va.shape_string());
    }
    total += e.coeff * va(e.row, e.col);
  }
  auto picked = std::make_shared<std::vector<Entry>>(std::move(entries));
  return record(Tensor::scalar(total), {a}, [picked](const BackwardArgs& args) {
    const double s = args.upstream.item();
    for (const Entry& e : *picked) (*args.grads[0])(e.row, e.col) += s * e.coeff;
  });
}

Var Tape::detached_kl(const Tensor& ref, Var log_q, std::vector<KlTerm> terms) {
  const Tensor& lq = value(log_q);
  if (ref.cols() != lq.cols()) {
    throw ShapeError("detached_kl: shape mismatch " + ref.shape_string() + " vs " +
                     lq.shape_string());
  }
  double total = 0.0;
  for (const KlTerm& t : terms) {
    if (t.ref_row >= ref.rows() || t.target_row >= lq.rows()) {
      throw ShapeError("detached_kl: row out of range");
    }
    auto p = ref.row(t.ref_row);
    auto q = lq.row(t.target_row);
    double kl = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) kl += p[c] * (nd::clamped_log(p[c]) - q[c]);
    total += t.coeff * kl;
  }
  auto held_ref = std::make_shared<Tensor>(ref);
  auto held_terms = std::make_shared<std::vector<KlTerm>>(std::move(terms));
  return record(Tensor::scalar(total), {log_q}, [held_ref, held_terms](const BackwardArgs& args) {
    const double s = args.upstream.item();
    Tensor& d = *args.grads[0];
    for (const KlTerm& t : *held_terms) {
      auto p = held_ref->row(t.ref_row);
      auto dr = d.row(t.target_row);
      for (std::size_t c = 0; c < p.size(); ++c) dr[c] -= s * t.coeff * p[c];
    }
  });
}

Gradients Tape::backward(Var loss) {
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[loss.id] = Tensor::scalar(1.0);

  std::vector<Tensor*> slots;
  std::vector<const Tensor*> inputs;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!grads[id] || !n.needs_grad || n.is_leaf) continue;
    slots.assign(n.inputs.size(), nullptr);
    inputs.assign(n.inputs.size(), nullptr);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const std::size_t in = n.inputs[k].id;
      inputs[k] = &nodes_[in].value;
      if (!nodes_[in].needs_grad) continue;
      if (!grads[in]) grads[in] = Tensor(nodes_[in].value.rows(), nodes_[in].value.cols());
      slots[k] = &*grads[in];
    }
    n.backward(BackwardArgs{*grads[id], n.value, inputs, slots});
    // Intermediate gradients are dead once propagated.
    grads[id].reset();
  }

  Gradients out;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (!n.is_leaf || !n.needs_grad) continue;
    out.grads_.emplace(id, grads[id] ? std::move(*grads[id])
                                     : Tensor(n.value.rows(), n.value.cols()));
  }
  nodes_.clear();
  return out;
}

}  // namespace rtgnn::nd
