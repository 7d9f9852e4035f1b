#include "rtgnn/edge_augment.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace rtgnn {

namespace {

constexpr double kMinNorm = 1e-12;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

std::vector<double> row_norms(const nd::Tensor& z) {
  std::vector<double> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) out[i] = norm(z.row(i));
  return out;
}

double cosine(const nd::Tensor& z, const std::vector<double>& norms, NodeId i, NodeId j) {
  if (norms[i] < kMinNorm || norms[j] < kMinNorm) return 0.0;
  return dot(z.row(i), z.row(j)) / (norms[i] * norms[j]);
}

// Adds g · ∂cos(z_i, z_j)/∂z to dz; no-op when either norm is degenerate.
void accumulate_cosine_grad(const nd::Tensor& z, const std::vector<double>& norms, NodeId i,
                            NodeId j, double cos, double g, nd::Tensor& dz) {
  if (norms[i] < kMinNorm || norms[j] < kMinNorm || g == 0.0) return;
  const double inv = 1.0 / (norms[i] * norms[j]);
  const double ci = cos / (norms[i] * norms[i]);
  const double cj = cos / (norms[j] * norms[j]);
  auto zi = z.row(i);
  auto zj = z.row(j);
  auto di = dz.row(i);
  auto dj = dz.row(j);
  for (std::size_t k = 0; k < zi.size(); ++k) {
    di[k] += g * (zj[k] * inv - ci * zi[k]);
    dj[k] += g * (zi[k] * inv - cj * zj[k]);
  }
}

}  // namespace

std::vector<Edge> CandidateSet::pairs() const {
  std::vector<Edge> out;
  for (NodeId v = 0; v < lists.size(); ++v) {
    for (NodeId u : lists[v]) out.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CandidateSet generate_candidates(const Graph& graph, std::span<const NodeId> labeled_ids,
                                 std::size_t k) {
  if (k == 0) throw std::invalid_argument("generate_candidates: K must be >= 1");
  const std::size_t n = graph.num_nodes();
  std::vector<char> is_labeled(n, 0);
  for (NodeId v : labeled_ids) is_labeled.at(v) = 1;
  std::vector<NodeId> labeled;
  std::vector<NodeId> unlabeled;
  for (NodeId v = 0; v < n; ++v) (is_labeled[v] ? labeled : unlabeled).push_back(v);
  if (labeled.empty() || unlabeled.empty()) {
    throw std::invalid_argument("generate_candidates: both partitions must be non-empty");
  }

  const nd::Tensor& x = graph.features();
  const std::vector<double> norms = row_norms(x);
  CandidateSet out;
  out.k = k;
  out.lists.resize(n);
  std::vector<std::pair<double, NodeId>> scored;
  for (NodeId v = 0; v < n; ++v) {
    const auto& pool = is_labeled[v] ? unlabeled : labeled;
    scored.clear();
    for (NodeId u : pool) {
      if (graph.has_edge(v, u)) continue;
      scored.emplace_back(1.0 - cosine(x, norms, v, u), u);
    }
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end());
    out.lists[v].reserve(take);
    for (std::size_t r = 0; r < take; ++r) out.lists[v].push_back(scored[r].second);
  }
  return out;
}

double edge_weight(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw nd::ShapeError("edge_weight: vectors differ in length");
  const double na = norm(a);
  const double nb = norm(b);
  if (na < kMinNorm || nb < kMinNorm) return 0.0;
  return std::max(dot(a, b) / (na * nb), 0.0);
}

std::vector<PairTarget> reconstruction_pairs(const Graph& graph, std::size_t n_neg, Rng& rng) {
  const std::size_t n = graph.num_nodes();
  std::vector<PairTarget> out;
  out.reserve(2 * graph.num_edges() + n * n_neg);
  std::uniform_int_distribution<NodeId> pick(0, n == 0 ? 0 : n - 1);
  for (NodeId i = 0; i < n; ++i) {
    const auto& nbrs = graph.neighbors(i);
    for (NodeId j : nbrs) out.push_back({i, j, 1.0, 1.0});
    if (n_neg == 0 || nbrs.size() + 1 >= n) continue;
    for (std::size_t s = 0; s < n_neg; ++s) {
      NodeId j = pick(rng);
      while (j == i || std::binary_search(nbrs.begin(), nbrs.end(), j)) j = pick(rng);
      out.push_back({i, j, 0.0, 1.0});
    }
  }
  return out;
}

double reconstruction_loss(const nd::Tensor& z, std::span<const PairTarget> pairs) {
  const std::vector<double> norms = row_norms(z);
  double total = 0.0;
  for (const PairTarget& p : pairs) {
    const double w = std::max(cosine(z, norms, p.i, p.j), 0.0);
    total += p.coeff * (w - p.target) * (w - p.target);
  }
  return total;
}

double reconstruction_loss(const nd::Tensor& z, const Graph& graph, std::size_t n_neg,
                           std::uint64_t seed) {
  Rng rng(seed);
  return reconstruction_loss(z, reconstruction_pairs(graph, n_neg, rng));
}

nd::Var reconstruction_loss(nd::Tape& tape, nd::Var z, std::vector<PairTarget> pairs) {
  const double value = reconstruction_loss(tape.value(z), pairs);
  auto held = std::make_shared<std::vector<PairTarget>>(std::move(pairs));
  return tape.record(nd::Tensor::scalar(value), {z}, [held](const nd::Tape::BackwardArgs& args) {
    const nd::Tensor& zv = *args.inputs[0];
    const std::vector<double> norms = row_norms(zv);
    const double up = args.upstream.item();
    for (const PairTarget& p : *held) {
      const double cos = cosine(zv, norms, p.i, p.j);
      if (cos <= 0.0) continue;
      accumulate_cosine_grad(zv, norms, p.i, p.j, cos, up * 2.0 * p.coeff * (cos - p.target),
                             *args.grads[0]);
    }
  });
}

AugmentedAdjacency build_augmented(const Graph& graph, std::span<const Edge> candidate_pairs,
                                   const nd::Tensor& z, double tau) {
  if (z.rows() != graph.num_nodes()) {
    throw nd::ShapeError("build_augmented: embeddings " + z.shape_string() +
                         " do not match the node count");
  }
  AugmentedAdjacency out;
  out.weights = graph.dense_adjacency();
  const std::vector<double> norms = row_norms(z);
  for (const auto& [u, v] : candidate_pairs) {
    if (out.weights(u, v) != 0.0) continue;
    const double w = std::max(cosine(z, norms, u, v), 0.0);
    if (w > tau) {
      out.weights(u, v) = w;
      out.weights(v, u) = w;
      out.added.push_back({u, v, w});
    }
  }
  return out;
}

TapedAugmented build_augmented(nd::Tape& tape, nd::Var z, const Graph& graph,
                               std::span<const Edge> candidate_pairs, double tau) {
  AugmentedAdjacency aug = build_augmented(graph, candidate_pairs, tape.value(z), tau);
  auto added = std::make_shared<std::vector<AddedEdge>>(aug.added);
  nd::Var adj = tape.record(std::move(aug.weights), {z},
                            [added](const nd::Tape::BackwardArgs& args) {
                              const nd::Tensor& zv = *args.inputs[0];
                              const nd::Tensor& g = args.upstream;
                              const std::vector<double> norms = row_norms(zv);
                              for (const AddedEdge& e : *added) {
                                accumulate_cosine_grad(zv, norms, e.u, e.v, e.weight,
                                                       g(e.u, e.v) + g(e.v, e.u),
                                                       *args.grads[0]);
                              }
                            });
  return {adj, *added};
}

nd::Tensor encode(const nd::Tensor& adj_norm, const nd::Tensor& features,
                  const GcnParams& encoder) {
  return gcn_forward(adj_norm, features, encoder).logits;
}

}  // namespace rtgnn
