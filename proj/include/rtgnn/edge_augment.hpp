#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtgnn/gcn.hpp"
#include "rtgnn/graph.hpp"
#include "rtgnn/rng.hpp"
#include "rtgnn/tape.hpp"

namespace rtgnn {

/// Nearest-neighbor link candidates across the labeled/unlabeled partition.
///
/// lists[v] holds up to k partners of v from the opposite partition, ordered
/// by increasing cosine distance of raw features (ties by lower id). Existing
/// neighbors and v itself are never candidates.
struct CandidateSet {
  std::size_t k = 0;
  std::vector<std::vector<NodeId>> lists;

  /// Undirected union of all lists as (u, v) with u < v, sorted.
  std::vector<Edge> pairs() const;
};

CandidateSet generate_candidates(const Graph& graph, std::span<const NodeId> labeled_ids,
                                 std::size_t k);

/// max(cos(a, b), 0); 0 when either vector has norm below 1e-12.
double edge_weight(std::span<const double> a, std::span<const double> b);

/// One squared-error term coeff · (w_ij - target)² of the reconstruction loss.
struct PairTarget {
  NodeId i;
  NodeId j;
  double target;
  double coeff;
};

/// Terms of the negative-sampling reconstruction objective: every (i, j) with
/// A_ij = 1 contributes (w_ij - 1)² from each endpoint, and each node adds
/// n_neg negatives drawn uniformly (with replacement) from its non-neighbors,
/// so that n_neg · mean over the draws is the sum of their w². A node adjacent
/// to every other node gets positives only.
std::vector<PairTarget> reconstruction_pairs(const Graph& graph, std::size_t n_neg, Rng& rng);

double reconstruction_loss(const nd::Tensor& z, std::span<const PairTarget> pairs);
double reconstruction_loss(const nd::Tensor& z, const Graph& graph, std::size_t n_neg,
                           std::uint64_t seed);
nd::Var reconstruction_loss(nd::Tape& tape, nd::Var z, std::vector<PairTarget> pairs);

struct AddedEdge {
  NodeId u;
  NodeId v;
  double weight;
};

/// Weighted symmetric adjacency of the augmented graph. Original edges carry
/// weight 1; accepted candidate links carry their predicted weight in (τ, 1].
struct AugmentedAdjacency {
  nd::Tensor weights;
  std::vector<AddedEdge> added;

  std::size_t num_added() const { return added.size(); }
};

/// Builds the augmented adjacency from embeddings `z`. A candidate pair is
/// accepted when its weight exceeds tau; since edge_weight is symmetric the
/// max-symmetrization of the two directed entries is the weight itself.
AugmentedAdjacency build_augmented(const Graph& graph, std::span<const Edge> candidate_pairs,
                                   const nd::Tensor& z, double tau);

struct TapedAugmented {
  nd::Var adjacency;
  std::vector<AddedEdge> added;
};

/// Taped variant: gradients on the accepted entries flow back into z.
TapedAugmented build_augmented(nd::Tape& tape, nd::Var z, const Graph& graph,
                               std::span<const Edge> candidate_pairs, double tau);

/// Edge-predictor encoder: a 2-layer GCN on the original graph producing Z.
nd::Tensor encode(const nd::Tensor& adj_norm, const nd::Tensor& features,
                  const GcnParams& encoder);

}  // namespace rtgnn
