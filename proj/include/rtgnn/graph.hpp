#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rtgnn/tape.hpp"
#include "rtgnn/tensor.hpp"

namespace rtgnn {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected, unweighted attributed graph with ground-truth labels.
///
/// Edges are stored once each as (u, v) with u < v, sorted. Construction
/// validates that ids and labels are in range and that there are no
/// self-loops; duplicate or reversed pairs collapse to one edge.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t num_nodes, std::vector<Edge> edges, nd::Tensor features,
        std::vector<int> labels, int num_classes);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t feature_dim() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }

  const std::vector<Edge>& edges() const { return edges_; }
  const nd::Tensor& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  /// Sorted neighbor ids of node v.
  const std::vector<NodeId>& neighbors(NodeId v) const { return adjacency_[v]; }
  bool has_edge(NodeId u, NodeId v) const;

  /// Dense binary symmetric adjacency (no self-loops).
  nd::Tensor dense_adjacency() const;

  bool operator==(const Graph& other) const;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  nd::Tensor features_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  std::vector<std::vector<NodeId>> adjacency_;
};

/// Disjoint train/validation/test node ids. train is the labeled set.
struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

/// D̃^{-1/2}(A + I)D̃^{-1/2} with D̃ the weighted degree of A + I.
/// Throws GraphError when `adj` is not square, symmetric, non-negative with
/// a zero diagonal.
nd::Tensor normalize_adjacency(const nd::Tensor& adj);

/// Taped variant; gradients flow back into every entry of `adj`.
nd::Var normalize_adjacency(nd::Tape& tape, nd::Var adj);

/// Uniformly random split. Sizes are rounded to the nearest integer, the
/// training set is sized first, and the remainder goes to test.
Split make_split(const Graph& graph, double train_frac, double val_frac, std::uint64_t seed);

struct SbmParams {
  std::size_t num_nodes = 1000;
  int num_classes = 4;
  double p_in = 0.02;
  double p_out = 0.002;
  std::size_t feature_dim = 64;
  double feature_noise = 0.5;
};

/// Planted-partition graph: balanced classes, edges drawn independently with
/// probability p_in inside a class and p_out across classes; features are the
/// one-hot class centroid (class c → coordinate c) plus Gaussian noise.
/// Requires feature_dim ≥ num_classes and 0 ≤ p_out < p_in ≤ 1.
Graph generate_sbm(const SbmParams& params, std::uint64_t seed);

/// Reads edges.txt, features.csv and labels.csv from `dir`.
Graph load_graph(const std::filesystem::path& dir);

/// Writes `graph` in the format read by load_graph.
void save_graph(const Graph& graph, const std::filesystem::path& dir);

}  // namespace rtgnn
