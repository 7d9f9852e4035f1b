#pragma once

#include <filesystem>
#include <vector>

#include "rtgnn/rng.hpp"
#include "rtgnn/tape.hpp"
#include "rtgnn/tensor.hpp"

namespace rtgnn {

/// Weights of a bias-free 2-layer GCN: in_dim → hidden → out_dim.
struct GcnParams {
  nd::Tensor w1;
  nd::Tensor w2;

  std::size_t in_dim() const { return w1.rows(); }
  std::size_t hidden() const { return w1.cols(); }
  std::size_t out_dim() const { return w2.cols(); }
};

/// Glorot-uniform matrix, U(-a, a) with a = sqrt(6 / (rows + cols)).
nd::Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

GcnParams init_gcn(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, Rng& rng);

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// 1/(1-rate). A zero rate gives an all-ones mask.
nd::Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);

struct GcnOutput {
  nd::Tensor logits;
  nd::Tensor probs;
};

/// Eval-mode forward pass (no dropout):
/// logits = Â·relu(Â·X·W1)·W2, probs = row_softmax(logits).
GcnOutput gcn_forward(const nd::Tensor& adj_norm, const nd::Tensor& features,
                      const GcnParams& params);

/// Training-mode forward pass with the hidden layer multiplied by `mask`.
GcnOutput gcn_forward(const nd::Tensor& adj_norm, const nd::Tensor& features,
                      const GcnParams& params, const nd::Tensor& mask);

struct GcnVars {
  nd::Var w1;
  nd::Var w2;
};

struct TapedGcnOutput {
  nd::Var hidden;
  nd::Var logits;
};

/// Taped 2-layer GCN producing logits. The first layer uses `adj_x` = Â·X
/// when it is valid, otherwise Â·(X·W1); callers pick whichever is cheaper.
/// `mask` may be null (no dropout).
TapedGcnOutput gcn_logits(nd::Tape& tape, nd::Var adj_norm, nd::Var features, nd::Var adj_x,
                          const GcnVars& vars, const nd::Tensor* mask);

/// Parameters and latest eval-mode predictions of the peer classifiers.
struct PeerState {
  GcnParams peer1;
  GcnParams peer2;
  nd::Tensor p1;
  nd::Tensor p2;
};

/// Predicted class per node from peer 1; ties go to the lowest class index.
std::vector<int> infer(const PeerState& state);

/// Checkpoint: a JSON header line {"C":..,"d":..,"h":..} followed by the raw
/// little-endian doubles of W1, W2 of peer 1 and then of peer 2.
void save_checkpoint(const PeerState& state, const std::filesystem::path& path);
PeerState load_checkpoint(const std::filesystem::path& path);

}  // namespace rtgnn
