#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtgnn/edge_augment.hpp"
#include "rtgnn/gcn.hpp"
#include "rtgnn/governance.hpp"
#include "rtgnn/graph.hpp"
#include "rtgnn/noise.hpp"
#include "rtgnn/tape.hpp"

namespace rtgnn {

/// Module toggles. Turning everything off (and ga off) leaves two
/// independent GCNs trained with plain cross-entropy.
struct AblationFlags {
  bool ld = true;  ///< labeled node division
  bool sr = true;  ///< self-reinforcement
  bool pl = true;  ///< pseudo-labeling
  bool cr = true;  ///< consistency regularization
  bool ga = true;  ///< graph augmentation
};

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.001;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  std::size_t hidden = 128;
  std::size_t encoder_hidden = 64;
  // k, alpha, gamma and th_pse were picked by noisy-validation accuracy on
  // the default synthetic graph at 30% uniform noise (seeds 11-13).
  std::size_t k = 25;
  double tau = 0.05;
  std::size_t n_neg = 100;
  double alpha = 0.03;
  double lambda = 0.1;
  double gamma = 0.1;
  double th_pse = 0.8;
  AblationFlags flags;
  std::uint64_t seed = 0;
  /// Use the same initialization and dropout streams for both peers.
  bool tie_peers = false;
  /// Let the classification loss reach the encoder through Â.
  bool adjacency_gradient = true;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  nd::Tensor m;
  nd::Tensor v;
  int step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// One bias-corrected Adam update with L2 weight decay folded into the
/// gradient (g += weight_decay · param) before the moment updates.
void adam_step(nd::Tensor& param, const nd::Tensor& grad, AdamState& state, double lr,
               double weight_decay);

// ---------------------------------------------------------------------------
// Model and one training step
// ---------------------------------------------------------------------------

struct ModelParams {
  GcnParams encoder;
  GcnParams peer1;
  GcnParams peer2;
};

/// Fresh parameters drawn from the named init streams of config.seed.
ModelParams init_model(const Graph& graph, const TrainConfig& config);

/// Epoch-invariant inputs of a training run.
class Problem {
 public:
  Problem(const Graph& graph, const NoisyLabeling& labels, const Split& split,
          const TrainConfig& config);

  const Graph& graph() const { return *graph_; }
  const NoisyLabeling& labels() const { return *labels_; }
  const Split& split() const { return *split_; }
  const TrainConfig& config() const { return config_; }
  std::span<const NodeId> labeled() const { return split_->train; }
  std::span<const NodeId> unlabeled() const { return unlabeled_; }
  const nd::Tensor& base_adjacency() const { return base_adj_; }
  const nd::Tensor& base_adj_norm() const { return base_adj_norm_; }
  /// Â·X for the original graph.
  const nd::Tensor& base_adj_x() const { return base_adj_x_; }
  const std::vector<Edge>& candidate_pairs() const { return candidate_pairs_; }

 private:
  const Graph* graph_;
  const NoisyLabeling* labels_;
  const Split* split_;
  TrainConfig config_;
  std::vector<NodeId> unlabeled_;
  nd::Tensor base_adj_;
  nd::Tensor base_adj_norm_;
  nd::Tensor base_adj_x_;
  std::vector<Edge> candidate_pairs_;
};

/// Randomness consumed by one epoch, drawn before the forward pass.
struct EpochNoise {
  nd::Tensor mask1;
  nd::Tensor mask2;
  std::vector<PairTarget> rec_pairs;
};

struct ParamVars {
  GcnVars encoder;
  GcnVars peer1;
  GcnVars peer2;
};

/// Registers every parameter as a requires_grad leaf.
ParamVars register_params(nd::Tape& tape, const ModelParams& params);

struct ForwardPass {
  nd::Var z;          ///< encoder output; invalid when ga is off
  nd::Var adjacency;  ///< Â (or A when ga is off), unnormalized
  nd::Var adj_norm;
  PeerProbs probs;
  std::size_t added_edges = 0;
};

ForwardPass forward(nd::Tape& tape, const Problem& problem, const ParamVars& vars,
                    const EpochNoise& noise);

struct LossVars {
  nd::Var labeled;
  nd::Var pseudo;
  nd::Var reconstruction;
  nd::Var total;
};

/// Builds every loss term for one epoch. The report and refs are treated as
/// constants, which is what makes the result differentiable.
LossVars build_losses(nd::Tape& tape, const Problem& problem, const ForwardPass& pass,
                      const GovernanceReport& report, const RegularizerRefs& refs,
                      const EpochNoise& noise);

/// Eval-mode predictions of both peers on the current augmented graph.
struct EvalOutput {
  nd::Tensor p1;
  nd::Tensor p2;
  std::size_t added_edges = 0;
};

EvalOutput evaluate_model(const Problem& problem, const ModelParams& params);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_labeled = 0.0;
  double loss_pse = 0.0;
  double loss_rec = 0.0;
  double acc_train = 0.0;
  double acc_val_noisy = 0.0;
  double acc_test = 0.0;
  std::size_t n_clean = 0;
  std::size_t n_noisy = 0;
  std::size_t n_sr = 0;
  std::size_t n_pse = 0;
  double noise_precision = 0.0;
  double noise_recall = 0.0;
  /// Mean mutual loss over truly flipped / truly clean labeled nodes.
  double mean_loss_flipped = 0.0;
  double mean_loss_clean = 0.0;
  std::size_t added_edges = 0;
};

struct TrainResult {
  PeerState final_state;
  PeerState best_state;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  std::vector<GovernanceReport> reports;
  ModelParams final_params;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full training run. Deterministic for a fixed config.seed. The best state
/// is the latest epoch with the highest noisy-validation accuracy of peer 1.
TrainResult train(const Graph& graph, const NoisyLabeling& labels, const Split& split,
                  const TrainConfig& config);

/// Fraction of `ids` whose prediction equals the reference label.
double accuracy(std::span<const int> predictions, std::span<const NodeId> ids,
                std::span<const int> reference);

/// accuracy() of infer(state).
double evaluate(const PeerState& state, std::span<const NodeId> ids,
                std::span<const int> reference);

}  // namespace rtgnn
