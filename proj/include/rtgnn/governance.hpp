#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rtgnn/graph.hpp"
#include "rtgnn/tape.hpp"
#include "rtgnn/tensor.hpp"

namespace rtgnn {

// ---------------------------------------------------------------------------
// Per-node quantities
// ---------------------------------------------------------------------------

/// -log(p1[label] · p2[label]) with the clamped log.
double mutual_loss(std::span<const double> p1, std::span<const double> p2, int label);

/// D_KL(p ‖ q) with the clamped log.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// D_KL(p1 ‖ p2) + D_KL(p2 ‖ p1).
double inter_view_reg(std::span<const double> p1, std::span<const double> p2);

/// Σ_j (Â_ij / Σ_k Â_ik) · [D_KL(p1_j ‖ p1_i) + D_KL(p2_j ‖ p2_i)]; 0 for an
/// isolated node.
double intra_view_reg(const nd::Tensor& p1, const nd::Tensor& p2, const nd::Tensor& adjacency,
                      NodeId i);

// ---------------------------------------------------------------------------
// Labeled node division
// ---------------------------------------------------------------------------

/// Value below which p% of `values` fall, by linear interpolation between
/// order statistics at index (p/100)·(n-1).
double percentile(std::span<const double> values, double p);

/// Percentile argument used at epoch t: 100 - 50·t/t_max.
double division_percentile(int t, int t_max);

struct DivisionResult {
  std::vector<NodeId> clean;
  std::vector<NodeId> noisy;
  double th_epoch = 0.0;
  double th_avg = 0.0;
  /// Mutual loss per labeled node, aligned with the ids passed to divide().
  std::vector<double> losses;
};

/// Splits `ids` into clean (loss < max(th_epoch, th_avg)) and noisy candidates.
/// If nothing would be clean (all losses equal), every node is clean.
DivisionResult divide(std::span<const NodeId> ids, std::span<const double> losses, int t,
                      int t_max);

// ---------------------------------------------------------------------------
// Self-reinforcement and pseudo-labels
// ---------------------------------------------------------------------------

/// 1 - (C-1)·t / (C·t_max).
double self_reinforce_threshold(int num_classes, int t, int t_max);
/// confidence^(1 - t/t_max).
double self_reinforce_weight(double confidence, int t, int t_max);

struct SelfReinforced {
  NodeId node;
  int label;
  double weight;
};

/// Noisy candidates whose peers agree on a class different from the observed
/// label with geometric-mean confidence above the epoch threshold.
std::vector<SelfReinforced> select_self_reinforce(const nd::Tensor& p1, const nd::Tensor& p2,
                                                  std::span<const int> observed,
                                                  std::span<const NodeId> noisy, int t,
                                                  int t_max);

struct PseudoLabel {
  NodeId node;
  int label;
};

/// Unlabeled nodes whose peers agree with geometric-mean confidence > th_pse.
std::vector<PseudoLabel> select_pseudo(const nd::Tensor& p1, const nd::Tensor& p2,
                                       std::span<const NodeId> unlabeled, double th_pse);

// ---------------------------------------------------------------------------
// Epoch report
// ---------------------------------------------------------------------------

struct GovernanceFlags {
  bool divide = true;
  bool self_reinforce = true;
  bool pseudo = true;
};

struct GovernanceReport {
  int epoch = 0;
  DivisionResult division;
  std::vector<SelfReinforced> self_reinforced;
  std::vector<PseudoLabel> pseudo;
};

/// Runs division, self-reinforcement and pseudo-labeling for epoch t on one
/// set of peer predictions. A disabled division puts every labeled node in
/// the clean set; disabled selections stay empty.
GovernanceReport govern(const nd::Tensor& p1, const nd::Tensor& p2, std::span<const int> observed,
                        std::span<const NodeId> labeled, std::span<const NodeId> unlabeled,
                        int t, int t_max, double th_pse, const GovernanceFlags& flags);

struct NoiseIdentification {
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision and recall of the noisy candidate set against the true flip
/// mask. Either is 0 when its denominator is empty.
NoiseIdentification identify_noise(const DivisionResult& division,
                                   std::span<const std::uint8_t> flipped,
                                   std::span<const NodeId> labeled);

/// One-line JSON record: t, n_clean, n_noisy, n_sr, n_pse, noise_precision,
/// noise_recall.
std::string to_json_line(const GovernanceReport& report, const NoiseIdentification& noise);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct PeerProbs {
  nd::Var p1;
  nd::Var p2;
  nd::Var log_p1;
  nd::Var log_p2;
};

/// Constant inputs of the consistency regularizer: the reference
/// distributions and the row-normalized neighbor weights of Â. None of these
/// receive gradients.
struct RegularizerRefs {
  nd::Tensor p1;
  nd::Tensor p2;
  std::vector<std::vector<std::pair<NodeId, double>>> neighbor_weights;
};

RegularizerRefs make_regularizer_refs(nd::Tensor p1, nd::Tensor p2, const nd::Tensor& adjacency);

/// mean over V_L of ζ(i)·mutual CE(i, ŷ_i) plus λ · mean over V_L of L_reg(i).
nd::Var labeled_loss(nd::Tape& tape, const PeerProbs& probs, const GovernanceReport& report,
                     std::span<const int> observed, std::span<const NodeId> labeled, double gamma,
                     double lambda, const RegularizerRefs& refs);

/// mean over V_pse of [mutual CE(i, z̃_i) + λ · L_reg(i)]; 0 when V_pse is empty.
nd::Var pseudo_loss(nd::Tape& tape, const PeerProbs& probs, std::span<const PseudoLabel> pseudo,
                    double lambda, const RegularizerRefs& refs);

/// labeled + pseudo + alpha · reconstruction.
nd::Var total_loss(nd::Tape& tape, nd::Var labeled, nd::Var pseudo, nd::Var reconstruction,
                   double alpha);

}  // namespace rtgnn
