#include "rtgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "rtgnn/rng.hpp"

namespace rtgnn {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("TrainConfig: " + what); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
  if (!(weight_decay >= 0.0)) fail("weight decay must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (hidden == 0 || encoder_hidden == 0) fail("hidden widths must be >= 1");
  if (k == 0) fail("K must be >= 1");
  if (!(tau >= 0.0 && tau < 1.0)) fail("tau must lie in [0, 1)");
  if (n_neg == 0) fail("N_neg must be >= 1");
  if (!(alpha >= 0.0)) fail("alpha must be non-negative");
  if (!(lambda >= 0.0)) fail("lambda must be non-negative");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (!(th_pse > 0.0 && th_pse < 1.0)) fail("th_pse must lie in (0, 1)");
}

void adam_step(nd::Tensor& param, const nd::Tensor& grad, AdamState& state, double lr,
               double weight_decay) {
  nd::require_same_shape(param, grad, "adam_step");
  if (state.m.size() == 0) {
    state.m = nd::Tensor(param.rows(), param.cols());
    state.v = nd::Tensor(param.rows(), param.cols());
  }
  nd::require_same_shape(param, state.m, "adam_step state");
  ++state.step;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, state.step);
  const double bc2 = 1.0 - std::pow(kAdamBeta2, state.step);
  auto p = param.values();
  auto g = grad.values();
  auto m = state.m.values();
  auto v = state.v.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i] + weight_decay * p[i];
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * gi;
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * gi * gi;
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
  }
}

ModelParams init_model(const Graph& graph, const TrainConfig& config) {
  const std::size_t d = graph.feature_dim();
  const auto c = static_cast<std::size_t>(graph.num_classes());
  Rng enc_rng = make_stream(config.seed, "init/encoder");
  Rng p1_rng = make_stream(config.seed, "init/peer1");
  Rng p2_rng = make_stream(config.seed, config.tie_peers ? "init/peer1" : "init/peer2");
  ModelParams params;
  params.encoder = init_gcn(d, config.encoder_hidden, config.encoder_hidden, enc_rng);
  params.peer1 = init_gcn(d, config.hidden, c, p1_rng);
  params.peer2 = init_gcn(d, config.hidden, c, p2_rng);
  return params;
}

Problem::Problem(const Graph& graph, const NoisyLabeling& labels, const Split& split,
                 const TrainConfig& config)
    : graph_(&graph), labels_(&labels), split_(&split), config_(config) {
  config_.validate();
  if (split.train.empty()) throw std::invalid_argument("Problem: empty training set");
  if (!(config_.th_pse > 1.0 / graph.num_classes())) {
    throw std::invalid_argument("Problem: th_pse must exceed 1/C");
  }
  for (NodeId v : split.train) {
    if (!labels.is_observed(v)) {
      throw std::invalid_argument(fmt::format("Problem: training node {} has no label", v));
    }
  }
  std::vector<char> is_train(graph.num_nodes(), 0);
  for (NodeId v : split.train) is_train[v] = 1;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (!is_train[v]) unlabeled_.push_back(v);
  }
  base_adj_ = graph.dense_adjacency();
  base_adj_norm_ = normalize_adjacency(base_adj_);
  base_adj_x_ = nd::matmul(base_adj_norm_, graph.features());
  if (config_.flags.ga && !unlabeled_.empty()) {
    candidate_pairs_ = generate_candidates(graph, split.train, config_.k).pairs();
  }
}

ParamVars register_params(nd::Tape& tape, const ModelParams& params) {
  auto leaf = [&tape](const nd::Tensor& t) {
    nd::Tensor copy = t;
    copy.set_requires_grad(true);
    return tape.leaf(std::move(copy));
  };
  ParamVars vars;
  vars.encoder = {leaf(params.encoder.w1), leaf(params.encoder.w2)};
  vars.peer1 = {leaf(params.peer1.w1), leaf(params.peer1.w2)};
  vars.peer2 = {leaf(params.peer2.w1), leaf(params.peer2.w2)};
  return vars;
}

namespace {

// Â·X is worth materializing when it is cheaper than two Â·(X·W1) products.
bool share_adj_x(std::size_t n, std::size_t d, std::size_t h) {
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  const double shared = nn * static_cast<double>(d) + 2.0 * static_cast<double>(n * d * h);
  const double separate = 2.0 * (static_cast<double>(n * d * h) + nn * static_cast<double>(h));
  return shared <= separate;
}

PeerProbs peer_probs(nd::Tape& tape, nd::Var logits1, nd::Var logits2) {
  PeerProbs probs;
  probs.p1 = tape.row_softmax(logits1);
  probs.p2 = tape.row_softmax(logits2);
  probs.log_p1 = tape.clamped_log(probs.p1);
  probs.log_p2 = tape.clamped_log(probs.p2);
  return probs;
}

nd::Tensor eval_probs(const nd::Tensor& adj_norm, const nd::Tensor* adj_x,
                      const nd::Tensor& features, const GcnParams& params) {
  nd::Tensor pre = adj_x ? nd::matmul(*adj_x, params.w1)
                         : nd::matmul(adj_norm, nd::matmul(features, params.w1));
  nd::Tensor hidden = nd::relu(pre);
  return nd::row_softmax(nd::matmul(adj_norm, nd::matmul(hidden, params.w2)));
}

}  // namespace

ForwardPass forward(nd::Tape& tape, const Problem& problem, const ParamVars& vars,
                    const EpochNoise& noise) {
  const TrainConfig& cfg = problem.config();
  const Graph& graph = problem.graph();
  ForwardPass pass;
  nd::Var x = tape.constant(graph.features());
  nd::Var adj_x;
  if (cfg.flags.ga) {
    nd::Var base_norm = tape.constant(problem.base_adj_norm());
    nd::Var base_ax = tape.constant(problem.base_adj_x());
    pass.z = gcn_logits(tape, base_norm, x, base_ax, vars.encoder, nullptr).logits;
    nd::Var z_for_adj = cfg.adjacency_gradient ? pass.z : tape.constant(tape.value(pass.z));
    TapedAugmented aug = build_augmented(tape, z_for_adj, graph, problem.candidate_pairs(), cfg.tau);
    pass.adjacency = aug.adjacency;
    pass.added_edges = aug.added.size();
    pass.adj_norm = normalize_adjacency(tape, pass.adjacency);
    if (share_adj_x(graph.num_nodes(), graph.feature_dim(), cfg.hidden)) {
      adj_x = tape.matmul(pass.adj_norm, x);
    }
  } else {
    pass.adjacency = tape.constant(problem.base_adjacency());
    pass.adj_norm = tape.constant(problem.base_adj_norm());
    adj_x = tape.constant(problem.base_adj_x());
  }
  nd::Var logits1 = gcn_logits(tape, pass.adj_norm, x, adj_x, vars.peer1, &noise.mask1).logits;
  nd::Var logits2 = gcn_logits(tape, pass.adj_norm, x, adj_x, vars.peer2, &noise.mask2).logits;
  pass.probs = peer_probs(tape, logits1, logits2);
  return pass;
}

LossVars build_losses(nd::Tape& tape, const Problem& problem, const ForwardPass& pass,
                      const GovernanceReport& report, const RegularizerRefs& refs,
                      const EpochNoise& noise) {
  const TrainConfig& cfg = problem.config();
  const double lambda = cfg.flags.cr ? cfg.lambda : 0.0;
  LossVars out;
  out.labeled = labeled_loss(tape, pass.probs, report, problem.labels().observed,
                             problem.labeled(), cfg.gamma, lambda, refs);
  out.pseudo = pseudo_loss(tape, pass.probs, report.pseudo, lambda, refs);
  out.reconstruction = cfg.flags.ga ? reconstruction_loss(tape, pass.z, noise.rec_pairs)
                                    : tape.constant(nd::Tensor::scalar(0.0));
  out.total = total_loss(tape, out.labeled, out.pseudo, out.reconstruction, cfg.alpha);
  return out;
}

EvalOutput evaluate_model(const Problem& problem, const ModelParams& params) {
  const TrainConfig& cfg = problem.config();
  const Graph& graph = problem.graph();
  EvalOutput out;
  if (cfg.flags.ga) {
    nd::Tensor z = nd::matmul(problem.base_adj_norm(),
                              nd::matmul(nd::relu(nd::matmul(problem.base_adj_x(), params.encoder.w1)),
                                         params.encoder.w2));
    AugmentedAdjacency aug = build_augmented(graph, problem.candidate_pairs(), z, cfg.tau);
    out.added_edges = aug.num_added();
    nd::Tensor adj_norm = normalize_adjacency(aug.weights);
    nd::Tensor adj_x;
    const bool shared = share_adj_x(graph.num_nodes(), graph.feature_dim(), cfg.hidden);
    if (shared) adj_x = nd::matmul(adj_norm, graph.features());
    out.p1 = eval_probs(adj_norm, shared ? &adj_x : nullptr, graph.features(), params.peer1);
    out.p2 = eval_probs(adj_norm, shared ? &adj_x : nullptr, graph.features(), params.peer2);
  } else {
    out.p1 = eval_probs(problem.base_adj_norm(), &problem.base_adj_x(), graph.features(),
                        params.peer1);
    out.p2 = eval_probs(problem.base_adj_norm(), &problem.base_adj_x(), graph.features(),
                        params.peer2);
  }
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const NodeId> ids,
                std::span<const int> reference) {
  if (ids.empty()) throw std::invalid_argument("accuracy: empty id set");
  std::size_t hits = 0;
  for (NodeId v : ids) hits += predictions[v] == reference[v] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ids.size());
}

double evaluate(const PeerState& state, std::span<const NodeId> ids,
                std::span<const int> reference) {
  return accuracy(infer(state), ids, reference);
}

namespace {

void mean_losses_by_truth(const GovernanceReport& report, std::span<const NodeId> labeled,
                          std::span<const std::uint8_t> flipped, EpochRecord& rec) {
  double sum_flipped = 0.0;
  double sum_clean = 0.0;
  std::size_t n_flipped = 0;
  std::size_t n_clean = 0;
  for (std::size_t k = 0; k < labeled.size(); ++k) {
    const double loss = report.division.losses[k];
    if (flipped[labeled[k]]) {
      sum_flipped += loss;
      ++n_flipped;
    } else {
      sum_clean += loss;
      ++n_clean;
    }
  }
  rec.mean_loss_flipped = n_flipped ? sum_flipped / static_cast<double>(n_flipped) : 0.0;
  rec.mean_loss_clean = n_clean ? sum_clean / static_cast<double>(n_clean) : 0.0;
}

}  // namespace

TrainResult train(const Graph& graph, const NoisyLabeling& labels, const Split& split,
                  const TrainConfig& config) {
  Problem problem(graph, labels, split, config);
  const TrainConfig& cfg = problem.config();
  const std::size_t n = graph.num_nodes();

  ModelParams params = init_model(graph, cfg);
  AdamState enc1, enc2, a11, a12, a21, a22;

  Rng drop1 = make_stream(cfg.seed, "dropout/peer1");
  Rng drop2 = make_stream(cfg.seed, cfg.tie_peers ? "dropout/peer1" : "dropout/peer2");
  Rng negatives = make_stream(cfg.seed, "negatives");
  const GovernanceFlags gov_flags{cfg.flags.ld, cfg.flags.sr, cfg.flags.pl};
  const bool regularize = cfg.flags.cr && cfg.lambda != 0.0;

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(cfg.epochs));
  double best_val = -1.0;

  for (int t = 1; t <= cfg.epochs; ++t) {
    EpochNoise noise;
    noise.mask1 = dropout_mask(n, cfg.hidden, cfg.dropout, drop1);
    noise.mask2 = dropout_mask(n, cfg.hidden, cfg.dropout, drop2);
    if (cfg.flags.ga) noise.rec_pairs = reconstruction_pairs(graph, cfg.n_neg, negatives);

    nd::Tape tape;
    const ParamVars vars = register_params(tape, params);
    const ForwardPass pass = forward(tape, problem, vars, noise);
    const nd::Tensor& p1 = tape.value(pass.probs.p1);
    const nd::Tensor& p2 = tape.value(pass.probs.p2);

    GovernanceReport report = govern(p1, p2, labels.observed, problem.labeled(),
                                     problem.unlabeled(), t, cfg.epochs, cfg.th_pse, gov_flags);
    RegularizerRefs refs;
    if (regularize) {
      refs = make_regularizer_refs(p1, p2, tape.value(pass.adjacency));
    }
    const LossVars losses = build_losses(tape, problem, pass, report, refs, noise);

    EpochRecord rec;
    rec.epoch = t;
    rec.loss_labeled = tape.value(losses.labeled).item();
    rec.loss_pse = tape.value(losses.pseudo).item();
    rec.loss_rec = tape.value(losses.reconstruction).item();
    rec.loss_total = tape.value(losses.total).item();
    rec.added_edges = pass.added_edges;
    if (!std::isfinite(rec.loss_total)) {
      throw TrainingDiverged(fmt::format(
          "training diverged at epoch {}: total loss {} (labeled {}, pseudo {}, rec {})", t,
          rec.loss_total, rec.loss_labeled, rec.loss_pse, rec.loss_rec));
    }

    const nd::Gradients grads = tape.backward(losses.total);
    adam_step(params.peer1.w1, grads.of(vars.peer1.w1), a11, cfg.learning_rate, cfg.weight_decay);
    adam_step(params.peer1.w2, grads.of(vars.peer1.w2), a12, cfg.learning_rate, cfg.weight_decay);
    adam_step(params.peer2.w1, grads.of(vars.peer2.w1), a21, cfg.learning_rate, cfg.weight_decay);
    adam_step(params.peer2.w2, grads.of(vars.peer2.w2), a22, cfg.learning_rate, cfg.weight_decay);
    if (cfg.flags.ga) {
      adam_step(params.encoder.w1, grads.of(vars.encoder.w1), enc1, cfg.learning_rate,
                cfg.weight_decay);
      adam_step(params.encoder.w2, grads.of(vars.encoder.w2), enc2, cfg.learning_rate,
                cfg.weight_decay);
    }

    EvalOutput eval = evaluate_model(problem, params);
    PeerState state{params.peer1, params.peer2, std::move(eval.p1), std::move(eval.p2)};
    const std::vector<int> predicted = infer(state);
    rec.acc_train = accuracy(predicted, split.train, labels.observed);
    rec.acc_val_noisy = split.val.empty() ? 0.0 : accuracy(predicted, split.val, labels.observed);
    rec.acc_test = split.test.empty() ? 0.0 : accuracy(predicted, split.test, graph.labels());

    rec.n_clean = report.division.clean.size();
    rec.n_noisy = report.division.noisy.size();
    rec.n_sr = report.self_reinforced.size();
    rec.n_pse = report.pseudo.size();
    const NoiseIdentification noise_id =
        identify_noise(report.division, labels.flipped, problem.labeled());
    rec.noise_precision = noise_id.precision;
    rec.noise_recall = noise_id.recall;
    mean_losses_by_truth(report, problem.labeled(), labels.flipped, rec);

    if (rec.acc_val_noisy >= best_val) {
      best_val = rec.acc_val_noisy;
      result.best_epoch = t;
      result.best_state = state;
    }
    result.final_state = std::move(state);
    result.history.push_back(rec);
    result.reports.push_back(std::move(report));
  }
  result.final_params = std::move(params);
  return result;
}

}  // namespace rtgnn
