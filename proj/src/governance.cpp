#include "rtgnn/governance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace rtgnn {

double mutual_loss(std::span<const double> p1, std::span<const double> p2, int label) {
  const auto c = static_cast<std::size_t>(label);
  return -(nd::clamped_log(p1[c]) + nd::clamped_log(p2[c]));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    kl += p[c] * (nd::clamped_log(p[c]) - nd::clamped_log(q[c]));
  }
  return kl;
}

double inter_view_reg(std::span<const double> p1, std::span<const double> p2) {
  return kl_divergence(p1, p2) + kl_divergence(p2, p1);
}

double intra_view_reg(const nd::Tensor& p1, const nd::Tensor& p2, const nd::Tensor& adjacency,
                      NodeId i) {
  auto row = adjacency.row(i);
  double degree = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j != i) degree += row[j];
  }
  if (degree <= 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j == i || row[j] == 0.0) continue;
    total += row[j] / degree *
             (kl_divergence(p1.row(j), p1.row(i)) + kl_divergence(p2.row(j), p2.row(i)));
  }
  return total;
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double division_percentile(int t, int t_max) {
  return 100.0 - 50.0 * static_cast<double>(t) / static_cast<double>(t_max);
}

DivisionResult divide(std::span<const NodeId> ids, std::span<const double> losses, int t,
                      int t_max) {
  if (ids.empty()) throw std::invalid_argument("divide: empty labeled set");
  if (ids.size() != losses.size()) throw std::invalid_argument("divide: ids/losses size mismatch");
  if (t < 1 || t > t_max) throw std::invalid_argument("divide: epoch outside [1, t_max]");

  DivisionResult out;
  out.losses.assign(losses.begin(), losses.end());
  out.th_epoch = percentile(losses, division_percentile(t, t_max));
  out.th_avg = std::accumulate(losses.begin(), losses.end(), 0.0) /
               static_cast<double>(losses.size());
  const double threshold = std::max(out.th_epoch, out.th_avg);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    (losses[k] < threshold ? out.clean : out.noisy).push_back(ids[k]);
  }
  if (out.clean.empty()) {
    out.clean.assign(ids.begin(), ids.end());
    out.noisy.clear();
  }
  return out;
}

double self_reinforce_threshold(int num_classes, int t, int t_max) {
  const double c = num_classes;
  return 1.0 - (c - 1.0) * static_cast<double>(t) / (c * static_cast<double>(t_max));
}

double self_reinforce_weight(double confidence, int t, int t_max) {
  return std::pow(confidence, 1.0 - static_cast<double>(t) / static_cast<double>(t_max));
}

namespace {

struct Agreement {
  bool agree;
  int label;
  double confidence;
};

Agreement peer_agreement(const nd::Tensor& p1, const nd::Tensor& p2, NodeId i) {
  const std::size_t c1 = nd::argmax(p1.row(i));
  const std::size_t c2 = nd::argmax(p2.row(i));
  return {c1 == c2, static_cast<int>(c1), std::sqrt(p1(i, c1) * p2(i, c1))};
}

}  // namespace

std::vector<SelfReinforced> select_self_reinforce(const nd::Tensor& p1, const nd::Tensor& p2,
                                                  std::span<const int> observed,
                                                  std::span<const NodeId> noisy, int t,
                                                  int t_max) {
  const double threshold = self_reinforce_threshold(static_cast<int>(p1.cols()), t, t_max);
  std::vector<SelfReinforced> out;
  for (NodeId i : noisy) {
    const Agreement a = peer_agreement(p1, p2, i);
    if (!a.agree || a.label == observed[i]) continue;
    if (a.confidence > threshold) {
      out.push_back({i, a.label, self_reinforce_weight(a.confidence, t, t_max)});
    }
  }
  return out;
}

std::vector<PseudoLabel> select_pseudo(const nd::Tensor& p1, const nd::Tensor& p2,
                                       std::span<const NodeId> unlabeled, double th_pse) {
  std::vector<PseudoLabel> out;
  for (NodeId i : unlabeled) {
    const Agreement a = peer_agreement(p1, p2, i);
    if (a.agree && a.confidence > th_pse) out.push_back({i, a.label});
  }
  return out;
}

GovernanceReport govern(const nd::Tensor& p1, const nd::Tensor& p2, std::span<const int> observed,
                        std::span<const NodeId> labeled, std::span<const NodeId> unlabeled,
                        int t, int t_max, double th_pse, const GovernanceFlags& flags) {
  GovernanceReport report;
  report.epoch = t;
  std::vector<double> losses(labeled.size());
  for (std::size_t k = 0; k < labeled.size(); ++k) {
    const NodeId i = labeled[k];
    losses[k] = mutual_loss(p1.row(i), p2.row(i), observed[i]);
  }
  if (flags.divide) {
    report.division = divide(labeled, losses, t, t_max);
  } else {
    report.division.clean.assign(labeled.begin(), labeled.end());
    report.division.losses = std::move(losses);
  }
  if (flags.self_reinforce) {
    report.self_reinforced =
        select_self_reinforce(p1, p2, observed, report.division.noisy, t, t_max);
  }
  if (flags.pseudo) report.pseudo = select_pseudo(p1, p2, unlabeled, th_pse);
  return report;
}

NoiseIdentification identify_noise(const DivisionResult& division,
                                   std::span<const std::uint8_t> flipped,
                                   std::span<const NodeId> labeled) {
  std::size_t hits = 0;
  for (NodeId v : division.noisy) hits += flipped[v] ? 1 : 0;
  std::size_t total_flipped = 0;
  for (NodeId v : labeled) total_flipped += flipped[v] ? 1 : 0;
  NoiseIdentification out;
  if (!division.noisy.empty()) {
    out.precision = static_cast<double>(hits) / static_cast<double>(division.noisy.size());
  }
  if (total_flipped > 0) {
    out.recall = static_cast<double>(hits) / static_cast<double>(total_flipped);
  }
  return out;
}

std::string to_json_line(const GovernanceReport& report, const NoiseIdentification& noise) {
  nlohmann::ordered_json j;
  j["t"] = report.epoch;
  j["n_clean"] = report.division.clean.size();
  j["n_noisy"] = report.division.noisy.size();
  j["n_sr"] = report.self_reinforced.size();
  j["n_pse"] = report.pseudo.size();
  j["noise_precision"] = noise.precision;
  j["noise_recall"] = noise.recall;
  return j.dump();
}

RegularizerRefs make_regularizer_refs(nd::Tensor p1, nd::Tensor p2, const nd::Tensor& adjacency) {
  RegularizerRefs refs;
  const std::size_t n = adjacency.rows();
  refs.neighbor_weights.resize(n);
  for (NodeId i = 0; i < n; ++i) {
    auto row = adjacency.row(i);
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) degree += row[j];
    }
    if (degree <= 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && row[j] != 0.0) refs.neighbor_weights[i].emplace_back(j, row[j] / degree);
    }
  }
  refs.p1 = std::move(p1);
  refs.p2 = std::move(p2);
  return refs;
}

namespace {

// λ·coeff · Σ_{i ∈ nodes} L_reg(i), split by which log-prob tensor receives
// the gradient.
nd::Var regularizer(nd::Tape& tape, const PeerProbs& probs, std::span<const NodeId> nodes,
                    double coeff, const RegularizerRefs& refs) {
  std::vector<nd::KlTerm> inter;
  std::vector<nd::KlTerm> intra;
  for (NodeId i : nodes) {
    inter.push_back({i, i, coeff});
    for (const auto& [j, w] : refs.neighbor_weights[i]) intra.push_back({i, j, coeff * w});
  }
  // KL(p2‖p1) and the intra terms KL(p1_j‖p1_i) pull on log_p1; the mirrored
  // terms pull on log_p2.
  nd::Var on_p1 = tape.add(tape.detached_kl(refs.p2, probs.log_p1, inter),
                           tape.detached_kl(refs.p1, probs.log_p1, intra));
  nd::Var on_p2 = tape.add(tape.detached_kl(refs.p1, probs.log_p2, inter),
                           tape.detached_kl(refs.p2, probs.log_p2, intra));
  return tape.add(on_p1, on_p2);
}

nd::Var mutual_ce(nd::Tape& tape, const PeerProbs& probs, std::vector<nd::Entry> entries) {
  std::vector<nd::Entry> copy = entries;
  return tape.add(tape.pick_sum(probs.log_p1, std::move(entries)),
                  tape.pick_sum(probs.log_p2, std::move(copy)));
}

}  // namespace

nd::Var labeled_loss(nd::Tape& tape, const PeerProbs& probs, const GovernanceReport& report,
                     std::span<const int> observed, std::span<const NodeId> labeled, double gamma,
                     double lambda, const RegularizerRefs& refs) {
  if (labeled.empty()) throw std::invalid_argument("labeled_loss: empty labeled set");
  const double inv = 1.0 / static_cast<double>(labeled.size());
  std::vector<nd::Entry> entries;
  entries.reserve(labeled.size());
  for (NodeId i : report.division.clean) {
    entries.push_back({i, static_cast<std::size_t>(observed[i]), -inv});
  }
  std::vector<char> reinforced(tape.value(probs.p1).rows(), 0);
  for (const SelfReinforced& s : report.self_reinforced) {
    reinforced[s.node] = 1;
    entries.push_back({s.node, static_cast<std::size_t>(s.label), -inv * s.weight});
  }
  for (NodeId i : report.division.noisy) {
    if (reinforced[i]) continue;
    entries.push_back({i, static_cast<std::size_t>(observed[i]), -inv * gamma});
  }
  nd::Var loss = mutual_ce(tape, probs, std::move(entries));
  if (lambda != 0.0) loss = tape.add(loss, regularizer(tape, probs, labeled, lambda * inv, refs));
  return loss;
}

nd::Var pseudo_loss(nd::Tape& tape, const PeerProbs& probs, std::span<const PseudoLabel> pseudo,
                    double lambda, const RegularizerRefs& refs) {
  if (pseudo.empty()) return tape.constant(nd::Tensor::scalar(0.0));
  const double inv = 1.0 / static_cast<double>(pseudo.size());
  std::vector<nd::Entry> entries;
  std::vector<NodeId> nodes;
  for (const PseudoLabel& p : pseudo) {
    entries.push_back({p.node, static_cast<std::size_t>(p.label), -inv});
    nodes.push_back(p.node);
  }
  nd::Var loss = mutual_ce(tape, probs, std::move(entries));
  if (lambda != 0.0) loss = tape.add(loss, regularizer(tape, probs, nodes, lambda * inv, refs));
  return loss;
}

nd::Var total_loss(nd::Tape& tape, nd::Var labeled, nd::Var pseudo, nd::Var reconstruction,
                   double alpha) {
  return tape.add(tape.add(labeled, pseudo), tape.scale(reconstruction, alpha));
}

}  // namespace rtgnn
