#include "rtgnn/gcn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rtgnn {

nd::Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  nd::Tensor t(rows, cols);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

GcnParams init_gcn(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, Rng& rng) {
  GcnParams p;
  p.w1 = glorot_uniform(in_dim, hidden, rng);
  p.w2 = glorot_uniform(hidden, out_dim, rng);
  return p;
}

nd::Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  nd::Tensor mask(rows, cols, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (double& v : mask.values()) v = coin(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

namespace {

GcnOutput forward_impl(const nd::Tensor& adj_norm, const nd::Tensor& features,
                       const GcnParams& params, const nd::Tensor* mask) {
  if (features.cols() != params.in_dim()) {
    throw nd::ShapeError("gcn_forward: features " + features.shape_string() +
                         " do not match W1 " + params.w1.shape_string());
  }
  nd::Tensor hidden = nd::relu(nd::matmul(adj_norm, nd::matmul(features, params.w1)));
  if (mask) {
    nd::require_same_shape(hidden, *mask, "gcn_forward dropout");
    auto h = hidden.values();
    auto m = mask->values();
    for (std::size_t i = 0; i < h.size(); ++i) h[i] *= m[i];
  }
  GcnOutput out;
  out.logits = nd::matmul(adj_norm, nd::matmul(hidden, params.w2));
  out.probs = nd::row_softmax(out.logits);
  return out;
}

}  // namespace

GcnOutput gcn_forward(const nd::Tensor& adj_norm, const nd::Tensor& features,
                      const GcnParams& params) {
  return forward_impl(adj_norm, features, params, nullptr);
}

GcnOutput gcn_forward(const nd::Tensor& adj_norm, const nd::Tensor& features,
                      const GcnParams& params, const nd::Tensor& mask) {
  return forward_impl(adj_norm, features, params, &mask);
}

TapedGcnOutput gcn_logits(nd::Tape& tape, nd::Var adj_norm, nd::Var features, nd::Var adj_x,
                          const GcnVars& vars, const nd::Tensor* mask) {
  nd::Var pre = adj_x.valid() ? tape.matmul(adj_x, vars.w1)
                              : tape.matmul(adj_norm, tape.matmul(features, vars.w1));
  nd::Var hidden = tape.relu(pre);
  if (mask) hidden = tape.mask(hidden, *mask);
  nd::Var logits = tape.matmul(adj_norm, tape.matmul(hidden, vars.w2));
  return {hidden, logits};
}

std::vector<int> infer(const PeerState& state) {
  std::vector<int> out(state.p1.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<int>(nd::argmax(state.p1.row(i)));
  }
  return out;
}

namespace {

void write_doubles(std::ofstream& out, const nd::Tensor& t) {
  for (double v : t.values()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
}

nd::Tensor read_doubles(std::ifstream& in, std::size_t rows, std::size_t cols) {
  nd::Tensor t(rows, cols);
  for (double& v : t.values()) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw std::runtime_error("checkpoint: truncated weight data");
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  return t;
}

}  // namespace

void save_checkpoint(const PeerState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  nlohmann::json header = {{"d", state.peer1.in_dim()},
                           {"h", state.peer1.hidden()},
                           {"C", state.peer1.out_dim()}};
  out << header.dump() << '\n';
  for (const GcnParams* p : {&state.peer1, &state.peer2}) {
    write_doubles(out, p->w1);
    write_doubles(out, p->w2);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

PeerState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = nlohmann::json::parse(line);
  const auto d = header.at("d").get<std::size_t>();
  const auto h = header.at("h").get<std::size_t>();
  const auto c = header.at("C").get<std::size_t>();
  PeerState state;
  for (GcnParams* p : {&state.peer1, &state.peer2}) {
    p->w1 = read_doubles(in, d, h);
    p->w2 = read_doubles(in, h, c);
  }
  return state;
}

}  // namespace rtgnn
