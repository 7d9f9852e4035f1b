#include "rtgnn/noise.hpp"

#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "rtgnn/rng.hpp"

namespace rtgnn {

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "uniform") return NoiseKind::Uniform;
  if (name == "pair") return NoiseKind::Pair;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::Uniform ? "uniform" : "pair";
}

std::vector<int> cyclic_pair_map(int num_classes) {
  std::vector<int> map(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) map[static_cast<std::size_t>(c)] = (c + 1) % num_classes;
  return map;
}

namespace {

void validate(const NoiseSpec& spec, int num_classes) {
  if (!(spec.rate >= 0.0 && spec.rate < 0.5)) {
    throw std::invalid_argument(fmt::format("noise rate must lie in [0, 0.5), got {}", spec.rate));
  }
  if (spec.kind != NoiseKind::Pair) return;
  if (!spec.pair_map) throw std::invalid_argument("pair noise requires a pair map");
  const auto& map = *spec.pair_map;
  if (map.size() != static_cast<std::size_t>(num_classes)) {
    throw std::invalid_argument("pair map size does not match the class count");
  }
  for (int c = 0; c < num_classes; ++c) {
    const int to = map[static_cast<std::size_t>(c)];
    if (to < 0 || to >= num_classes || to == c) {
      throw std::invalid_argument(fmt::format("pair map sends class {} to invalid class {}", c, to));
    }
  }
}

}  // namespace

NoisyLabeling corrupt(std::span<const int> true_labels, int num_classes,
                      std::span<const NodeId> ids, const NoiseSpec& spec, std::uint64_t seed) {
  validate(spec, num_classes);
  if (ids.empty()) throw std::invalid_argument("corrupt: empty id set");

  NoisyLabeling out;
  out.observed.assign(true_labels.size(), -1);
  out.flipped.assign(true_labels.size(), 0);
  out.spec = spec;
  out.seed = seed;

  Rng rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> other(0, num_classes - 2);
  for (NodeId v : ids) {
    const int y = true_labels[v];
    int observed = y;
    // One draw decides whether to flip so the flip probability is exactly rate.
    if (coin(rng) < spec.rate) {
      if (spec.kind == NoiseKind::Uniform) {
        const int k = other(rng);
        observed = k < y ? k : k + 1;
      } else {
        observed = (*spec.pair_map)[static_cast<std::size_t>(y)];
      }
    }
    out.observed[v] = observed;
    out.flipped[v] = observed != y ? 1 : 0;
  }
  return out;
}

}  // namespace rtgnn
