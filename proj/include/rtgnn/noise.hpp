#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rtgnn/graph.hpp"

namespace rtgnn {

enum class NoiseKind { Uniform, Pair };

NoiseKind parse_noise_kind(std::string_view name);
std::string_view to_string(NoiseKind kind);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Uniform;
  double rate = 0.0;
  /// class → paired class, no fixed points. Required for pair noise.
  std::optional<std::vector<int>> pair_map;
};

/// Cyclic pairing c → (c + 1) mod C.
std::vector<int> cyclic_pair_map(int num_classes);

/// Observed labels after corruption. Nodes outside the corrupted id set keep
/// observed = -1 (unobserved).
struct NoisyLabeling {
  std::vector<int> observed;
  std::vector<std::uint8_t> flipped;
  NoiseSpec spec;
  std::uint64_t seed = 0;

  bool is_observed(NodeId v) const { return observed[v] >= 0; }
};

/// Corrupts the labels of `ids` independently per node. Uniform noise moves a
/// label to each other class with probability rate/(C-1); pair noise moves it
/// to pair_map[label] with probability rate.
NoisyLabeling corrupt(std::span<const int> true_labels, int num_classes,
                      std::span<const NodeId> ids, const NoiseSpec& spec, std::uint64_t seed);

}  // namespace rtgnn
