#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rtgnn {

using Rng = std::mt19937_64;

/// Seed for the named substream `name` of `run_seed`. Streams with different
/// names are independent, so adding a consumer never shifts existing ones.
std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view name);

inline Rng make_stream(std::uint64_t run_seed, std::string_view name) {
  return Rng(stream_seed(run_seed, name));
}

}  // namespace rtgnn
