#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fednet {

using Rng = std::mt19937_64;

/// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives the seed of a named random stream from the root seed.
///
/// Every consumer of randomness owns a stream identified by a name and an
/// index ("init", 0), ("train", node_id), ("synthetic", node_id), ...
/// The derivation is FNV-1a over the name, mixed with the root seed and
/// the index through splitmix64, so streams are stable across platforms
/// and independent of the order in which they are requested.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

}  // namespace fednet
