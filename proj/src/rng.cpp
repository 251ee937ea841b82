#include "fednet/rng.hpp"

namespace fednet {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index) {
  std::uint64_t name_hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    name_hash ^= c;
    name_hash *= 0x100000001b3ULL;
  }
  std::uint64_t state = root ^ name_hash;
  splitmix64(state);
  state ^= index * 0xd1342543de82ef95ULL;
  return splitmix64(state);
}

}  // namespace fednet
