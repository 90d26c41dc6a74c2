#include "ocs/rng.hpp"

#include <array>

namespace ocs {

Rng::Rng(std::uint64_t seed, Stream stream, std::uint64_t substream) {
  auto s = static_cast<std::uint64_t>(stream);
  std::array<std::uint32_t, 6> words{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(s),    static_cast<std::uint32_t>(s >> 32),
      static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

}  // namespace ocs
