#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace uampsbl {

/// Counter-based seed splitting. Every random stream in the toolkit is
/// derived as derive_seed(parent, k0, k1, ...) so that streams never overlap
/// and a trial can be regenerated without replaying its predecessors.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

} // namespace uampsbl
