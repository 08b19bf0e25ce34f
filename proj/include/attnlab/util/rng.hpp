#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace attnlab {

using Rng = std::mt19937_64;

/// Independent generator for the named substream of `seed` ("train", "eval",
/// "probe", "init", ...). Same (seed, name) always yields the same stream.
Rng make_stream(std::uint64_t seed, std::string_view name);

/// Child stream keyed by an integer, e.g. one stream per evaluation length.
Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index);

std::uint64_t fnv1a(std::string_view text);

}  // namespace attnlab
