#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace advtex {

using Rng = std::mt19937_64;

/// Seed for a named sub-stream of a root seed, so one stage's draws never shift
/// another's.
std::uint64_t stream_seed(std::uint64_t root, std::string_view name);
inline Rng make_stream(std::uint64_t root, std::string_view name) { return Rng(stream_seed(root, name)); }
/// Seed derived from a parent seed and an integer index.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

double uniform(Rng& rng, double lo, double hi);
double normal(Rng& rng, double mean, double stddev);
/// Beta(alpha, beta) via the ratio of two gamma variates.
double sample_beta(Rng& rng, double alpha, double beta);
std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace advtex
