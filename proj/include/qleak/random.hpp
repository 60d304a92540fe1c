#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "qleak/stats.hpp"

namespace qleak {

using Rng = std::mt19937_64;

// Independent stream `stream` derived from a base seed. Used to give every
// trial of a batch its own generator so results do not depend on scheduling.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

// Gaussian draws from a timing model, untruncated.
std::vector<double> draw(const stats::TimingDistribution& dist, std::size_t n, Rng& rng);

// Runs body(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace qleak
