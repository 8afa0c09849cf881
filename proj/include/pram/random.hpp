// Reproducible random streams.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++
// standard. Streams are keyed by (master seed, stream words) through
// std::seed_seq, whose mixing is also standardized. Variates come from
// Boost.Random (1.74) rather than <random> distributions, whose algorithms
// differ between standard libraries.
#pragma once

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/weibull_distribution.hpp>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

namespace pram {

using Engine = std::mt19937_64;

/// Independent stream for a (seed, key...) tuple.
inline Engine make_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> key = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * key.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master_seed);
  for (std::uint64_t k : key) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

inline double draw_normal(Engine& rng, double mean = 0.0, double sd = 1.0) {
  return boost::random::normal_distribution<double>(mean, sd)(rng);
}

inline double draw_uniform01(Engine& rng) { return boost::random::uniform_01<double>()(rng); }

inline double draw_student_t(Engine& rng, double df) {
  return boost::random::student_t_distribution<double>(df)(rng);
}

inline double draw_chi_squared(Engine& rng, double df) {
  return boost::random::chi_squared_distribution<double>(df)(rng);
}

/// CDF 1 - exp(-(x/scale)^shape).
inline double draw_weibull(Engine& rng, double shape, double scale) {
  return boost::random::weibull_distribution<double>(shape, scale)(rng);
}

/// Uniform integer on [lo, hi].
inline std::size_t draw_index(Engine& rng, std::size_t lo, std::size_t hi) {
  return boost::random::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Uniformly random permutation of 0..n-1 (Fisher-Yates).
inline std::vector<std::size_t> random_permutation(Engine& rng, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[draw_index(rng, 0, i - 1)]);
  return perm;
}

}  // namespace pram
