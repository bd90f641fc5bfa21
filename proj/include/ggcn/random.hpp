#pragma once

#include <cstdint>
#include <random>

#include "ggcn/tensor.hpp"

namespace ggcn {

using Rng = std::mt19937_64;

// Independent stream `stream` derived from one user seed. Training draws
// orderings, candidate fills and reparameterization noise from separate
// streams so that changing how one is consumed never shifts the others.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

inline Matrix standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = dist(rng);
  return out;
}

}  // namespace ggcn
