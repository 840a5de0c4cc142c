#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "lazyflow/types.hpp"

namespace lazyflow {

using Engine = std::mt19937_64;

/// Derives an independent sub-stream seed from a master seed and a path of stream
/// identifiers (for example {grid_index, repeat, purpose}). SplitMix64 mixing.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

inline Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Engine(derive_seed(master, path));
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Engine& rng);
Vector normal_vector(Eigen::Index size, double stddev, Engine& rng);

/// n points uniform on the unit sphere S^{d-1}, one per row.
Matrix sample_sphere(Eigen::Index n, Eigen::Index d, Engine& rng);

/// Uniform direction in R^p.
Vector random_unit(Eigen::Index p, Engine& rng);

// Stream identifiers used by the experiment drivers.
namespace stream {
inline constexpr std::uint64_t teacher = 1;
inline constexpr std::uint64_t train = 2;
inline constexpr std::uint64_t test = 3;
inline constexpr std::uint64_t init = 4;
inline constexpr std::uint64_t sgd = 5;
inline constexpr std::uint64_t diagnostics = 6;
inline constexpr std::uint64_t oracle = 7;
}  // namespace stream

}  // namespace lazyflow
