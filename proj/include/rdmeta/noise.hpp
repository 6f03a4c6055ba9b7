#pragma once

#include <cstdint>

#include "rdmeta/grid.hpp"

namespace rdmeta {

/// Counter-based noise stream. Every Gaussian is a pure function of
/// (root_seed, trajectory_index, step_counter, lane), so trajectories replay
/// bit-exactly and parallel workers need no shared state.
struct NoiseStream {
  std::uint64_t root_seed = 0;
  std::uint32_t trajectory_index = 0;
  std::uint64_t step_counter = 0;
};

NoiseStream split_stream(const NoiseStream& root, std::uint32_t trajectory_index);

/// Discretized space-time white-noise increment: independent N(0, dt/dxi) per
/// node per component. Advances step_counter.
Field sample_increment(NoiseStream& stream, const GridSpec& grid, double dt);

/// Standard normals for one (stream state, count); used by sample_increment.
void fill_standard_normals(const NoiseStream& stream, double* out, std::size_t n);

}  // namespace rdmeta
