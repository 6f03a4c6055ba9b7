#include "rdmeta/noise.hpp"

#include <cmath>

#include "rdmeta/kernels.hpp"

namespace rdmeta {

namespace {

// Philox4x32-10 (Salmon et al.). Counter layout:
//   c0 = pair index within the step, c1/c2 = step counter, c3 = trajectory.
// Key = root seed split into two 32-bit words.
struct Ctr {
  std::uint32_t v[4];
};

inline void philox_round(Ctr& c, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint64_t M0 = 0xD2511F53ull, M1 = 0xCD9E8D57ull;
  const std::uint64_t p0 = M0 * c.v[0];
  const std::uint64_t p1 = M1 * c.v[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  Ctr out;
  out.v[0] = hi1 ^ c.v[1] ^ k0;
  out.v[1] = lo1;
  out.v[2] = hi0 ^ c.v[3] ^ k1;
  out.v[3] = lo0;
  c = out;
}

inline Ctr philox10(Ctr c, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    philox_round(c, k0, k1);
    k0 += W0;
    k1 += W1;
  }
  return c;
}

// uniform in (0,1) from two 32-bit words
inline double to_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t u = (static_cast<std::uint64_t>(a) << 32) | b;
  return (static_cast<double>(u >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

}  // namespace

NoiseStream split_stream(const NoiseStream& root, std::uint32_t trajectory_index) {
  return NoiseStream{root.root_seed, trajectory_index, 0};
}

void fill_standard_normals(const NoiseStream& stream, double* out, std::size_t n) {
  const std::uint32_t k0 = static_cast<std::uint32_t>(stream.root_seed);
  const std::uint32_t k1 = static_cast<std::uint32_t>(stream.root_seed >> 32);
  const std::size_t npairs = (n + 1) / 2;
  // blocked so the transcendental loop vectorizes (libmvec)
  constexpr std::size_t B = 128;
  double u1[B], u2[B], c[B], s[B];
  for (std::size_t base = 0; base < npairs; base += B) {
    const std::size_t m = std::min(B, npairs - base);
    for (std::size_t p = 0; p < m; ++p) {
      Ctr ctr{{static_cast<std::uint32_t>(base + p),
               static_cast<std::uint32_t>(stream.step_counter),
               static_cast<std::uint32_t>(stream.step_counter >> 32), stream.trajectory_index}};
      const Ctr r = philox10(ctr, k0, k1);
      u1[p] = to_unit(r.v[0], r.v[1]);
      u2[p] = to_unit(r.v[2], r.v[3]);
    }
#pragma omp simd
    for (std::size_t p = 0; p < m; ++p) {
      const double rad = std::sqrt(-2.0 * std::log(u1[p]));
      const double ang = 2.0 * M_PI * u2[p];
      c[p] = rad * std::cos(ang);
      s[p] = rad * std::sin(ang);
    }
    for (std::size_t p = 0; p < m; ++p) {
      const std::size_t i = 2 * (base + p);
      out[i] = c[p];
      if (i + 1 < n) out[i + 1] = s[p];
    }
  }
}

Field sample_increment(NoiseStream& stream, const GridSpec& grid, double dt) {
  if (dt <= 0) throw Error("dt must be positive");
  Field f(grid);
  fill_standard_normals(stream, f.data(), static_cast<std::size_t>(f.size()));
  kernels::scale(std::sqrt(dt / grid.spacing()), f.data(), f.size());
  stream.step_counter += 1;
  return f;
}

}  // namespace rdmeta
