#pragma once

// Simple +-1 random walks as an independent oracle for the law of
// sup_{[0,1]} |B|. Each 16-bit chunk of an engine word is 16 steps; a table
// holds the net move and the extreme prefix sums of every chunk.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "lastexit/rng.hpp"

namespace oracle {

struct ChunkTable {
  std::array<std::int8_t, 1 << 16> net{};
  std::array<std::int8_t, 1 << 16> high{};
  std::array<std::int8_t, 1 << 16> low{};

  ChunkTable() {
    for (std::uint32_t c = 0; c < (1u << 16); ++c) {
      int pos = 0, hi = 0, lo = 0;
      for (int bit = 0; bit < 16; ++bit) {
        pos += ((c >> bit) & 1u) ? 1 : -1;
        hi = std::max(hi, pos);
        lo = std::min(lo, pos);
      }
      net[c] = static_cast<std::int8_t>(pos);
      high[c] = static_cast<std::int8_t>(hi);
      low[c] = static_cast<std::int8_t>(lo);
    }
  }
};

inline const ChunkTable& chunk_table() {
  static const ChunkTable table;
  return table;
}

// max_{k <= steps} |S_k| / sqrt(steps) for `reps` walks; steps must be a
// multiple of 64.
inline std::vector<double> walk_abs_maxima(std::size_t steps, std::size_t reps, lastexit::SeedSpec seed,
                                           unsigned threads = 0) {
  const auto& t = chunk_table();
  const std::size_t words = steps / 64;
  const double scale = 1.0 / std::sqrt(static_cast<double>(steps));
  std::vector<double> out(reps);
  lastexit::parallel_for(reps, threads, [&](std::size_t r) {
    lastexit::Engine engine = lastexit::make_engine(seed, r);
    long pos = 0, hi = 0, lo = 0;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t bits = engine();
      for (int q = 0; q < 4; ++q, bits >>= 16) {
        const auto c = static_cast<std::uint16_t>(bits & 0xFFFFu);
        hi = std::max(hi, pos + t.high[c]);
        lo = std::min(lo, pos + t.low[c]);
        pos += t.net[c];
      }
    }
    out[r] = static_cast<double>(std::max(hi, -lo)) * scale;
  });
  return out;
}

// Dual theta-function form of P(sup_{[0,1]} |B| <= l), accurate for l
// away from large values where the first form converges faster.
inline double theta_cdf(double l) {
  if (l <= 0.0) return 0.0;
  const double pi = 3.141592653589793238462643;
  double sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double m = 2.0 * k + 1.0;
    const double term = std::exp(-m * m * pi * pi / (8.0 * l * l)) / m;
    sum += (k % 2 == 0 ? term : -term);
    if (term < 1e-18) break;
  }
  return 4.0 / pi * sum;
}

}  // namespace oracle
