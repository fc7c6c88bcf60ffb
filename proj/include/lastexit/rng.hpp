#pragma once

// Deterministic random streams.
//
// Every simulated quantity is a pure function of (master_seed, stream_id,
// replicate_index). The engine for one replicate is seeded from a hash of
// that triple, so replicates can be run in any order or on any number of
// threads without changing results.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace lastexit {

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

using Engine = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

constexpr std::uint64_t derive_seed(SeedSpec seed, std::uint64_t replicate) noexcept {
  std::uint64_t h = detail::splitmix64(seed.master_seed);
  h = detail::splitmix64(h ^ detail::splitmix64(seed.stream_id + 0x632BE59BD9B4E019ULL));
  h = detail::splitmix64(h ^ detail::splitmix64(replicate + 0x2545F4914F6CDD1DULL));
  return h;
}

inline Engine make_engine(SeedSpec seed, std::uint64_t replicate = 0) {
  return Engine{derive_seed(seed, replicate)};
}

// Child stream of `parent`, used to give each study component its own
// stream under one master seed.
constexpr SeedSpec substream(SeedSpec parent, std::uint64_t tag) noexcept {
  return {parent.master_seed, detail::splitmix64(parent.stream_id * 0x9E3779B97F4A7C15ULL + tag + 1)};
}

inline double standard_normal(Engine& engine) {
  return boost::random::normal_distribution<double>{}(engine);
}

inline double uniform01(Engine& engine) {
  return boost::random::uniform_01<double>{}(engine);
}

inline unsigned default_threads() noexcept {
  return std::max(1u, std::thread::hardware_concurrency());
}

// Calls fn(i) for every i in [0, count). `threads == 0` picks the hardware
// concurrency. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(count);
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lastexit
