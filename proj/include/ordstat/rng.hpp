#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

namespace ordstat {

// SplitMix64 finalizer; used only to derive substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for (stream, chunk) under a master seed. Streams separate logically
// independent consumers (e.g. the X and Y sides of a difference estimate);
// chunks partition one consumer's draws so that workers can process them in
// any order while the combined result stays a pure function of the seed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t chunk) {
  std::uint64_t z = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  z = splitmix64(z ^ splitmix64(stream));
  z = splitmix64(z ^ splitmix64(chunk));
  return z;
}

// Standard normal generator: mt19937_64 + Box-Muller. Both pieces are fully
// specified algorithms, so a seed pins the exact draw sequence; results do
// not depend on the C++ library's unspecified std::normal_distribution.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on (0, 1]; never returns 0 so log() below is safe.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

  template <typename It>
  void fill_normal(It first, It last) {
    for (; first != last; ++first) *first = normal();
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Runs fn(chunk_index) for every chunk on up to `workers` threads. Each chunk
// must write only to its own output slot; the caller reduces slots in chunk
// order, which makes the result independent of the worker count.
template <typename Fn>
void run_chunks(std::size_t n_chunks, int workers, Fn&& fn) {
  if (workers <= 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      fn(c);
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(workers), n_chunks);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(body);
  for (auto& t : pool) t.join();
}

}  // namespace ordstat
