#pragma once

#include <cstdint>
#include <random>

namespace wfr {

// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream seed for (master, stream_id).  Replication-level parallelism gives
// every replication its own stream id, so results never depend on execution
// order.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream_id) {
  return splitmix64(splitmix64(master) ^ (0x9E3779B97F4A7C15ull * (stream_id + 1)));
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream_id = 0) {
  return std::mt19937_64(mix_seed(master, stream_id));
}

}  // namespace wfr
