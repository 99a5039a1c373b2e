#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace degeo {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Every random stream is derived from the run seed plus a path of stream
// labels (e.g. {file, fit, chain}). Streams with different paths are
// statistically independent and reproducible in isolation.
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Uniform on the open interval (0, 1).
double uniform_open(Rng& rng);

// Stream labels used by the pipeline. Kept in one place so that the
// documented splitting scheme stays stable.
namespace stream {
inline constexpr std::uint64_t kChain = 0x43484149;      // "CHAI"
inline constexpr std::uint64_t kDetect = 0x44455445;     // "DETE"
inline constexpr std::uint64_t kSynth = 0x53594e54;      // "SYNT"
inline constexpr std::uint64_t kTemplate = 0x54454d50;   // "TEMP"
inline constexpr std::uint64_t kTrain = 0x5452414e;      // "TRAN"
}  // namespace stream

}  // namespace degeo
