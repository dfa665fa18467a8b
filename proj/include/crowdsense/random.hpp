// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROWDSENSE_RANDOM_HPP_
#define CROWDSENSE_RANDOM_HPP_

// Seed derivation and counter-based uniforms. Every random quantity in the
// library is a function of a master seed and a named substream, so results
// never depend on evaluation order or thread scheduling.

#include <cstdint>
#include <random>
#include <string_view>

namespace crowdsense {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ull));
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return derive_seed(master, h);
}

// Uniform on [0, 1) with 53 random bits.
constexpr double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Deterministic uniform draw addressed by (stream, a, b).
constexpr double counter_uniform(std::uint64_t stream, std::uint64_t a,
                                 std::uint64_t b) {
  return bits_to_unit(
      splitmix64(derive_seed(stream, a) ^ splitmix64(b ^ 0xd1b54a32d192ed03ull)));
}

template <class Engine>
double uniform01(Engine& rng) {
  static_assert(Engine::max() == ~std::uint64_t{0} && Engine::min() == 0,
                "uniform01 expects a full-range 64-bit engine");
  return bits_to_unit(rng());
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace crowdsense

#endif  // CROWDSENSE_RANDOM_HPP_
