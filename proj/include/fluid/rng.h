/**
 * Copyright 2026 The FLuID Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FLUID_RNG_H_
#define FLUID_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fluid {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a seed for a named sub-stream, e.g. DeriveSeed(seed, {round, client, kTagTrain}).
inline uint64_t DeriveSeed(uint64_t base, std::initializer_list<uint64_t> tags) {
  uint64_t s = MixSeed(base);
  for (uint64_t t : tags) s = MixSeed(s ^ MixSeed(t + 0x632be59bd9b4e019ULL));
  return s;
}

using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double UniformIn(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * Uniform01(rng);
}

}  // namespace fluid

#endif  // FLUID_RNG_H_
