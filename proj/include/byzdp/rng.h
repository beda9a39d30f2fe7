// Copyright 2026 The byzdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BYZDP_RNG_H_
#define BYZDP_RNG_H_

#include <cstdint>
#include <random>

namespace byzdp {

// All randomness in the simulator flows through this engine type.
using RandomStream = std::mt19937_64;

// What a derived stream is used for. Distinct purposes never share bits.
enum class StreamPurpose : std::uint64_t {
  kBatch = 1,
  kNoise = 2,
  kInit = 3,
  kMonteCarlo = 4,
  kDataset = 5,
};

// SplitMix64 finalizer.
std::uint64_t MixBits(std::uint64_t x);

// Deterministic stream keyed by (master_seed, worker, round, purpose). Two
// different keys give statistically independent streams; the same key always
// gives the same stream, regardless of which thread asks for it.
RandomStream DeriveStream(std::uint64_t master_seed, std::uint64_t worker,
                          std::uint64_t round, StreamPurpose purpose);

}  // namespace byzdp

#endif  // BYZDP_RNG_H_
