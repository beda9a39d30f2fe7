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

#include "byzdp/rng.h"

namespace byzdp {

std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream DeriveStream(std::uint64_t master_seed, std::uint64_t worker,
                          std::uint64_t round, StreamPurpose purpose) {
  std::uint64_t h = MixBits(master_seed);
  h = MixBits(h ^ worker);
  h = MixBits(h ^ round);
  h = MixBits(h ^ static_cast<std::uint64_t>(purpose));
  std::seed_seq seq{static_cast<std::uint32_t>(h),
                    static_cast<std::uint32_t>(h >> 32)};
  return RandomStream(seq);
}

}  // namespace byzdp
