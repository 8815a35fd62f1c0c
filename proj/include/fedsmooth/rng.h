// Copyright 2026 The fedsmooth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEDSMOOTH_RNG_H_
#define FEDSMOOTH_RNG_H_

#include <cstdint>
#include <random>

namespace fedsmooth {

using Rng = std::mt19937_64;

// Stream id reserved for server-side randomness (client selection and noise).
inline constexpr uint64_t kServerStream = ~uint64_t{0};

// SplitMix64 finalizer.
uint64_t MixBits(uint64_t x);

// Derives an independent generator for (seed, round, stream). The derivation
// is counter based, so the result does not depend on the order in which
// substreams are requested.
Rng Substream(uint64_t seed, uint64_t round, uint64_t stream);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_RNG_H_
