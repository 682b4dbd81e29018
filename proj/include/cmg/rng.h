// Copyright 2026 The cmg-solve Authors
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

#ifndef CMG_RNG_H_
#define CMG_RNG_H_

#include <cstdint>

namespace cmg {

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive hash used to derive per-trial and per-trajectory seeds.
inline uint64_t HashSeed(uint64_t a, uint64_t b) {
  return SplitMix64(SplitMix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6)));
}

// Counter-based stream: the k-th draw is a pure function of (key, k), so
// streams can be created in any order on any thread.
class RngStream {
 public:
  explicit RngStream(uint64_t key) : key_(key) {}
  RngStream(uint64_t master, uint64_t iteration, uint64_t index)
      : key_(HashSeed(HashSeed(master, iteration), index)) {}

  uint64_t key() const { return key_; }

  uint64_t NextU64() { return SplitMix64(key_ ^ SplitMix64(counter_++)); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Index drawn from probabilities p[0..n-1]; falls back to the last index
  // with positive mass when rounding leaves the draw past the total.
  int Categorical(const double* p, int n) {
    const double u = Uniform();
    double acc = 0.0;
    int last = 0;
    for (int i = 0; i < n; ++i) {
      if (p[i] <= 0.0) continue;
      acc += p[i];
      last = i;
      if (u < acc) return i;
    }
    return last;
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace cmg

#endif  // CMG_RNG_H_
