/* Copyright 2026 The GradDiv Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef GDL_RNG_HPP_
#define GDL_RNG_HPP_

// Deterministic random streams.
//
// One 64-bit master seed feeds every stream. A purpose-tagged sub-seed is
// splitmix64(master ^ splitmix64(fnv1a(purpose) + index)); streams hand out
// independent children with fork(), so the draw sequence of a run is a pure
// function of the master seed and the order of forks.

#include <cstdint>
#include <random>
#include <string_view>

namespace gdl {

namespace purpose {
inline constexpr std::string_view kWeights = "weights";
inline constexpr std::string_view kTrainAttack = "train-attack";
inline constexpr std::string_view kEvalAttack = "eval-attack";
inline constexpr std::string_view kRegSamples = "reg-samples";
inline constexpr std::string_view kData = "data";
}  // namespace purpose

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);
  static RngStream for_purpose(std::uint64_t master, std::string_view purpose,
                               std::uint64_t index = 0) {
    return RngStream(derive_seed(master, purpose, index));
  }

  /// Independent child stream; advances this stream by one draw.
  RngStream fork();

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // N(0, 1)
  double gamma(double shape);             // Gamma(shape, 1)
  std::size_t index(std::size_t n);       // uniform in [0, n)

  std::mt19937_64& engine() { return engine_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace gdl

#endif  // GDL_RNG_HPP_
