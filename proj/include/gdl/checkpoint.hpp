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
#ifndef GDL_CHECKPOINT_HPP_
#define GDL_CHECKPOINT_HPP_

// Checkpoints: one JSON document per net,
//   {version: 1, arch, epoch, seed, config_hash,
//    params: {name: {shape, data_b64}}}
// with data_b64 the base64 of the values as little-endian IEEE-754 doubles.
// Keys are written sorted, so save(load(save(net))) is byte-identical.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdl/stochastic_net.hpp"

namespace gdl::io {

inline constexpr int kCheckpointVersion = 1;

/// Unreadable or inconsistent checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  net::StochasticNet net;
  CheckpointMeta meta;
};

std::string base64_encode(std::span<const unsigned char> bytes);
/// Strict: rejects characters outside the alphabet, bad padding and lengths
/// that are not a multiple of 4.
std::vector<unsigned char> base64_decode(const std::string& text);

std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const std::string& text);

std::string checkpoint_to_string(const net::StochasticNet& net, const CheckpointMeta& meta);
/// With expected_hash set, a differing config_hash is reported through
/// gdl::warn (and so lands in any active WarningCapture).
Checkpoint checkpoint_from_string(const std::string& text,
                                  const std::optional<std::string>& expected_hash = std::nullopt);

void save_checkpoint(const net::StochasticNet& net, const CheckpointMeta& meta, const std::string& path);
Checkpoint load_checkpoint(const std::string& path,
                           const std::optional<std::string>& expected_hash = std::nullopt);

}  // namespace gdl::io

#endif  // GDL_CHECKPOINT_HPP_
