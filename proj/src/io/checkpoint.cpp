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
#include "gdl/checkpoint.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "gdl/diagnostics.hpp"

namespace gdl::io {
namespace {

using Json = nlohmann::json;

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int sextet(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

Json arch_json(const net::StochasticNet& net) {
  Json layers = Json::array();
  for (const auto& l : net.architecture().layers) {
    Json j{{"kind", net::to_string(l.kind)}};
    if (l.is_linear()) {
      j["in"] = l.in;
      j["out"] = l.out;
    }
    if (l.kind == net::LayerKind::kLeakyRelu) j["slope"] = l.slope;
    layers.push_back(j);
  }
  return Json{{"layers", layers}, {"prior_sigma", net.prior_sigma()}};
}

template <class T>
T field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw CheckpointError(std::string("checkpoint is missing '") + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw CheckpointError(std::string("checkpoint field '") + key + "': " + e.what());
  }
}

net::StochasticNet net_from_arch(const Json& arch) {
  net::Architecture a;
  for (const auto& lj : field<Json>(arch, "layers")) {
    net::LayerSpec l;
    try {
      l.kind = net::layer_kind_from_string(field<std::string>(lj, "kind"));
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("checkpoint arch: ") + e.what());
    }
    if (l.is_linear()) {
      l.in = field<std::size_t>(lj, "in");
      l.out = field<std::size_t>(lj, "out");
    }
    if (l.kind == net::LayerKind::kLeakyRelu) l.slope = field<double>(lj, "slope");
    a.layers.push_back(l);
  }
  const double prior = field<double>(arch, "prior_sigma");
  try {
    a.validate();
    if (!(prior > 0.0)) throw std::invalid_argument("prior_sigma must be > 0");
    return net::StochasticNet(a, prior);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint arch: ") + e.what());
  }
}

}  // namespace

std::string base64_encode(std::span<const unsigned char> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    unsigned v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) {
    throw CheckpointError("corrupt base64: length " + std::to_string(text.size()) + " is not a multiple of 4");
  }
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    unsigned v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int s = 0;
      if (c == '=' && last && k >= 2) {
        ++pad;
      } else {
        if (pad > 0 || (s = sextet(c)) < 0) {
          throw CheckpointError("corrupt base64: bad character at offset " + std::to_string(i + k));
        }
      }
      v = (v << 6) | static_cast<unsigned>(s);
    }
    out.push_back(static_cast<unsigned char>(v >> 16));
    if (pad < 2) out.push_back(static_cast<unsigned char>(v >> 8));
    if (pad < 1) out.push_back(static_cast<unsigned char>(v));
  }
  return out;
}

std::string encode_doubles(std::span<const double> values) {
  std::vector<unsigned char> bytes;
  bytes.reserve(values.size() * 8);
  for (double d : values) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_doubles(const std::string& text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) {
    throw CheckpointError("corrupt data: " + std::to_string(bytes.size()) + " bytes is not a whole number of doubles");
  }
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string checkpoint_to_string(const net::StochasticNet& net, const CheckpointMeta& meta) {
  Json params = Json::object();
  for (const auto& p : net.parameters()) {
    params[p.name] = {{"shape", p.value.shape()}, {"data_b64", encode_doubles(p.value.data())}};
  }
  const Json j{{"version", kCheckpointVersion},
               {"arch", arch_json(net)},
               {"epoch", meta.epoch},
               {"seed", meta.seed},
               {"config_hash", meta.config_hash},
               {"params", params}};
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text, const std::optional<std::string>& expected_hash) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw CheckpointError("checkpoint is not a JSON object");
  const int version = field<int>(j, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck{net_from_arch(field<Json>(j, "arch")), {}};
  ck.meta.epoch = field<std::size_t>(j, "epoch");
  ck.meta.seed = field<std::uint64_t>(j, "seed");
  ck.meta.config_hash = field<std::string>(j, "config_hash");

  const Json params = field<Json>(j, "params");
  if (!params.is_object()) throw CheckpointError("checkpoint params is not an object");
  if (params.size() != ck.net.parameters().size()) {
    throw CheckpointError("checkpoint has " + std::to_string(params.size()) + " parameters, the arch needs " +
                          std::to_string(ck.net.parameters().size()));
  }
  for (auto& p : ck.net.parameters()) {
    auto it = params.find(p.name);
    if (it == params.end()) throw CheckpointError("checkpoint is missing parameter " + p.name);
    const auto shape = field<Shape>(*it, "shape");
    if (shape != p.value.shape()) {
      throw CheckpointError("parameter " + p.name + " has shape " + to_string(shape) + ", the arch needs " +
                            to_string(p.value.shape()));
    }
    std::vector<double> values;
    try {
      values = decode_doubles(field<std::string>(*it, "data_b64"));
    } catch (const CheckpointError& e) {
      throw CheckpointError("parameter " + p.name + ": " + e.what());
    }
    if (values.size() != p.value.size()) {
      throw CheckpointError("parameter " + p.name + " holds " + std::to_string(values.size()) +
                            " values, its shape needs " + std::to_string(p.value.size()));
    }
    std::copy(values.begin(), values.end(), p.value.data().begin());
  }
  if (expected_hash && *expected_hash != ck.meta.config_hash) {
    warn("checkpoint config_hash " + ck.meta.config_hash + " does not match the current config " + *expected_hash);
  }
  return ck;
}

void save_checkpoint(const net::StochasticNet& net, const CheckpointMeta& meta, const std::string& path) {
  const std::string text = checkpoint_to_string(net, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path, const std::optional<std::string>& expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str(), expected_hash);
}

}  // namespace gdl::io
