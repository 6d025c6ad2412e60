// Copyright 2026 The RoE Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "roe/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "roe/errors.hpp"

namespace roe {

namespace {

constexpr std::array<char, 8> kMagic{'R', 'O', 'E', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw ConfigError("checkpoint: truncated file " + path.string());
  return value;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd get_vector(std::istream& in, const std::filesystem::path& path) {
  const auto n = get<std::uint64_t>(in, path);
  if (n > (std::uint64_t{1} << 32)) throw ConfigError("checkpoint: implausible vector length in " + path.string());
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw ConfigError("checkpoint: truncated file " + path.string());
  }
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    const std::string meta = checkpoint.meta.dump();
    put<std::uint64_t>(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put_vector(out, checkpoint.parameters);
    put_vector(out, checkpoint.optimizer_state);
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ConfigError("checkpoint: " + path.string() + " is not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto meta_len = get<std::uint64_t>(in, path);
  std::string meta(meta_len, '\0');
  if (!in.read(meta.data(), static_cast<std::streamsize>(meta_len))) throw ConfigError("checkpoint: truncated metadata");
  Checkpoint ckpt;
  try {
    ckpt.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: corrupt metadata: ") + e.what());
  }
  ckpt.parameters = get_vector(in, path);
  ckpt.optimizer_state = get_vector(in, path);
  if (ckpt.parameters.size() != ckpt.optimizer_state.size()) {
    throw ConfigError("checkpoint: parameter and optimizer-state lengths differ");
  }
  return ckpt;
}

}  // namespace roe
