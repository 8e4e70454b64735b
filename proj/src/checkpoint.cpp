/* Copyright 2026 The swunet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "swunet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace swunet {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write to '" + path_.string() + "' failed");
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!std::filesystem::exists(path)) {
      throw NotFoundError("checkpoint '" + path.string() + "' not found");
    }
    if (!in_) throw IoError("cannot open '" + path.string() + "'");
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw CheckpointError("'" + path_.string() + "' is truncated");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

template <typename T>
std::vector<std::uint32_t> logical_dims(const Parameter<T>& p) {
  const Shape s = p.value.shape();
  if (p.rank == 1) return {static_cast<std::uint32_t>(s.n)};
  return {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
          static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)};
}

std::string dims_str(const std::vector<std::uint32_t>& d) {
  std::string s = "[";
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(d[i]);
  }
  return s + "]";
}

}  // namespace

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw CheckpointError("'" + path.string() + "' is not a checkpoint");
  }
  CheckpointFile file;
  file.version = r.u32();
  if (file.version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(file.version));
  }
  const std::uint32_t count = r.u32();
  file.trainable_count = r.u64();
  file.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const std::uint32_t len = r.u32();
    if (len > (1u << 16)) throw CheckpointError("corrupt entry name length");
    e.name.resize(len);
    r.bytes(e.name.data(), len);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 4) throw CheckpointError("corrupt rank for '" + e.name + "'");
    std::size_t numel = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      e.dims.push_back(r.u32());
      numel *= e.dims.back();
    }
    if (numel > (std::size_t{1} << 32)) throw CheckpointError("corrupt dims for '" + e.name + "'");
    e.values.resize(numel);
    r.bytes(e.values.data(), numel * sizeof(float));
    file.entries.push_back(std::move(e));
  }
  return file;
}

template <typename T>
void save_weights(const ParameterStore<T>& store, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(store.entries().size()));
  w.u64(store.trainable_count());
  std::vector<float> buf;
  for (const auto& p : store.entries()) {
    w.u32(static_cast<std::uint32_t>(p->name.size()));
    w.bytes(p->name.data(), p->name.size());
    const auto dims = logical_dims(*p);
    w.u32(static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) w.u32(d);
    auto data = p->value.data();
    buf.assign(data.begin(), data.end());
    w.bytes(buf.data(), buf.size() * sizeof(float));
  }
  w.finish();
}

template <typename T>
void load_weights(ParameterStore<T>& store, const std::filesystem::path& path) {
  CheckpointFile file = read_checkpoint(path);
  std::unordered_map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : file.entries) by_name.emplace(e.name, &e);
  for (const auto& p : store.entries()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw CheckpointError("checkpoint is missing '" + p->name + "'");
    }
    const auto want = logical_dims(*p);
    if (it->second->dims != want) {
      throw CheckpointError("shape mismatch for '" + p->name + "': checkpoint " +
                            dims_str(it->second->dims) + ", network " + dims_str(want));
    }
  }
  if (file.entries.size() != store.entries().size()) {
    std::unordered_map<std::string, bool> known;
    for (const auto& p : store.entries()) known.emplace(p->name, true);
    for (const auto& e : file.entries) {
      if (!known.count(e.name)) {
        throw CheckpointError("checkpoint has unexpected entry '" + e.name + "'");
      }
    }
    throw CheckpointError("checkpoint has duplicate entries");
  }
  for (auto& p : store.entries()) {
    const auto& src = by_name.at(p->name)->values;
    auto dst = p->value.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(src[i]);
  }
}

template void save_weights(const ParameterStore<float>&, const std::filesystem::path&);
template void save_weights(const ParameterStore<double>&, const std::filesystem::path&);
template void load_weights(ParameterStore<float>&, const std::filesystem::path&);
template void load_weights(ParameterStore<double>&, const std::filesystem::path&);

}  // namespace swunet
