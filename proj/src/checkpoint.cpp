// Copyright 2026 The advmoco Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "advmoco/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "advmoco/config.hpp"

namespace advmoco {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'M', 'O', 'C', 'K', 'P'};

enum class Tag : std::uint8_t { kDoubles = 1, kInts = 2, kString = 3 };

class Writer {
 public:
  template <class T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.append(p, sizeof(T));
  }
  void raw(const void* data, std::size_t n) { bytes_.append(static_cast<const char*>(data), n); }
  void str(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <class T>
  T pod() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  void take(void* out, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated file");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > bytes_.size() - pos_) throw std::runtime_error("checkpoint: truncated file");
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string layout_descriptor(const ParamSet& params) {
  std::ostringstream out;
  for (const auto& b : params.blocks()) {
    out << b.name << ":";
    for (std::size_t i = 0; i < b.shape.size(); ++i) out << (i ? "x" : "") << b.shape[i];
    out << ";";
  }
  return out.str();
}

void Checkpoint::put_doubles(const std::string& name, std::vector<std::uint64_t> shape, std::vector<double> values) {
  std::uint64_t n = 1;
  for (auto s : shape) n *= s;
  if (n != values.size()) throw std::invalid_argument(fmt::format("checkpoint: shape/value mismatch for {}", name));
  entries_[name] = Doubles{std::move(shape), std::move(values)};
}

void Checkpoint::put_vector(const std::string& name, const Vector& v) {
  put_doubles(name, {static_cast<std::uint64_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size()));
}

void Checkpoint::put_matrix(const std::string& name, const Matrix& m) {
  put_doubles(name, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
              std::vector<double>(m.data(), m.data() + m.size()));
}

void Checkpoint::put_ints(const std::string& name, Ints values) { entries_[name] = std::move(values); }

void Checkpoint::put_string(const std::string& name, std::string value) { entries_[name] = std::move(value); }

void Checkpoint::put_params(const std::string& name, const ParamSet& params) {
  put_vector(name, params.values());
  put_string(name + ".layout", layout_descriptor(params));
}

const Checkpoint::Entry& Checkpoint::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error(fmt::format("checkpoint: missing entry {}", name));
  return it->second;
}

const Checkpoint::Doubles& Checkpoint::doubles(const std::string& name) const {
  const auto* d = std::get_if<Doubles>(&entry(name));
  if (d == nullptr) throw std::runtime_error(fmt::format("checkpoint: {} is not a float64 array", name));
  return *d;
}

Vector Checkpoint::vector(const std::string& name) const {
  const auto& d = doubles(name);
  return Eigen::Map<const Vector>(d.values.data(), static_cast<Eigen::Index>(d.values.size()));
}

Matrix Checkpoint::matrix(const std::string& name) const {
  const auto& d = doubles(name);
  if (d.shape.size() != 2) throw std::runtime_error(fmt::format("checkpoint: {} is not a matrix", name));
  return Eigen::Map<const Matrix>(d.values.data(), static_cast<Eigen::Index>(d.shape[0]),
                                  static_cast<Eigen::Index>(d.shape[1]));
}

const Checkpoint::Ints& Checkpoint::ints(const std::string& name) const {
  const auto* v = std::get_if<Ints>(&entry(name));
  if (v == nullptr) throw std::runtime_error(fmt::format("checkpoint: {} is not an int64 array", name));
  return *v;
}

std::int64_t Checkpoint::integer(const std::string& name) const {
  const auto& v = ints(name);
  if (v.size() != 1) throw std::runtime_error(fmt::format("checkpoint: {} is not a scalar", name));
  return v[0];
}

const std::string& Checkpoint::string(const std::string& name) const {
  const auto* s = std::get_if<std::string>(&entry(name));
  if (s == nullptr) throw std::runtime_error(fmt::format("checkpoint: {} is not a string", name));
  return *s;
}

void Checkpoint::get_params(const std::string& name, ParamSet& into) const {
  if (string(name + ".layout") != layout_descriptor(into))
    throw std::runtime_error(fmt::format("checkpoint: layout of {} does not match the configured model", name));
  const auto& d = doubles(name);
  if (d.values.size() != into.size()) throw std::runtime_error(fmt::format("checkpoint: size mismatch for {}", name));
  std::memcpy(into.values().data(), d.values.data(), sizeof(double) * d.values.size());
}

void Checkpoint::save(const std::string& path) const {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod(kVersion);
  w.pod(static_cast<std::uint64_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    w.str(name);
    if (const auto* d = std::get_if<Doubles>(&e)) {
      w.pod(Tag::kDoubles);
      w.pod(static_cast<std::uint64_t>(d->shape.size()));
      for (auto s : d->shape) w.pod(s);
      w.raw(d->values.data(), sizeof(double) * d->values.size());
    } else if (const auto* v = std::get_if<Ints>(&e)) {
      w.pod(Tag::kInts);
      w.pod(static_cast<std::uint64_t>(v->size()));
      w.raw(v->data(), sizeof(std::int64_t) * v->size());
    } else {
      w.pod(Tag::kString);
      w.str(std::get<std::string>(e));
    }
  }
  const std::uint64_t checksum = fnv1a64(w.bytes());
  w.pod(checksum);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write checkpoint {}", tmp));
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw std::runtime_error(fmt::format("failed writing checkpoint {}", tmp));
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open checkpoint {}", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint64_t) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(fmt::format("{} is not a checkpoint file", path));
  const std::string_view body(bytes.data(), bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof(stored));
  if (stored != fnv1a64(body)) throw std::runtime_error(fmt::format("checkpoint {} is corrupt (checksum)", path));

  Reader r(body);
  char magic[8];
  r.take(magic, sizeof(magic));
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion) throw std::runtime_error(fmt::format("checkpoint version {} unsupported", version));
  Checkpoint c;
  const auto count = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto tag = r.pod<Tag>();
    switch (tag) {
      case Tag::kDoubles: {
        Doubles d;
        d.shape.resize(r.pod<std::uint64_t>());
        std::uint64_t n = 1;
        for (auto& s : d.shape) n *= (s = r.pod<std::uint64_t>());
        if (n * sizeof(double) > r.remaining()) throw std::runtime_error("checkpoint: truncated file");
        d.values.resize(n);
        r.take(d.values.data(), sizeof(double) * n);
        c.entries_[name] = std::move(d);
        break;
      }
      case Tag::kInts: {
        Ints v(r.pod<std::uint64_t>());
        if (v.size() * sizeof(std::int64_t) > r.remaining()) throw std::runtime_error("checkpoint: truncated file");
        r.take(v.data(), sizeof(std::int64_t) * v.size());
        c.entries_[name] = std::move(v);
        break;
      }
      case Tag::kString: c.entries_[name] = r.str(); break;
      default: throw std::runtime_error("checkpoint: unknown entry tag");
    }
  }
  return c;
}

bool Checkpoint::operator==(const Checkpoint& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto& [name, e] : entries_) {
    auto it = other.entries_.find(name);
    if (it == other.entries_.end() || e.index() != it->second.index()) return false;
    if (const auto* d = std::get_if<Doubles>(&e)) {
      const auto& o = std::get<Doubles>(it->second);
      if (d->shape != o.shape ||
          std::memcmp(d->values.data(), o.values.data(), sizeof(double) * d->values.size()) != 0)
        return false;
    } else if (e != it->second) {
      return false;
    }
  }
  return true;
}

}  // namespace advmoco
