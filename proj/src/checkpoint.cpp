/*
 * Copyright 2026 The cfs3d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cfs3d/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cfs3d/config.hpp"
#include "cfs3d/error.hpp"

namespace cfs3d {
namespace {

constexpr char kMagic[8] = {'C', 'F', 'S', '3', 'D', 'C', 'K', 'P'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i)
      out_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void put_double(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(const std::string& s) { out_ += s; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_double() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CorruptionError("checkpoint is truncated");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_record(Writer& w, const std::string& name, const diffcore::Shape& shape,
                std::span<const double> values) {
  w.put(static_cast<std::uint32_t>(name.size()));
  w.put_bytes(name);
  w.put(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) w.put(static_cast<std::uint64_t>(d));
  for (double v : values) w.put_double(v);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string text = format_model_config(ckpt.config);
  text += "step=" + std::to_string(ckpt.step) + "\n";
  text += "epoch=" + std::to_string(ckpt.epoch) + "\n";
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    text += "adam.step=" + std::to_string(o.step) + "\n";
    text += "adam.lr=" + fmt_double(o.lr) + "\n";
    text += "adam.beta1=" + fmt_double(o.beta1) + "\n";
    text += "adam.beta2=" + fmt_double(o.beta2) + "\n";
    text += "adam.epsilon=" + fmt_double(o.epsilon) + "\n";
  }
  for (const auto& [k, v] : ckpt.meta) text += "meta." + k + "=" + v + "\n";

  Writer w;
  w.put_bytes(std::string(kMagic, sizeof kMagic));
  w.put(ckpt.version);
  w.put(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text);

  std::uint32_t count = static_cast<std::uint32_t>(ckpt.params.size());
  const bool moments = ckpt.optimizer && !ckpt.optimizer->m.empty();
  if (moments) {
    if (ckpt.optimizer->m.size() != ckpt.params.size() ||
        ckpt.optimizer->v.size() != ckpt.params.size())
      throw DimensionError("checkpoint: optimizer state does not match parameter list");
    count *= 3;
  }
  w.put(count);
  for (const auto& p : ckpt.params) put_record(w, p.name, p.tensor.shape(), p.tensor.values());
  if (moments) {
    for (std::size_t k = 0; k < ckpt.params.size(); ++k) {
      const auto& p = ckpt.params[k];
      put_record(w, "adam.m." + p.name, p.tensor.shape(), ckpt.optimizer->m[k]);
      put_record(w, "adam.v." + p.name, p.tensor.shape(), ckpt.optimizer->v[k]);
    }
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  r.get_bytes(sizeof kMagic);
  Checkpoint ckpt;
  ckpt.version = r.get<std::uint16_t>();
  if (ckpt.version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(ckpt.version) +
                      " (this reader supports " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto text_len = r.get<std::uint32_t>();
  const auto kv = parse_key_values(r.get_bytes(text_len));
  ckpt.config = parse_model_config(kv);
  auto get_u64 = [&](const std::string& key) -> std::uint64_t {
    const auto it = kv.find(key);
    if (it == kv.end()) throw CorruptionError("checkpoint config lacks '" + key + "'");
    return std::stoull(it->second);
  };
  ckpt.step = get_u64("step");
  ckpt.epoch = get_u64("epoch");
  if (kv.count("adam.step")) {
    diffcore::AdamState o;
    o.step = get_u64("adam.step");
    o.lr = std::stod(kv.at("adam.lr"));
    o.beta1 = std::stod(kv.at("adam.beta1"));
    o.beta2 = std::stod(kv.at("adam.beta2"));
    o.epsilon = std::stod(kv.at("adam.epsilon"));
    ckpt.optimizer = std::move(o);
  }
  for (const auto& [k, v] : kv) {
    if (k.rfind("meta.", 0) == 0) ckpt.meta[k.substr(5)] = v;
  }

  const auto count = r.get<std::uint32_t>();
  std::map<std::string, std::vector<double>> moments;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.get_bytes(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8)
      throw CorruptionError("checkpoint record '" + name + "' has rank " + std::to_string(rank));
    diffcore::Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    const std::size_t n = diffcore::shape_size(shape);
    if (n > bytes.size() / 8)
      throw CorruptionError("checkpoint record '" + name + "' is truncated");
    std::vector<double> values(n);
    for (auto& v : values) v = r.get_double();
    if (name.rfind("adam.", 0) == 0) {
      moments[name] = std::move(values);
    } else {
      ckpt.params.push_back({name, diffcore::Tensor(std::move(shape), std::move(values), true)});
    }
  }
  if (!r.done()) throw CorruptionError("trailing bytes after checkpoint records");
  if (ckpt.optimizer && !moments.empty()) {
    for (const auto& p : ckpt.params) {
      auto m = moments.find("adam.m." + p.name), v = moments.find("adam.v." + p.name);
      if (m == moments.end() || v == moments.end())
        throw CorruptionError("missing optimizer moments for '" + p.name + "'");
      ckpt.optimizer->m.push_back(std::move(m->second));
      ckpt.optimizer->v.push_back(std::move(v->second));
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace cfs3d
