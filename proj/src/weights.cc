#include "vocalrestore/weights.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>

#include "json.hpp"
#include "vocalrestore/error.h"
#include "vocalrestore/file_util.h"

namespace vr {
namespace {

constexpr char kMagic[8] = {'S', 'R', 'S', 'W', '0', '0', '0', '1'};

std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

std::size_t Param::count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

void WeightStore::set(const std::string& name, Param p) {
  if (p.count() != p.values.size())
    throw ShapeError("parameter " + name + " has shape " + shape_str(p.shape) + " but " +
                     std::to_string(p.values.size()) + " values");
  params_[name] = std::move(p);
}

const Param& WeightStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ManifestError("missing parameter: " + name);
  return it->second;
}

Param& WeightStore::get_mutable(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ManifestError("missing parameter: " + name);
  return it->second;
}

MatrixRef<float> WeightStore::matrix(const std::string& name) const {
  const Param& p = get(name);
  if (p.shape.size() != 2) throw ShapeError("parameter " + name + " is not a matrix");
  return {p.values, p.shape[0], p.shape[1]};
}

std::span<const float> WeightStore::vector(const std::string& name) const {
  return get(name).values;
}

Manifest WeightStore::manifest() const {
  Manifest m;
  for (const auto& [name, p] : params_) m[name] = p.shape;
  return m;
}

void check_manifest(const WeightStore& store, const Manifest& expected) {
  for (const auto& [name, shape] : expected) {
    if (!store.contains(name)) throw ManifestError("missing parameter: " + name);
    const Param& p = store.get(name);
    if (p.shape != shape)
      throw ShapeError("parameter " + name + " has shape " + shape_str(p.shape) +
                       ", expected " + shape_str(shape));
    for (float v : p.values)
      if (!std::isfinite(v)) throw InvalidInputError("parameter " + name + " is not finite");
  }
  for (const auto& [name, p] : store.params())
    if (!expected.count(name)) throw ManifestError("unexpected parameter: " + name);
}

std::vector<unsigned char> encode_weights(const WeightStore& store) {
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& [name, p] : store.params()) {
    nlohmann::ordered_json t;
    t["name"] = name;
    t["shape"] = p.shape;
    t["dtype"] = "f32";
    t["offset"] = offset;
    tensors.push_back(std::move(t));
    offset += p.values.size() * 4;
  }
  nlohmann::ordered_json manifest;
  manifest["tensors"] = std::move(tensors);
  const std::string text = manifest.dump();

  std::vector<unsigned char> out(kMagic, kMagic + 8);
  const uint64_t len = text.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(len >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& [name, p] : store.params())
    for (float v : p.values) {
      const uint32_t u = std::bit_cast<uint32_t>(v);
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(u >> (8 * i)));
    }
  return out;
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, encode_weights(store));
}

WeightStore decode_weights(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw FormatError("not a weight file (bad magic)");
  uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<uint64_t>(bytes[8 + i]) << (8 * i);
  if (len > bytes.size() - 16) throw CorruptFileError("weight manifest truncated");
  const std::size_t payload = 16 + static_cast<std::size_t>(len);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + payload);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed weight manifest: ") + e.what());
  }
  WeightStore store;
  try {
    for (const auto& t : manifest.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      if (t.at("dtype").get<std::string>() != "f32")
        throw FormatError("tensor " + name + " has unsupported dtype");
      Param p;
      p.shape = t.at("shape").get<std::vector<int>>();
      for (int d : p.shape)
        if (d < 0) throw FormatError("tensor " + name + " has a negative dimension");
      const std::size_t offset = t.at("offset").get<std::size_t>();
      const std::size_t n = p.count();
      if (offset % 4 != 0 || payload + offset + 4 * n > bytes.size())
        throw CorruptFileError("tensor " + name + " payload truncated");
      p.values.resize(n);
      const unsigned char* src = bytes.data() + payload + offset;
      for (std::size_t i = 0; i < n; ++i, src += 4) {
        const uint32_t u = src[0] | (src[1] << 8) | (src[2] << 16) |
                           (static_cast<uint32_t>(src[3]) << 24);
        p.values[i] = std::bit_cast<float>(u);
      }
      store.set(name, std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed weight manifest: ") + e.what());
  }
  return store;
}

WeightStore load_weights(const std::filesystem::path& path) {
  return decode_weights(read_file_bytes(path));
}

}  // namespace vr
