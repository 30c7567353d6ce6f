#include "hypirb/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hypirb::harness {

namespace {

constexpr char kMagic[] = "HYPB1\n";
constexpr std::size_t kMagicLen = 6;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct RawFile {
  nlohmann::json header;
  std::string payload;
};

RawFile read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kMagicLen + 8 || bytes.compare(0, kMagicLen, kMagic) != 0) {
    throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + kMagicLen, 8);
  if (len > bytes.size() - kMagicLen - 8) throw CheckpointError("'" + path + "': truncated header");
  RawFile raw;
  try {
    raw.header = nlohmann::json::parse(bytes.substr(kMagicLen + 8, len));
  } catch (const std::exception& e) {
    throw CheckpointError("'" + path + "': corrupt header: " + e.what());
  }
  raw.payload = bytes.substr(kMagicLen + 8 + len);
  return raw;
}

void validate_header(const nlohmann::json& h, std::size_t payload_bytes, const std::string& path) {
  if (!h.contains("format_version") || h["format_version"] != kCheckpointVersion) {
    throw CheckpointError("'" + path + "': unsupported format version " +
                          (h.contains("format_version") ? h["format_version"].dump() : std::string("(none)")));
  }
  if (!h.contains("manifest") || !h["manifest"].is_array()) throw CheckpointError("'" + path + "': missing manifest");
  std::uint64_t expected = 0;
  for (const auto& e : h["manifest"]) {
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto count = e.at("count").get<std::uint64_t>();
    std::uint64_t numel = 1;
    for (const auto& d : e.at("shape")) numel *= d.get<std::uint64_t>();
    if (numel != count) throw CheckpointError("'" + path + "': shape/count mismatch for " + e.at("name").dump());
    if (offset != expected) {
      throw CheckpointError("'" + path + "': corrupt manifest, entry " + e.at("name").dump() + " at offset " +
                            std::to_string(offset) + " expected " + std::to_string(expected) +
                            " (overlap or gap)");
    }
    expected += count * 8;
  }
  if (payload_bytes != expected) {
    throw CheckpointError("'" + path + "': payload has " + std::to_string(payload_bytes) + " bytes, manifest needs " +
                          std::to_string(expected) + " (truncated or corrupt)");
  }
}

}  // namespace

std::string bytes_hash(const std::string& bytes) { return hex(fnv1a(bytes.data(), bytes.size())); }

std::string tensor_hash(const ad::Tensor& t) { return hex(fnv1a(t.data().data(), t.numel() * sizeof(double))); }

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format_version"] = ckpt.format_version;
  header["archs"] = ckpt.archs;
  header["rng"] = ckpt.rng_state;
  header["step"] = ckpt.step;
  header["meta"] = ckpt.meta;
  header["manifest"] = nlohmann::json::array();
  std::string payload;
  for (const auto& name : ckpt.params.names()) {
    const auto& t = ckpt.params.at(name);
    header["manifest"].push_back({{"name", name},
                                  {"shape", t.shape()},
                                  {"offset", payload.size()},
                                  {"count", t.numel()},
                                  {"hash", tensor_hash(t)}});
    payload.append(reinterpret_cast<const char*>(t.data().data()), t.numel() * sizeof(double));
  }
  const std::string text = header.dump();
  const std::uint64_t len = text.size();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, kMagicLen);
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw CheckpointError("short write to '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot move checkpoint into '" + path + "'");
}

nlohmann::json read_checkpoint_header(const std::string& path) {
  RawFile raw = read_raw(path);
  validate_header(raw.header, raw.payload.size(), path);
  return raw.header;
}

Checkpoint load_checkpoint(const std::string& path) {
  RawFile raw = read_raw(path);
  validate_header(raw.header, raw.payload.size(), path);
  Checkpoint c;
  c.format_version = raw.header["format_version"];
  c.archs = raw.header.value("archs", nlohmann::json::object());
  c.rng_state = raw.header.value("rng", std::string());
  c.step = raw.header.value("step", std::uint64_t{0});
  c.meta = raw.header.value("meta", nlohmann::json::object());
  for (const auto& e : raw.header["manifest"]) {
    const auto offset = e["offset"].get<std::size_t>();
    const auto count = e["count"].get<std::size_t>();
    std::vector<double> v(count);
    std::memcpy(v.data(), raw.payload.data() + offset, count * sizeof(double));
    auto t = ad::Tensor::from(e["shape"].get<ad::Shape>(), std::move(v));
    if (tensor_hash(t) != e.at("hash").get<std::string>()) {
      throw CheckpointError("'" + path + "': hash mismatch for " + e["name"].dump());
    }
    c.params.add(e["name"].get<std::string>(), t);
  }
  return c;
}

void add_prefixed(models::ParamStore& dst, const std::string& prefix, const models::ParamStore& src) {
  for (const auto& name : src.names()) dst.add(prefix + name, src.at(name));
}

models::ParamStore take_prefixed(const models::ParamStore& src, const std::string& prefix) {
  models::ParamStore out;
  for (const auto& name : src.names()) {
    if (name.rfind(prefix, 0) == 0) out.add(name.substr(prefix.size()), src.at(name));
  }
  return out;
}

void save_model(const std::string& path, const models::Model& m, const nlohmann::json& meta) {
  Checkpoint c;
  c.archs["model"] = m.arch;
  c.params = m.params;
  c.meta = meta;
  save_checkpoint(path, c);
}

models::Model load_model(const std::string& path) {
  Checkpoint c = load_checkpoint(path);
  if (!c.archs.contains("model")) throw CheckpointError("'" + path + "' does not hold a single model");
  return {c.archs["model"].get<models::ArchSpec>(), c.params};
}

}  // namespace hypirb::harness
