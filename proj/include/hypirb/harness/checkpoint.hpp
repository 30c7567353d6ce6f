#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "hypirb/models/params.hpp"

namespace hypirb::harness {

constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File layout: "HYPB1\n", 8-byte little-endian header length, JSON header,
/// then the little-endian float64 payload. The header carries the manifest
/// (name, shape, byte offset, count, FNV-1a hash per tensor).
struct Checkpoint {
  int format_version = kCheckpointVersion;
  nlohmann::json archs = nlohmann::json::object();
  models::ParamStore params;
  std::string rng_state;
  std::uint64_t step = 0;
  nlohmann::json meta = nlohmann::json::object();
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Hex FNV-1a 64 over the little-endian bytes of the values.
std::string tensor_hash(const ad::Tensor& t);

/// Hex FNV-1a 64 of arbitrary bytes.
std::string bytes_hash(const std::string& bytes);

/// Header only (no payload decoding); validates the manifest.
nlohmann::json read_checkpoint_header(const std::string& path);

/// Prefix every name of `src` and add to `dst`.
void add_prefixed(models::ParamStore& dst, const std::string& prefix, const models::ParamStore& src);
/// Entries of `src` under `prefix`, with the prefix stripped, in file order.
models::ParamStore take_prefixed(const models::ParamStore& src, const std::string& prefix);

/// Stores a single model as a checkpoint with archs {"model": arch}.
void save_model(const std::string& path, const models::Model& m, const nlohmann::json& meta = nlohmann::json::object());
models::Model load_model(const std::string& path);

}  // namespace hypirb::harness
