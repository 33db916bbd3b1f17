#pragma once

#include "doccheck/model.hpp"
#include "doccheck/tokenizer.hpp"

#include <filesystem>
#include <string>

namespace doccheck::model {

// Everything needed to serve a model: architecture, weights, tokenizer.
struct Checkpoint {
  ModelConfig config;
  Parameters params;
  tokenize::Vocabulary vocab;

  // Short content hash of config, vocabulary and weights.
  std::string version() const;
};

// Layout: "DOCCHECK" magic, u32 format version, u64 header length, JSON
// header {config, vocab, tensors:[{name, rows, cols}]}, then every tensor as
// little-endian IEEE doubles in header order. Round-trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);  // Io, BadFormat

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

}  // namespace doccheck::model
