#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace doccheck::tokenize {

// Special ids are fixed and precede the 256 byte tokens.
enum Special : int { PAD = 0, UNK = 1, BOS = 2, EOS = 3, CLS = 4, SEP = 5, MSK = 6 };
inline constexpr int kNumSpecials = 7;
inline constexpr int kBaseVocab = kNumSpecials + 256;

enum class Wrap { none, bos_eos, cls_sep };

class Vocabulary {
public:
  // Byte alphabet only, no merges.
  Vocabulary();

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::pair<int, int>>& merges() const { return merges_; }
  const std::string& token_bytes(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  static bool is_special(int id) { return id >= 0 && id < kNumSpecials; }
  static int byte_id(unsigned char b) { return kNumSpecials + b; }

  // Appends a merge of two existing ids and returns the id of the merged
  // token. A merge whose bytes already name a token reuses that id.
  int add_merge(int left, int right);
  // Merge rank of (left, right), or -1.
  int rank(int left, int right) const;
  int merge_result(int rank) const { return results_.at(static_cast<std::size_t>(rank)); }
  // Id of the token with exactly these bytes, or -1.
  int find(std::string_view bytes) const;
  // The vocabulary restricted to its first `n` merges.
  Vocabulary prefix(std::size_t n) const;

  nlohmann::ordered_json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& o) const { return merges_ == o.merges_; }

private:
  std::vector<std::string> tokens_;
  std::vector<std::pair<int, int>> merges_;
  std::vector<int> results_;
  std::unordered_map<std::uint64_t, int> rank_;
  std::unordered_map<std::string, int> ids_;
};

// Splits text into the chunks merges may not cross: an optional single
// leading space plus a run of letters, digits or punctuation, or a run of
// whitespace.
std::vector<std::string_view> pretokenize(std::string_view text);

// Greedy byte-level BPE. Training has no random choices; `seed` is accepted
// for interface symmetry and recorded nowhere.
Vocabulary train_bpe(const std::vector<std::string>& corpus, int vocab_size, std::uint64_t seed = 0);

std::vector<int> encode(std::string_view text, const Vocabulary& vocab, Wrap wrap = Wrap::none);
std::string decode(std::span<const int> ids, const Vocabulary& vocab);

std::string_view special_name(int id);

}  // namespace doccheck::tokenize
