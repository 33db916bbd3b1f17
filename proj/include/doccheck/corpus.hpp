#pragma once

#include "doccheck/languages.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace doccheck::corpus {

enum class Label { consistent, inconsistent, unlabeled };
enum class Provenance { jit_derived, extracted, synthetic };

std::string_view to_string(Label label);
std::string_view to_string(Provenance provenance);
Label parse_label(std::string_view s);
Provenance parse_provenance(std::string_view s);

// One comment/method pair before and after an edit.
struct JitEditRecord {
  std::string id;
  std::string comment_before;  // C1
  std::string method_before;   // M1
  std::string comment_after;   // C2
  std::string method_after;    // M2
  LanguageId language = LanguageId::java;
  std::map<std::string, std::string> meta;

  bool operator==(const JitEditRecord&) const = default;
};

struct PairExample {
  std::string id;
  std::string comment;  // C
  std::string method;   // M
  Label label = Label::unlabeled;
  LanguageId language = LanguageId::python;
  Provenance provenance = Provenance::extracted;

  bool operator==(const PairExample&) const = default;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

// Post-hoc pair (C1, M2); consistent iff the normalized comments agree.
// The stored comment is normalize_docstring(C1).
PairExample build_jit_pair(const JitEditRecord& rec);

enum class NegativeSide { text, code };

// anchor i paired with text j (side text) or with code j (side code).
struct HardNegative {
  std::size_t anchor;
  std::size_t negative;
  NegativeSide side;

  bool operator==(const HardNegative&) const = default;
};

// Rows are unit vectors. For each anchor i draws one text negative with
// P(j) proportional to exp(u_i.v_j / tau), j != i, and one code negative with
// P(k) proportional to exp(u_k.v_i / tau), k != i. Output order: for each
// anchor, text side then code side. Anchor i's draws depend only on
// (seed, i), not on N or iteration order.
std::vector<HardNegative> mine_hard_negatives(const Eigen::MatrixXd& code_embs,
                                              const Eigen::MatrixXd& text_embs, double tau,
                                              std::uint64_t seed);

DatasetSplit split_dataset(const std::vector<PairExample>& pairs, std::array<double, 3> ratios,
                           std::uint64_t seed);

nlohmann::ordered_json to_json(const PairExample& p);
PairExample pair_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const JitEditRecord& r);
JitEditRecord jit_from_json(const nlohmann::json& j);

void write_pairs(const std::filesystem::path& path, const std::vector<PairExample>& pairs);
std::vector<PairExample> read_pairs(const std::filesystem::path& path);
std::vector<JitEditRecord> read_jit_records(const std::filesystem::path& path);
void write_jit_records(const std::filesystem::path& path, const std::vector<JitEditRecord>& recs);

// Consistent python accessor pairs over distinct nouns ("Returns the price."
// for a price getter, etc.). The last pair shares no word between comment
// and code.
std::vector<PairExample> synthetic_pairs(std::size_t n);

// The positives plus one inconsistent pair per positive whose comment comes
// from another positive (a random derangement).
std::vector<PairExample> with_shuffled_negatives(const std::vector<PairExample>& positives,
                                                 std::uint64_t seed);

}  // namespace doccheck::corpus
