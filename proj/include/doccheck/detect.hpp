#pragma once

#include "doccheck/checkpoint.hpp"
#include "doccheck/extract.hpp"

#include <optional>
#include <string>
#include <vector>

namespace doccheck::detect {

enum class Prediction { consistent, inconsistent, missing_docstring };
std::string_view to_string(Prediction p);

struct CheckResult {
  std::string function_name;
  std::string code;
  std::optional<std::string> docstring;
  Prediction prediction = Prediction::consistent;
  double confidence = 0.0;  // P(inconsistent); 1 for missing docstrings
  std::string recommended_docstring;
  // Not serialized; surfaced through diagnostics.
  bool input_truncated = false;
  bool generation_empty = false;
};

// Exactly the six public fields.
nlohmann::ordered_json to_json(const CheckResult& r);

struct DecodeConfig {
  int beam_width = 1;
  int max_new_tokens = 64;
};

struct Generation {
  std::vector<int> tokens;  // without the final EOS
  std::string text;         // detokenized, whitespace-trimmed
  bool empty = false;       // only EOS was produced
  bool input_truncated = false;
};

// Greedy (beam_width 1) or beam search from BOS; ties go to the lower id.
Generation generate_ids(std::span<const int> code_ids, const model::Checkpoint& model, const DecodeConfig& cfg = {});
Generation generate_docstring(const std::string& code, const model::Checkpoint& model, const DecodeConfig& cfg = {});

// P(inconsistent) from the cross-encoded pair.
double inconsistency_probability(std::span<const int> code_ids, std::span<const int> text_ids,
                                 const model::Checkpoint& model);

struct CheckOptions {
  double threshold = 0.5;
  DecodeConfig decode;
};

CheckResult check_pair(const std::string& code, const std::string& docstring, const model::Checkpoint& model,
                       const CheckOptions& options = {});

struct CheckReport {
  std::vector<CheckResult> results;
  std::vector<std::string> diagnostics;
  // Parallel to results: the splice applying the recommendation, for
  // flagged functions with a non-empty recommendation.
  std::vector<std::optional<extract::DocEdit>> edits;
};

// The code handed to the model: the record's code with its own docstring
// literal removed (Python keeps it inside the body).
std::string model_code(const extract::FunctionRecord& record);

CheckReport check_source(const std::string& source, LanguageId language, const model::Checkpoint& model,
                         const CheckOptions& options = {});

// {"results":[...],"diagnostics":[...],"model_version":"..."}; shared by
// the CLI and the HTTP API. The version is Checkpoint::version(), which
// hashes the whole checkpoint, so callers compute it once.
nlohmann::ordered_json report_json(const CheckReport& report, std::string_view model_version);

}  // namespace doccheck::detect
