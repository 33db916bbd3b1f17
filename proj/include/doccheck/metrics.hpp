#pragma once

#include "doccheck/corpus.hpp"
#include "doccheck/languages.hpp"

#include "json.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace doccheck::eval {

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
  std::optional<double> bleu4;
  std::map<LanguageId, double> per_language;
};

nlohmann::ordered_json to_json(const MetricsReport& r);

MetricsReport classification_metrics(const std::vector<corpus::Label>& preds,
                                     const std::vector<corpus::Label>& labels,
                                     corpus::Label positive = corpus::Label::inconsistent);

std::vector<std::string> whitespace_tokens(std::string_view text);

// Sentence BLEU-4 with add-one smoothing on the n >= 2 precisions, in [0, 100].
double smoothed_bleu4(const std::vector<std::string>& candidate,
                      const std::vector<std::string>& reference);

struct BleuPair {
  std::string candidate;
  std::string reference;
  LanguageId language = LanguageId::python;
};

// Mean sentence BLEU per language; overall is the unweighted mean over the
// languages present.
MetricsReport corpus_bleu(const std::vector<BleuPair>& pairs);

}  // namespace doccheck::eval
