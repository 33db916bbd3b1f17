#include "doccheck/metrics.hpp"

#include "doccheck/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace doccheck::eval {

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["tn"] = r.tn;
  j["fn"] = r.fn;
  j["bleu4"] = r.bleu4 ? nlohmann::ordered_json(*r.bleu4) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (auto [lang, score] : r.per_language) per[std::string(to_string(lang))] = score;
  j["per_language"] = per;
  return j;
}

MetricsReport classification_metrics(const std::vector<corpus::Label>& preds,
                                     const std::vector<corpus::Label>& labels,
                                     corpus::Label positive) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(preds.size()) + " predictions for " +
                                               std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw Error(ErrorKind::EmptyInput, "no predictions");
  MetricsReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive;
    const bool l = labels[i] == positive;
    if (p && l) ++r.tp;
    else if (p) ++r.fp;
    else if (l) ++r.fn;
    else ++r.tn;
  }
  const double total = static_cast<double>(preds.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / total;
  r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

double smoothed_bleu4(const std::vector<std::string>& candidate,
                      const std::vector<std::string>& reference) {
  if (reference.empty()) throw Error(ErrorKind::EmptyReference, "reference has no tokens");
  if (candidate.empty()) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, long> ref_counts;
    for (std::size_t i = 0; i + n <= reference.size(); ++i) {
      ++ref_counts[std::vector<std::string>(reference.begin() + static_cast<long>(i),
                                            reference.begin() + static_cast<long>(i + n))];
    }
    std::map<std::vector<std::string>, long> cand_counts;
    for (std::size_t i = 0; i + n <= candidate.size(); ++i) {
      ++cand_counts[std::vector<std::string>(candidate.begin() + static_cast<long>(i),
                                             candidate.begin() + static_cast<long>(i + n))];
    }
    long matched = 0;
    long total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    const double smooth = n >= 2 ? 1.0 : 0.0;
    const double num = static_cast<double>(matched) + smooth;
    const double den = static_cast<double>(total) + smooth;
    if (num <= 0.0) return 0.0;
    log_sum += std::log(num / den);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double log_bp = c < r ? 1.0 - r / c : 0.0;
  return 100.0 * std::exp(log_sum / 4.0 + log_bp);
}

MetricsReport corpus_bleu(const std::vector<BleuPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "no candidate/reference pairs");
  std::map<LanguageId, std::pair<double, long>> sums;
  for (const BleuPair& p : pairs) {
    auto& [sum, count] = sums[p.language];
    sum += smoothed_bleu4(whitespace_tokens(p.candidate), whitespace_tokens(p.reference));
    ++count;
  }
  MetricsReport r;
  double overall = 0.0;
  for (const auto& [lang, sc] : sums) {
    const double mean = sc.first / static_cast<double>(sc.second);
    r.per_language[lang] = mean;
    overall += mean;
  }
  r.bleu4 = overall / static_cast<double>(sums.size());
  return r;
}

}  // namespace doccheck::eval
