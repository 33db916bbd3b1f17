#pragma once

#include "doccheck/corpus.hpp"
#include "doccheck/metrics.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace doccheck::eval {

// Lower-cased alphanumeric runs; everything else separates terms.
std::vector<std::string> term_tokens(std::string_view text);

using SparseVector = std::vector<std::pair<int, double>>;  // sorted by index

class TfidfVectorizer {
public:
  // Every comment and every method of `docs` is one document.
  explicit TfidfVectorizer(const std::vector<corpus::PairExample>& docs);

  // (1 + ln tf) * idf, L2-normalized; idf = ln((1 + n) / (1 + df)) + 1.
  // Terms unseen in training get df = 0.
  SparseVector transform(std::string_view text) const;
  int dimension() const { return static_cast<int>(index_.size()) + 1; }  // last slot: unseen terms

private:
  std::unordered_map<std::string, int> index_;
  std::vector<double> idf_;
  double unseen_idf_ = 1.0;
};

double cosine(const SparseVector& a, const SparseVector& b);

struct ThresholdBaseline {
  double threshold = 0.0;          // similarity below this means inconsistent
  MetricsReport report;            // on the test pairs
  std::vector<double> test_scores;
};

ThresholdBaseline tfidf_similarity_baseline(const std::vector<corpus::PairExample>& train,
                                            const std::vector<corpus::PairExample>& test);

struct SvmOptions {
  int epochs = 50;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
};

// Linear max-margin classifier (Pegasos-style hinge subgradient steps) over
// [tfidf(comment) ; tfidf(method) ; 1].
MetricsReport tfidf_svm_baseline(const std::vector<corpus::PairExample>& train,
                                 const std::vector<corpus::PairExample>& test,
                                 const SvmOptions& options = {});

}  // namespace doccheck::eval
