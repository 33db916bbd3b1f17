#include "doctest.h"

#include "doccheck/baselines.hpp"
#include "doccheck/error.hpp"
#include "doccheck/metrics.hpp"
#include "doccheck/rng.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace doccheck;
using namespace doccheck::eval;
using corpus::Label;

namespace {

std::vector<Label> to_labels(const std::vector<int>& v) {
  std::vector<Label> out;
  for (int x : v) out.push_back(x ? Label::inconsistent : Label::consistent);
  return out;
}

}  // namespace

TEST_CASE("smoothed BLEU-4 hand-computed fixtures") {
  for (const auto& fx : oracles::kBleu) {
    CAPTURE(fx.candidate);
    CHECK(std::abs(smoothed_bleu4(whitespace_tokens(fx.candidate), whitespace_tokens(fx.reference)) -
                   fx.expected) < 1e-6);
  }
  CHECK(smoothed_bleu4({}, {"a"}) == 0.0);
  CHECK_THROWS_AS(smoothed_bleu4({"a"}, {}), Error);
}

TEST_CASE("smoothed BLEU-4 stays in range and grows with correct continuations") {
  Rng rng(4);
  const std::vector<std::string> vocab = {"a", "b", "c", "the", "of", "x"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> ref, cand;
    for (std::size_t i = 0, n = 1 + rng.below(10); i < n; ++i) ref.push_back(vocab[rng.below(6)]);
    for (std::size_t i = 0, n = rng.below(12); i < n; ++i) cand.push_back(vocab[rng.below(6)]);
    double s = smoothed_bleu4(cand, ref);
    CHECK(s >= 0.0);
    CHECK(s <= 100.0 + 1e-9);
  }
  // prefixes of the reference: each appended reference token never lowers the score
  const std::vector<std::string> ref = whitespace_tokens("returns the sum of the two given numbers");
  double prev = 0.0;
  for (std::size_t k = 1; k <= ref.size(); ++k) {
    double s = smoothed_bleu4({ref.begin(), ref.begin() + static_cast<long>(k)}, ref);
    CHECK(s >= prev - 1e-12);
    prev = s;
  }
  CHECK(prev == doctest::Approx(100.0));
}

TEST_CASE("classification metrics hand-computed fixtures") {
  for (const auto& fx : oracles::kConfusion) {
    MetricsReport r = classification_metrics(to_labels(fx.preds), to_labels(fx.labels));
    CHECK(r.precision == fx.precision);
    CHECK(r.recall == fx.recall);
    CHECK(r.f1 == fx.f1);
    CHECK(r.accuracy == fx.accuracy);
    CHECK(r.tp + r.fp + r.tn + r.fn == static_cast<long>(fx.preds.size()));
  }
  CHECK_THROWS_AS(classification_metrics(to_labels({1}), to_labels({1, 0})), Error);
  CHECK_THROWS_AS(classification_metrics({}, {}), Error);
}

TEST_CASE("classification metrics are invariant under joint shuffling") {
  Rng rng(8);
  std::vector<int> p, l;
  for (int i = 0; i < 40; ++i) {
    p.push_back(static_cast<int>(rng.below(2)));
    l.push_back(static_cast<int>(rng.below(2)));
  }
  MetricsReport base = classification_metrics(to_labels(p), to_labels(l));
  std::vector<std::size_t> idx(p.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  std::vector<int> p2, l2;
  for (std::size_t i : idx) {
    p2.push_back(p[i]);
    l2.push_back(l[i]);
  }
  MetricsReport shuffled = classification_metrics(to_labels(p2), to_labels(l2));
  CHECK(shuffled.f1 == base.f1);
  CHECK(shuffled.accuracy == base.accuracy);
  CHECK(shuffled.tp == base.tp);
}

TEST_CASE("corpus_bleu macro-averages over languages") {
  MetricsReport one = corpus_bleu({{"a b c", "a b c", LanguageId::go}, {"x", "a b c", LanguageId::go}});
  CHECK(*one.bleu4 == doctest::Approx(50.0));
  CHECK(one.per_language.at(LanguageId::go) == *one.bleu4);

  // means 100 and 0 -> 50 regardless of how many pairs each language has
  MetricsReport two = corpus_bleu({{"a b", "a b", LanguageId::go},
                                   {"q", "a b", LanguageId::java},
                                   {"r", "a b", LanguageId::java}});
  CHECK(*two.bleu4 == doctest::Approx(50.0));
  CHECK_THROWS_AS(corpus_bleu({}), Error);
}

TEST_CASE("corpus_bleu matches an independent recomputation on 10 pairs") {
  std::vector<BleuPair> pairs = {
      {"Returns the sum of a and b.", "Returns the sum of two numbers.", LanguageId::python},
      {"Adds an item.", "Adds an item to the list.", LanguageId::python},
      {"Gets the name", "Returns the name.", LanguageId::python},
      {"Sets the value.", "Sets the value.", LanguageId::python},
      {"Opens a file for reading", "Opens the file in read mode.", LanguageId::python},
      {"Creates a new user", "Creates a new user account.", LanguageId::java},
      {"Deletes the record", "Removes the record from the table.", LanguageId::java},
      {"Returns true if empty.", "Returns true if the list is empty.", LanguageId::java},
      {"Parses the input string", "Parses the given input string into tokens.", LanguageId::java},
      {"Closes the stream.", "Closes this stream and releases resources.", LanguageId::java},
  };
  // from a separate Python implementation of the same definition
  MetricsReport r = corpus_bleu(pairs);
  CHECK(std::abs(r.per_language.at(LanguageId::python) - 49.550827127555394) < 1e-9);
  CHECK(std::abs(r.per_language.at(LanguageId::java) - 36.497392907501144) < 1e-9);
  CHECK(std::abs(*r.bleu4 - 43.02411001752827) < 1e-9);
}

TEST_CASE("tfidf cosine basics") {
  std::vector<corpus::PairExample> docs = corpus::synthetic_pairs(8);
  TfidfVectorizer vec(docs);
  CHECK(cosine(vec.transform("return the price"), vec.transform("return the price")) == doctest::Approx(1.0));
  CHECK(cosine(vec.transform("Returns the price."), vec.transform("def get_price(self): return self._price")) >
        0.0);
  CHECK(cosine(vec.transform(""), vec.transform("price")) == 0.0);
  CHECK(term_tokens("getName(self_x) 42") == std::vector<std::string>{"getname", "self", "x", "42"});
}

TEST_CASE("tfidf threshold baseline on shuffled-comment synthetic data") {
  auto data = corpus::with_shuffled_negatives(corpus::synthetic_pairs(32), 1);
  ThresholdBaseline b = tfidf_similarity_baseline(data, data);
  CHECK(b.report.accuracy >= 0.95);
  // the lexical-gap pair keeps it below a perfect score
  CHECK(b.report.accuracy < 1.0);

  std::vector<corpus::PairExample> one_class = corpus::synthetic_pairs(4);
  CHECK_THROWS_AS(tfidf_similarity_baseline(one_class, one_class), Error);
}

TEST_CASE("linear SVM baseline separates marker-labelled pairs") {
  auto data = corpus::synthetic_pairs(30);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i % 2 == 1) {
      data[i].label = Label::inconsistent;
      data[i].comment += " TODO stale";
    }
  }
  MetricsReport r = tfidf_svm_baseline(data, data, {50, 1e-3, 3});
  CHECK(r.accuracy == 1.0);
  CHECK(r.f1 == 1.0);
}
