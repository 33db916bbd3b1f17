#include "doccheck/baselines.hpp"

#include "doccheck/error.hpp"
#include "doccheck/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace doccheck::eval {

using corpus::Label;
using corpus::PairExample;

std::vector<std::string> term_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TfidfVectorizer::TfidfVectorizer(const std::vector<PairExample>& docs) {
  std::map<std::string, int> df;
  for (const PairExample& p : docs) {
    for (const std::string* text : {&p.comment, &p.method}) {
      auto terms = term_tokens(*text);
      std::set<std::string> uniq(terms.begin(), terms.end());
      for (const std::string& t : uniq) ++df[t];
    }
  }
  const double n = 2.0 * static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {
    index_.emplace(term, static_cast<int>(idf_.size()));
    idf_.push_back(std::log((1.0 + n) / (1.0 + count)) + 1.0);
  }
  unseen_idf_ = std::log(1.0 + n) + 1.0;
}

SparseVector TfidfVectorizer::transform(std::string_view text) const {
  std::map<std::string, int> tf;
  for (std::string& t : term_tokens(text)) ++tf[t];
  std::map<int, double> weights;
  double unseen = 0.0;
  for (const auto& [term, count] : tf) {
    const double w = 1.0 + std::log(static_cast<double>(count));
    auto it = index_.find(term);
    if (it == index_.end()) {
      // Unseen terms share one slot; they cannot match anything seen in training
      // but still dilute the norm.
      unseen += (w * unseen_idf_) * (w * unseen_idf_);
    } else {
      weights[it->second] = w * idf_[static_cast<std::size_t>(it->second)];
    }
  }
  double norm2 = unseen;
  for (const auto& [i, w] : weights) norm2 += w * w;
  SparseVector out;
  if (norm2 == 0.0) return out;
  const double inv = 1.0 / std::sqrt(norm2);
  for (const auto& [i, w] : weights) out.emplace_back(i, w * inv);
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [i, w] : a) na += w * w;
  for (const auto& [i, w] : b) nb += w * w;
  std::size_t x = 0, y = 0;
  while (x < a.size() && y < b.size()) {
    if (a[x].first == b[y].first) dot += a[x++].second * b[y++].second;
    else if (a[x].first < b[y].first) ++x;
    else ++y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, dot / std::sqrt(na * nb));
}

namespace {

void require_both_labels(const std::vector<PairExample>& train) {
  bool pos = false, neg = false;
  for (const PairExample& p : train) {
    pos |= p.label == Label::inconsistent;
    neg |= p.label == Label::consistent;
  }
  if (!pos || !neg) {
    throw Error(ErrorKind::SingleClassTrain, "training pairs must contain both labels");
  }
}

std::vector<Label> labels_of(const std::vector<PairExample>& pairs) {
  std::vector<Label> out;
  for (const PairExample& p : pairs) out.push_back(p.label);
  return out;
}

}  // namespace

ThresholdBaseline tfidf_similarity_baseline(const std::vector<PairExample>& train,
                                            const std::vector<PairExample>& test) {
  require_both_labels(train);
  if (test.empty()) throw Error(ErrorKind::EmptyInput, "no test pairs");
  const TfidfVectorizer vec(train);
  auto score = [&](const PairExample& p) { return cosine(vec.transform(p.comment), vec.transform(p.method)); };

  std::vector<double> train_scores;
  for (const PairExample& p : train) train_scores.push_back(score(p));
  std::vector<double> candidates = train_scores;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  candidates.push_back(std::nextafter(candidates.back(), 2.0));

  const std::vector<Label> train_labels = labels_of(train);
  ThresholdBaseline out;
  double best_f1 = -1.0;
  for (double t : candidates) {  // ascending, so ties keep the lower threshold
    std::vector<Label> preds;
    for (double s : train_scores) preds.push_back(s < t ? Label::inconsistent : Label::consistent);
    const double f1 = classification_metrics(preds, train_labels).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      out.threshold = t;
    }
  }
  std::vector<Label> preds;
  for (const PairExample& p : test) {
    out.test_scores.push_back(score(p));
    preds.push_back(out.test_scores.back() < out.threshold ? Label::inconsistent : Label::consistent);
  }
  out.report = classification_metrics(preds, labels_of(test));
  return out;
}

MetricsReport tfidf_svm_baseline(const std::vector<PairExample>& train,
                                 const std::vector<PairExample>& test, const SvmOptions& options) {
  require_both_labels(train);
  if (test.empty()) throw Error(ErrorKind::EmptyInput, "no test pairs");
  const TfidfVectorizer vec(train);
  const int d = vec.dimension();
  auto features = [&](const PairExample& p) {
    SparseVector x = vec.transform(p.comment);
    for (auto [i, w] : vec.transform(p.method)) x.emplace_back(d + i, w);
    x.emplace_back(2 * d, 1.0);
    return x;
  };
  std::vector<SparseVector> xs;
  std::vector<double> ys;
  for (const PairExample& p : train) {
    xs.push_back(features(p));
    ys.push_back(p.label == Label::inconsistent ? 1.0 : -1.0);
  }

  // Pegasos: w <- (1 - eta*lambda) w + eta*y*x on margin violations, eta = 1/(lambda t),
  // then projection onto the ball of radius 1/sqrt(lambda).
  std::vector<double> w(static_cast<std::size_t>(2 * d + 1), 0.0);
  double scale = 1.0;  // w is stored as scale * w
  double norm2 = 0.0;  // of the stored vector
  const double lambda = options.lambda;
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  long t = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng(derive_seed(options.seed, epoch));
    rng.shuffle(order);
    for (std::size_t k : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      double margin = 0.0;
      for (auto [i, v] : xs[k]) margin += w[static_cast<std::size_t>(i)] * v;
      margin *= scale * ys[k];
      scale *= 1.0 - eta * lambda;
      if (scale == 0.0) {  // first step: eta * lambda == 1
        std::fill(w.begin(), w.end(), 0.0);
        scale = 1.0;
        norm2 = 0.0;
      }
      if (margin < 1.0) {
        for (auto [i, v] : xs[k]) {
          double& wi = w[static_cast<std::size_t>(i)];
          const double delta = eta * ys[k] * v / scale;
          norm2 += 2 * wi * delta + delta * delta;
          wi += delta;
        }
      }
      const double radius = 1.0 / std::sqrt(lambda);
      const double true_norm = std::abs(scale) * std::sqrt(std::max(norm2, 0.0));
      if (true_norm > radius) scale *= radius / true_norm;
    }
  }
  std::vector<Label> preds;
  for (const PairExample& p : test) {
    double s = 0.0;
    for (auto [i, v] : features(p)) s += w[static_cast<std::size_t>(i)] * v;
    preds.push_back(s * scale > 0.0 ? Label::inconsistent : Label::consistent);
  }
  return classification_metrics(preds, labels_of(test));
}

}  // namespace doccheck::eval
