#include "doccheck/corpus.hpp"

#include "doccheck/error.hpp"
#include "doccheck/extract.hpp"
#include "doccheck/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace doccheck::corpus {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::consistent: return "consistent";
    case Label::inconsistent: return "inconsistent";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::jit_derived: return "jit_derived";
    case Provenance::extracted: return "extracted";
    case Provenance::synthetic: return "synthetic";
  }
  return "extracted";
}

Label parse_label(std::string_view s) {
  if (s == "consistent") return Label::consistent;
  if (s == "inconsistent") return Label::inconsistent;
  if (s == "unlabeled") return Label::unlabeled;
  throw Error(ErrorKind::BadFormat, "unknown label '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
  if (s == "jit_derived") return Provenance::jit_derived;
  if (s == "extracted") return Provenance::extracted;
  if (s == "synthetic") return Provenance::synthetic;
  throw Error(ErrorKind::BadFormat, "unknown provenance '" + std::string(s) + "'");
}

PairExample build_jit_pair(const JitEditRecord& rec) {
  const std::string c1 = extract::normalize_docstring(rec.comment_before, rec.language);
  if (c1.empty()) throw Error(ErrorKind::DegenerateRecord, rec.id + ": comment_before is empty");
  if (rec.method_after.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorKind::DegenerateRecord, rec.id + ": method_after is empty");
  }
  const std::string c2 = extract::normalize_docstring(rec.comment_after, rec.language);
  PairExample p;
  p.id = rec.id;
  p.comment = c1;
  p.method = rec.method_after;
  p.label = c1 == c2 ? Label::consistent : Label::inconsistent;
  p.language = rec.language;
  p.provenance = Provenance::jit_derived;
  return p;
}

namespace {

// Inverse-CDF draw from softmax(logits) restricted to j != skip.
std::size_t draw_softmax(const Eigen::VectorXd& logits, std::size_t skip, Rng& rng) {
  const auto n = static_cast<std::size_t>(logits.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j != skip) top = std::max(top, logits[static_cast<Eigen::Index>(j)]);
  }
  std::vector<double> w(n, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == skip) continue;
    w[j] = std::exp(logits[static_cast<Eigen::Index>(j)] - top);
    total += w[j];
  }
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = n;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == skip) continue;
    acc += w[j];
    last = j;
    if (target < acc) return j;
  }
  return last;  // rounding at the top end
}

}  // namespace

std::vector<HardNegative> mine_hard_negatives(const Eigen::MatrixXd& code_embs,
                                              const Eigen::MatrixXd& text_embs, double tau,
                                              std::uint64_t seed) {
  const Eigen::Index n = code_embs.rows();
  if (text_embs.rows() != n || text_embs.cols() != code_embs.cols()) {
    throw Error(ErrorKind::LengthMismatch, "code and text embedding shapes differ");
  }
  if (n < 2) throw Error(ErrorKind::BatchTooSmall, "hard-negative mining needs at least 2 pairs");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be positive");

  const Eigen::MatrixXd sim = (code_embs * text_embs.transpose()) / tau;
  std::vector<HardNegative> out;
  out.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(i);
    Rng text_rng(derive_seed(seed, a, 0));
    Rng code_rng(derive_seed(seed, a, 1));
    out.push_back({a, draw_softmax(sim.row(i).transpose(), a, text_rng), NegativeSide::text});
    out.push_back({a, draw_softmax(sim.col(i), a, code_rng), NegativeSide::code});
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<PairExample>& pairs, std::array<double, 3> ratios,
                           std::uint64_t seed) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyDataset, "nothing to split");
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw Error(ErrorKind::InvalidArgument, "split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "split ratios must sum to 1");

  const std::size_t n = pairs.size();
  // Split totals by largest remainder, ties to the earlier split.
  auto apportion = [&](std::size_t count, const std::array<double, 3>& shares) {
    std::array<std::size_t, 3> out{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (int s = 0; s < 3; ++s) {
      double q = shares[s] * static_cast<double>(count);
      out[s] = static_cast<std::size_t>(std::floor(q + 1e-9));
      frac[s] = q - static_cast<double>(out[s]);
      used += out[s];
    }
    while (used < count) {
      int best = 0;
      for (int s = 1; s < 3; ++s) {
        if (frac[s] > frac[best] + 1e-12) best = s;
      }
      ++out[best];
      frac[best] = -1.0;
      ++used;
    }
    return out;
  };
  const std::array<std::size_t, 3> totals = apportion(n, ratios);

  // Strata by label, each shuffled with its own stream.
  std::vector<std::vector<std::size_t>> strata(3);
  for (std::size_t i = 0; i < n; ++i) strata[static_cast<std::size_t>(pairs[i].label)].push_back(i);
  std::vector<std::array<std::size_t, 3>> cells;
  std::vector<std::array<double, 3>> fracs;
  std::array<std::size_t, 3> assigned{};
  for (std::size_t g = 0; g < strata.size(); ++g) {
    Rng rng(derive_seed(seed, g));
    rng.shuffle(strata[g]);
    std::array<std::size_t, 3> cell{};
    std::array<double, 3> frac{};
    for (int s = 0; s < 3; ++s) {
      double q = static_cast<double>(strata[g].size()) * static_cast<double>(totals[s]) /
                 static_cast<double>(n);
      cell[s] = static_cast<std::size_t>(std::floor(q + 1e-9));
      frac[s] = q - static_cast<double>(cell[s]);
      assigned[s] += cell[s];
    }
    cells.push_back(cell);
    fracs.push_back(frac);
  }
  // Hand the leftover members of each stratum to splits still short of
  // their total, preferring the largest fractional quota.
  for (std::size_t g = 0; g < strata.size(); ++g) {
    std::size_t have = cells[g][0] + cells[g][1] + cells[g][2];
    while (have < strata[g].size()) {
      int best = -1;
      for (int s = 0; s < 3; ++s) {
        if (assigned[s] >= totals[s]) continue;
        if (best < 0 || fracs[g][s] > fracs[g][best] + 1e-12) best = s;
      }
      ++cells[g][best];
      ++assigned[best];
      fracs[g][best] = -1.0;
      ++have;
    }
  }

  DatasetSplit split;
  split.seed = seed;
  std::array<std::vector<std::string>*, 3> dest = {&split.train, &split.valid, &split.test};
  for (std::size_t g = 0; g < strata.size(); ++g) {
    std::size_t k = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t m = 0; m < cells[g][s]; ++m) dest[s]->push_back(pairs[strata[g][k++]].id);
    }
  }
  for (int s = 0; s < 3; ++s) {
    Rng rng(derive_seed(seed, 100 + s));
    rng.shuffle(*dest[s]);
  }
  return split;
}

nlohmann::ordered_json to_json(const PairExample& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["comment"] = p.comment;
  j["method"] = p.method;
  j["label"] = to_string(p.label);
  j["language"] = doccheck::to_string(p.language);
  j["provenance"] = to_string(p.provenance);
  return j;
}

namespace {

LanguageId language_field(const nlohmann::json& j) {
  auto lang = parse_language(j.at("language").get<std::string>());
  if (!lang) throw Error(ErrorKind::BadFormat, "unknown language " + j.at("language").dump());
  return *lang;
}

template <typename T, typename F>
std::vector<T> read_jsonl(const std::filesystem::path& path, F parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::BadFormat, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const T& item : items) {
    out << to_json(item).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
}

}  // namespace

PairExample pair_from_json(const nlohmann::json& j) {
  PairExample p;
  p.id = j.at("id").get<std::string>();
  p.comment = j.at("comment").get<std::string>();
  p.method = j.at("method").get<std::string>();
  p.label = parse_label(j.value("label", "unlabeled"));
  p.language = language_field(j);
  p.provenance = parse_provenance(j.value("provenance", "extracted"));
  if (p.comment.empty() || p.method.empty()) {
    throw Error(ErrorKind::DegenerateRecord, p.id + ": comment and method must be non-empty");
  }
  return p;
}

nlohmann::ordered_json to_json(const JitEditRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["comment_before"] = r.comment_before;
  j["method_before"] = r.method_before;
  j["comment_after"] = r.comment_after;
  j["method_after"] = r.method_after;
  j["language"] = doccheck::to_string(r.language);
  if (!r.meta.empty()) j["meta"] = r.meta;
  return j;
}

JitEditRecord jit_from_json(const nlohmann::json& j) {
  JitEditRecord r;
  r.id = j.at("id").get<std::string>();
  r.comment_before = j.at("comment_before").get<std::string>();
  r.method_before = j.at("method_before").get<std::string>();
  r.comment_after = j.at("comment_after").get<std::string>();
  r.method_after = j.at("method_after").get<std::string>();
  r.language = language_field(j);
  if (j.contains("meta")) r.meta = j["meta"].get<std::map<std::string, std::string>>();
  return r;
}

void write_pairs(const std::filesystem::path& path, const std::vector<PairExample>& pairs) {
  write_jsonl(path, pairs);
}

std::vector<PairExample> read_pairs(const std::filesystem::path& path) {
  return read_jsonl<PairExample>(path, pair_from_json);
}

std::vector<JitEditRecord> read_jit_records(const std::filesystem::path& path) {
  return read_jsonl<JitEditRecord>(path, jit_from_json);
}

void write_jit_records(const std::filesystem::path& path, const std::vector<JitEditRecord>& recs) {
  write_jsonl(path, recs);
}

std::vector<PairExample> synthetic_pairs(std::size_t n) {
  static const std::vector<std::string> nouns = {
      "name",    "color",    "size",     "owner",    "price",    "title",    "label",   "width",
      "height",  "weight",   "speed",    "status",   "score",    "limit",    "budget",  "country",
      "address", "email",    "phone",    "avatar",   "theme",    "locale",   "timezone", "password",
      "balance", "quantity", "discount", "rating",   "category", "priority", "deadline"};
  struct Template {
    const char* code;
    const char* comment;
  };
  // Comment words never appear as code tokens except the noun itself.
  static const std::vector<Template> templates = {
      {"def get_{}(self):\n    return self._{}\n", "Returns the {}."},
      {"def set_{}(self, value):\n    self._{} = value\n", "Sets the {}."},
      {"def has_{}(self):\n    return self._{} is not None\n", "Checks whether a {} exists."},
      {"def clear_{}(self):\n    self._{} = None\n", "Clears the {}."},
  };
  auto fill = [](std::string s, const std::string& noun) {
    for (std::size_t at; (at = s.find("{}")) != std::string::npos;) s.replace(at, 2, noun);
    return s;
  };

  std::vector<PairExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairExample p;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%03zu", i);
    p.id = id;
    p.label = Label::consistent;
    p.language = LanguageId::python;
    p.provenance = Provenance::synthetic;
    if (n > 1 && i + 1 == n) {
      p.method = "def add(a, b):\n    return a + b\n";
      p.comment = "Computes the sum.";
    } else {
      std::string noun = nouns[i % nouns.size()];
      if (i >= nouns.size()) noun += std::to_string(i / nouns.size() + 1);
      const Template& t = templates[i % templates.size()];
      p.method = fill(t.code, noun);
      p.comment = fill(t.comment, noun);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PairExample> with_shuffled_negatives(const std::vector<PairExample>& positives,
                                                 std::uint64_t seed) {
  const std::size_t n = positives.size();
  if (n < 2) throw Error(ErrorKind::BatchTooSmall, "shuffled negatives need at least 2 pairs");
  // Sattolo's algorithm yields a single cycle, hence no fixed points.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, 7));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i)]);

  std::vector<PairExample> out = positives;
  for (std::size_t i = 0; i < n; ++i) {
    PairExample neg = positives[i];
    neg.id = positives[i].id + "-neg";
    neg.comment = positives[perm[i]].comment;
    neg.label = Label::inconsistent;
    out.push_back(std::move(neg));
  }
  return out;
}

}  // namespace doccheck::corpus
