#include "doccheck/detect.hpp"

#include "doccheck/error.hpp"

#include <algorithm>
#include <cmath>

namespace doccheck::detect {

using model::Checkpoint;
using model::VectorXd;

std::string_view to_string(Prediction p) {
  switch (p) {
    case Prediction::consistent: return "consistent";
    case Prediction::inconsistent: return "inconsistent";
    case Prediction::missing_docstring: return "missing_docstring";
  }
  return "consistent";
}

nlohmann::ordered_json to_json(const CheckResult& r) {
  nlohmann::ordered_json j;
  j["function_name"] = r.function_name;
  j["code"] = r.code;
  j["docstring"] = r.docstring ? nlohmann::ordered_json(*r.docstring) : nlohmann::ordered_json(nullptr);
  j["prediction"] = to_string(r.prediction);
  j["confidence"] = r.confidence;
  j["recommended_docstring"] = r.recommended_docstring;
  return j;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

// Specials other than EOS and ids outside the tokenizer are never emitted.
bool emittable(int id, const Checkpoint& m) {
  return id == tokenize::EOS || (id >= tokenize::kNumSpecials && id < m.vocab.size());
}

// Room for code given that generation may use up to max_new tokens.
std::vector<int> fit_code(std::span<const int> code_ids, const Checkpoint& m, int max_new, bool& truncated) {
  const int budget = m.config.max_len - 3;
  const int keep = budget - std::min(max_new, budget / 2);
  truncated = static_cast<int>(code_ids.size()) > keep;
  return {code_ids.begin(), code_ids.begin() + std::min<std::ptrdiff_t>(keep, std::ssize(code_ids))};
}

VectorXd log_softmax(const VectorXd& x) {
  const double mx = x.maxCoeff();
  return x.array() - (mx + std::log((x.array() - mx).exp().sum()));
}

Generation finish(std::vector<int> tokens, bool truncated, const Checkpoint& m) {
  Generation g;
  g.text = trim(tokenize::decode(tokens, m.vocab));
  g.tokens = std::move(tokens);
  g.empty = g.text.empty();
  g.input_truncated = truncated;
  return g;
}

}  // namespace

Generation generate_ids(std::span<const int> code_ids, const Checkpoint& m, const DecodeConfig& cfg) {
  if (code_ids.empty()) throw Error(ErrorKind::InvalidArgument, "code is empty");
  if (cfg.beam_width < 1 || cfg.max_new_tokens < 1) throw Error(ErrorKind::InvalidArgument, "bad decode config");
  bool truncated = false;
  const std::vector<int> code = fit_code(code_ids, m, cfg.max_new_tokens, truncated);
  // [BOS] + text must fit next to the code
  const int room = std::min(cfg.max_new_tokens, m.config.max_len - 3 - static_cast<int>(code.size()) + 1);

  if (cfg.beam_width == 1) {
    std::vector<int> out;
    while (static_cast<int>(out.size()) < room) {
      const VectorXd logits = model::decode_step(code, out, m.params, m.config);
      int best = -1;
      for (int id = 0; id < logits.size(); ++id) {
        if (emittable(id, m) && (best < 0 || logits(id) > logits(best))) best = id;
      }
      if (best == tokenize::EOS) break;
      out.push_back(best);
    }
    return finish(std::move(out), truncated, m);
  }

  struct Beam {
    std::vector<int> tokens;
    double score = 0.0;
    bool done = false;
  };
  std::vector<Beam> beams{Beam{}};
  for (int step = 0; step < room; ++step) {
    std::vector<Beam> next;
    for (const Beam& b : beams) {
      if (b.done) {
        next.push_back(b);
        continue;
      }
      const VectorXd lp = log_softmax(model::decode_step(code, b.tokens, m.params, m.config));
      for (int id = 0; id < lp.size(); ++id) {
        if (!emittable(id, m)) continue;
        Beam c = b;
        c.score += lp(id);
        if (id == tokenize::EOS) c.done = true;
        else c.tokens.push_back(id);
        next.push_back(std::move(c));
      }
    }
    // stable: equal scores keep parent order, then lower token id
    std::stable_sort(next.begin(), next.end(), [](const Beam& a, const Beam& b) { return a.score > b.score; });
    next.resize(std::min<std::size_t>(next.size(), static_cast<std::size_t>(cfg.beam_width)));
    beams = std::move(next);
    if (std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.done; })) break;
  }
  return finish(std::move(beams.front().tokens), truncated, m);
}

Generation generate_docstring(const std::string& code, const Checkpoint& m, const DecodeConfig& cfg) {
  const std::vector<int> ids = tokenize::encode(code, m.vocab);
  if (ids.empty()) throw Error(ErrorKind::InvalidArgument, "code is empty");
  return generate_ids(ids, m, cfg);
}

double inconsistency_probability(std::span<const int> code_ids, std::span<const int> text_ids, const Checkpoint& m) {
  const auto enc = model::encode(model::cross_input(code_ids, text_ids, m.config), model::AttentionMode::cross,
                                 m.params, m.config);
  return 1.0 / (1.0 + std::exp(-model::bc_logit(enc.pooled, m.params)));
}

CheckResult check_pair(const std::string& code, const std::string& docstring, const Checkpoint& m,
                       const CheckOptions& options) {
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "threshold must lie in (0, 1)");
  }
  std::vector<int> code_ids = tokenize::encode(code, m.vocab);
  std::vector<int> text_ids = tokenize::encode(docstring, m.vocab);
  if (code_ids.empty()) throw Error(ErrorKind::InvalidArgument, "code is empty");
  CheckResult r;
  r.code = code;
  r.docstring = docstring;
  r.input_truncated = model::fit_lengths(code_ids, text_ids, 3, m.config);
  if (code_ids.empty()) throw Error(ErrorKind::SequenceTooLong, "code truncated to nothing");
  r.confidence = inconsistency_probability(code_ids, text_ids, m);
  if (r.confidence > options.threshold) {
    r.prediction = Prediction::inconsistent;
    Generation g = generate_docstring(code, m, options.decode);
    r.recommended_docstring = g.text;
    r.generation_empty = g.empty;
    r.input_truncated |= g.input_truncated;
  } else {
    r.prediction = Prediction::consistent;
    r.recommended_docstring = docstring;
  }
  return r;
}

std::string model_code(const extract::FunctionRecord& rec) {
  std::string code = rec.code;
  if (!rec.docstring_raw) return code;
  const auto pos = code.find(*rec.docstring_raw);
  if (pos == std::string::npos) return code;
  auto end = pos + rec.docstring_raw->size();
  // drop the whole line when the literal stands alone on it
  auto line_start = code.rfind('\n', pos);
  line_start = line_start == std::string::npos ? 0 : line_start + 1;
  const bool alone_before = code.find_first_not_of(" \t", line_start) == pos;
  const auto eol = code.find('\n', end);
  const bool alone_after = code.find_first_not_of(" \t\r", end) == eol;
  if (alone_before && alone_after && line_start > 0) {
    return code.erase(line_start - 1, (eol == std::string::npos ? code.size() : eol) - (line_start - 1));
  }
  return code.erase(pos, end - pos);
}

CheckReport check_source(const std::string& source, LanguageId language, const Checkpoint& m,
                         const CheckOptions& options) {
  extract::ParseResult parsed = extract::parse_file({"<input>", language, source});
  CheckReport out;
  out.diagnostics = parsed.diagnostics;
  for (const extract::FunctionRecord& rec : parsed.records) {
    const std::string code = model_code(rec);
    CheckResult r;
    if (rec.docstring) {
      r = check_pair(code, *rec.docstring, m, options);
    } else {
      Generation g = generate_docstring(code, m, options.decode);
      r.prediction = Prediction::missing_docstring;
      r.confidence = 1.0;
      r.recommended_docstring = g.text;
      r.generation_empty = g.empty;
      r.input_truncated = g.input_truncated;
    }
    r.function_name = rec.function_name;
    r.code = rec.code;
    r.docstring = rec.docstring;
    if (r.input_truncated) out.diagnostics.push_back(rec.function_name + ": input truncated to max_len");
    if (r.generation_empty) out.diagnostics.push_back(rec.function_name + ": generation produced no text");
    std::optional<extract::DocEdit> edit;
    if (r.prediction != Prediction::consistent && !r.recommended_docstring.empty()) {
      edit = extract::doc_edit(rec, source, r.recommended_docstring);
    }
    out.edits.push_back(std::move(edit));
    out.results.push_back(std::move(r));
  }
  return out;
}

nlohmann::ordered_json report_json(const CheckReport& report, std::string_view model_version) {
  nlohmann::ordered_json j;
  j["results"] = nlohmann::ordered_json::array();
  for (const CheckResult& r : report.results) j["results"].push_back(to_json(r));
  j["diagnostics"] = report.diagnostics;
  j["model_version"] = model_version;
  return j;
}

}  // namespace doccheck::detect
