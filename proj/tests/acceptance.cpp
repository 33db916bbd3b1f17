// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria (0 when all pass).

#include "cli_fixture.hpp"
#include "golden.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "overfit.hpp"

#include "doccheck/baselines.hpp"
#include "doccheck/corpus.hpp"
#include "doccheck/extract.hpp"
#include "doccheck/metrics.hpp"
#include "doccheck/serve.hpp"
#include "doccheck/train.hpp"

#include "httplib.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <thread>

using namespace doccheck;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Verdict()>& body) {
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  failures += !v.pass;
  std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
  std::fflush(stdout);
}

// ---- extraction ----

Verdict extraction_goldens() {
  const auto t0 = Clock::now();
  const fs::path root = fs::path(DOCCHECK_FIXTURES) / "extract";
  std::map<LanguageId, int> files, matched;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() == ".jsonl") continue;
    const auto lang = language_for_path(entry.path());
    if (!lang) return {false, "fixture with unknown language: " + entry.path().string()};
    extract::SourceFile src = extract::read_source(entry.path(), *lang);
    src.path = fs::relative(entry.path(), root);
    fs::path golden = entry.path();
    golden += ".jsonl";
    ++files[*lang];
    matched[*lang] += golden::matches(golden, extract::to_jsonl(extract::parse_file(src).records));
  }
  const double secs = seconds_since(t0);
  bool ok = secs < 10.0;
  std::string detail;
  for (LanguageId lang : kAllLanguages) {
    if (!fully_supported(lang)) continue;
    ok = ok && files[lang] >= 5 && matched[lang] == files[lang];
    detail += fmt("%s %d/%d, ", std::string(to_string(lang)).c_str(), matched[lang], files[lang]);
  }
  for (LanguageId lang : kAllLanguages) ok = ok && matched[lang] == files[lang];  // staged ones too
  return {ok, detail + fmt("%.2fs (limit 10s)", secs)};
}

// ---- metrics ----

Verdict metric_oracles() {
  double worst = 0.0;
  for (const auto& fx : oracles::kBleu) {
    const double s = eval::smoothed_bleu4(eval::whitespace_tokens(fx.candidate), eval::whitespace_tokens(fx.reference));
    worst = std::max(worst, std::abs(s - fx.expected));
  }
  int exact = 0;
  for (const auto& fx : oracles::kConfusion) {
    std::vector<corpus::Label> p, l;
    for (int x : fx.preds) p.push_back(x ? corpus::Label::inconsistent : corpus::Label::consistent);
    for (int x : fx.labels) l.push_back(x ? corpus::Label::inconsistent : corpus::Label::consistent);
    const auto r = eval::classification_metrics(p, l);
    exact += r.f1 == fx.f1 && r.accuracy == fx.accuracy;
  }
  const bool ok = oracles::kBleu.size() == 5 && worst < 1e-6 && exact == 5;
  return {ok, fmt("BLEU max |err| %.2e (tol 1e-6) over %zu fixtures; confusion %d/5 exact", worst,
                  oracles::kBleu.size(), exact)};
}

// ---- losses ----

Verdict loss_identities() {
  double ctc_err = 0.0;
  for (int n : {2, 8, 32}) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, 16);
    u.col(0).setOnes();
    ctc_err = std::max(ctc_err, std::abs(train::ctc_loss(u, u, 0.07) - std::log(static_cast<double>(n))));
  }
  const std::vector<double> zeros(9, 0.0);
  const std::vector<int> labels = {0, 1, 0, 1, 1, 0, 0, 1, 0};
  const double bc_err = std::abs(train::bc_loss(zeros, labels) - std::numbers::ln2);
  const int v = 1024;
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(6, v, -2.5);
  const std::vector<int> targets = {7, 8, 9, 10, 11, 3};
  const double tg_err = std::abs(train::tg_loss(flat, targets) - std::log(static_cast<double>(v)));
  const bool ok = ctc_err < 1e-9 && bc_err < 1e-12 && tg_err < 1e-9;
  return {ok, fmt("|ctc - ln N| %.1e (tol 1e-9), |bc - ln 2| %.1e, |tg - ln V| %.1e", ctc_err, bc_err, tg_err)};
}

Verdict gradient_check() {
  const auto t0 = Clock::now();
  gradcheck::Problem prob;
  double worst = 0.0;
  int failed = 0, tensors = 0;
  const std::vector<train::LossWeights> cases = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.7, 1.3, 0.4}};
  for (const auto& w : cases) {
    for (const auto& c : gradcheck::check(prob.params, prob.config, prob.loss(w))) {
      ++tensors;
      failed += !c.passed(1e-4);
      if (std::max(c.analytic_norm, c.numeric_norm) >= gradcheck::kZeroFloor) worst = std::max(worst, c.rel_error);
    }
  }
  const double secs = seconds_since(t0);
  return {failed == 0 && secs < 120.0,
          fmt("ctc, bc, tg and weighted sum: %d/%d tensor checks pass, max rel err %.2e (tol 1e-4), %.1fs (limit 120s)",
              tensors - failed, tensors, worst, secs)};
}

// ---- model ----

Verdict causality() {
  const model::ModelConfig c = model::ModelConfig::desk();
  const model::Parameters p = model::Parameters::init(c);
  Rng rng(11);
  std::vector<int> code, text;
  for (int i = 0; i < 20; ++i) code.push_back(7 + static_cast<int>(rng.below(1000)));
  for (int i = 0; i < 16; ++i) text.push_back(7 + static_cast<int>(rng.below(1000)));
  const model::DecoderInput d = model::decoder_input(code, text, c);
  auto logits = [&](const std::vector<int>& ids) {
    return model::lm_logits(model::forward(ids, model::AttentionMode::decoder, d.prefix_len, p, c).states, p);
  };
  const Eigen::MatrixXd base = logits(d.ids);
  int checked = 0, broken = 0;
  for (std::size_t pos = static_cast<std::size_t>(d.prefix_len) + 1; pos < d.ids.size(); ++pos) {
    auto changed = d.ids;
    changed[pos] = changed[pos] == 100 ? 101 : 100;
    const Eigen::MatrixXd out = logits(changed);
    const auto rows = static_cast<Eigen::Index>(pos);
    broken += !(out.topRows(rows) == base.topRows(rows));
    ++checked;
  }
  return {broken == 0 && checked > 0, fmt("%d text positions perturbed, %d changed an earlier logit row", checked, broken)};
}

// ---- overfit ----

overfit::Outcome overfit_outcome;

Verdict overfit_oracle() {
  overfit_outcome = overfit::run();
  const auto& o = overfit_outcome;
  const bool ok = o.score.bc_accuracy == 1.0 && o.score.exact == 32 && o.score.min_bleu == 100.0 &&
                  o.epochs <= 500 && o.seconds < 300.0;
  return {ok, fmt("BC train acc %.4f, exact %d/32, min BLEU %.2f, %d epochs (limit 500), %.1fs (limit 300s)",
                  o.score.bc_accuracy, o.score.exact, o.score.min_bleu, o.epochs, o.seconds)};
}

Verdict overfit_determinism() {
  const int epochs = overfit_outcome.epochs;
  const train::TrainResult again = train::train_joint(overfit::dataset(), overfit::initial_model(), overfit::train_config(),
                                                      [&](int epoch, const model::Parameters&) { return epoch + 1 < epochs; });
  const auto a = model::tensors(overfit_outcome.result.params);
  const auto b = model::tensors(again.params);
  bool same = a.size() == b.size();
  for (std::size_t k = 0; same && k < a.size(); ++k) {
    same = std::equal(a[k].data, a[k].data + a[k].size(), b[k].data);
  }
  const bool reports = again.reports == overfit_outcome.result.reports;
  return {same && reports && !again.reports.empty(),
          fmt("second run of %d epochs: %zu loss reports %s, parameters %s", epochs, again.reports.size(),
              reports ? "identical" : "differ", same ? "bit-identical" : "differ")};
}

// ---- corpus ----

Verdict jit_rule() {
  const std::vector<std::string> words = {"Returns", "the", "sum", "of", "values", "Adds", "an", "item", "to", "list"};
  auto dress = [](const std::string& body, std::uint64_t style) {
    switch (style % 4) {
      case 0: return body;
      case 1: return "/** " + body + " */";
      case 2: return "/**\n * " + body + "\n * @return x\n */";
      default: return "  " + body + "  ";
    }
  };
  Rng rng(99);
  int wrong = 0, consistent = 0;
  for (int t = 0; t < 10000; ++t) {
    std::string base;
    for (std::size_t k = 0, n = 1 + rng.below(6); k < n; ++k) base += (k ? " " : "") + words[rng.below(words.size())];
    std::string other = base;
    const bool change = rng.below(2) == 0;
    if (change) other += rng.below(2) ? " now" : "s";
    corpus::JitEditRecord rec{"r", dress(base, rng.next()), "m1", dress(other, rng.next()), "m2", LanguageId::java, {}};
    const bool expect = extract::normalize_docstring(rec.comment_before, rec.language) ==
                        extract::normalize_docstring(rec.comment_after, rec.language);
    const auto p = corpus::build_jit_pair(rec);
    wrong += (p.label == corpus::Label::consistent) != expect || expect == change;
    consistent += expect;
  }
  corpus::JitEditRecord a{"s", "Returns the sum.", "int f() { return 1; }", "Returns the product.",
                          "int f() { return 2; }", LanguageId::java, {}};
  corpus::JitEditRecord b = a;
  b.method_before = std::string("\x01SENTINEL\x02", 10);
  const bool sentinel = corpus::build_jit_pair(a) == corpus::build_jit_pair(b);
  return {wrong == 0 && sentinel,
          fmt("10^4 records (%d consistent), %d label mismatches; M1 sentinel %s", consistent, wrong,
              sentinel ? "independent" : "changed the output")};
}

Verdict hard_negatives() {
  const int draws = 100000;
  // uniform case, N = 8
  Eigen::MatrixXd same = Eigen::MatrixXd::Zero(8, 3);
  same.col(0).setOnes();
  std::vector<double> counts(8, 0.0);
  for (int s = 0; s < draws; ++s) counts[corpus::mine_hard_negatives(same, same, 0.07, s)[0].negative] += 1.0;
  double chi2 = counts[0];  // the anchor itself must never appear
  for (int j = 1; j < 8; ++j) chi2 += std::pow(counts[j] - draws / 7.0, 2) / (draws / 7.0);

  // one dominant off-diagonal similarity
  const double tau = 0.5;
  Eigen::MatrixXd u(5, 3), v(5, 3);
  u << 1, 0, 0, 0, 1, 0, 0, 0, 1, 0.6, 0.8, 0, 0, 0.6, 0.8;
  v = u;
  v.row(2) = u.row(0);
  std::vector<double> w(5, 0.0), f(5, 0.0);
  double z = 0.0;
  for (int j = 1; j < 5; ++j) z += w[j] = std::exp(u.row(0).dot(v.row(j)) / tau);
  for (int s = 0; s < draws; ++s) f[corpus::mine_hard_negatives(u, v, tau, 7919ull * s + 3)[0].negative] += 1.0 / draws;
  double worst = 0.0;
  for (int j = 1; j < 5; ++j) worst = std::max(worst, std::abs(f[j] - w[j] / z));
  // chi-square, 6 degrees of freedom: P(X > 16.812) = 0.01
  return {chi2 < 16.812 && worst < 0.01,
          fmt("max |freq - softmax| %.4f (tol 0.01), dominant weight %.3f; uniform chi2 %.2f (p > 0.01 iff < 16.812)",
              worst, w[2] / z, chi2)};
}

// ---- baseline ----

Verdict baseline_sanity() {
  const auto data = overfit::dataset();
  const auto b = eval::tfidf_similarity_baseline(data, data);
  const double neural = overfit_outcome.score.bc_accuracy;
  return {b.report.accuracy >= 0.95 && b.report.accuracy < neural,
          fmt("TF-IDF accuracy %.4f (>= 0.95), neural overfit accuracy %.4f on the same 64 pairs", b.report.accuracy,
              neural)};
}

// ---- CLI / API ----

Verdict cli_api_parity() {
  const auto cli = cli_fixture::run({"check", "--lang", "python", cli_fixture::kSample, "--checkpoint",
                                     cli_fixture::checkpoint()});
  if (cli.code != 0) return {false, "cli exit " + std::to_string(cli.code) + ": " + cli.err};

  std::ifstream in(cli_fixture::kSample, std::ios::binary);
  std::ostringstream src;
  src << in.rdbuf();
  nlohmann::json req;
  req["code"] = src.str();
  req["language"] = "python";

  const serve::Service service(model::load_checkpoint(cli_fixture::checkpoint()));
  serve::Server server(service);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 200 && !(res = client.Post("/api/check", req.dump(), "application/json")); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  server.stop();
  t.join();
  if (!res) return {false, "no HTTP response"};
  const std::string api = cli_fixture::raw_results(res->body);
  const bool same = res->status == 200 && cli.out == api + "\n";
  return {same, fmt("HTTP %d; CLI array %zu bytes, API results %zu bytes, %s", res->status, cli.out.size() - 1,
                    api.size(), same ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  criterion("extraction goldens", extraction_goldens);
  criterion("metric oracles", metric_oracles);
  criterion("loss identities", loss_identities);
  criterion("gradient check", gradient_check);
  criterion("causality", causality);
  criterion("overfit oracle", overfit_oracle);
  criterion("overfit determinism", overfit_determinism);
  criterion("JIT labeling rule", jit_rule);
  criterion("hard-negative sampling", hard_negatives);
  criterion("baseline sanity", baseline_sanity);
  criterion("CLI/API parity", cli_api_parity);
  std::printf("%s: %d failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures;
}
