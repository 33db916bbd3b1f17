#include "cli.hpp"

#include "doccheck/baselines.hpp"
#include "doccheck/checkpoint.hpp"
#include "doccheck/corpus.hpp"
#include "doccheck/detect.hpp"
#include "doccheck/error.hpp"
#include "doccheck/extract.hpp"
#include "doccheck/metrics.hpp"
#include "doccheck/serve.hpp"
#include "doccheck/train.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace doccheck::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Bad flag combinations found after CLI11 has parsed: exit 1, like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string dump(const ordered_json& j, int indent = -1) {
  return j.dump(indent, ' ', false, ordered_json::error_handler_t::replace);
}

void error_record(std::ostream& err, std::string_view kind, std::string_view message, int code) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit"] = code;
  err << dump(j) << '\n';
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    out.flush();
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + out_path);
  f << text;
  if (!f) throw Error(ErrorKind::Io, "write failed for " + out_path);
}

// Arrays in the three output shapes.
std::string render(const std::vector<ordered_json>& items, const std::string& format) {
  if (format == "jsonl") {
    std::string s;
    for (const auto& j : items) s += dump(j) + "\n";
    return s;
  }
  ordered_json arr = ordered_json::array();
  for (const auto& j : items) arr.push_back(j);
  return dump(arr, format == "pretty" ? 2 : -1) + "\n";
}

std::optional<LanguageId> lang_flag(const std::string& name) {
  if (name.empty()) return std::nullopt;
  auto lang = parse_language(name);
  if (!lang) throw UsageError("unknown language: " + name);
  return lang;
}

// Files named directly need a language (flag first, then extension);
// directories are scanned for every language, or just the flagged one.
std::vector<extract::SourceFile> collect_sources(const std::vector<std::string>& paths,
                                                 std::optional<LanguageId> lang, std::ostream& err) {
  std::vector<extract::SourceFile> files;
  for (const std::string& p : paths) {
    if (fs::is_directory(p)) {
      extract::ScanOptions opts;
      opts.languages = lang ? std::set<LanguageId>{*lang}
                            : std::set<LanguageId>(kAllLanguages.begin(), kAllLanguages.end());
      extract::ScanResult scan = extract::scan_tree(p, opts);
      for (const std::string& e : scan.errors) err << "warning: " << e << '\n';
      for (auto& f : scan.files) files.push_back(std::move(f));
      continue;
    }
    if (!fs::exists(p)) throw Error(ErrorKind::Io, "no such path: " + p);
    auto l = lang ? lang : language_for_path(p);
    if (!l) throw UsageError("cannot infer the language of " + p + "; pass --lang");
    files.push_back(extract::read_source(p, *l));
  }
  return files;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::json> rows;
  std::istringstream in(read_file(path));
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::BadFormat, path + ":" + std::to_string(n) + ": not JSON");
    rows.push_back(std::move(j));
  }
  return rows;
}

void add_threshold(CLI::App* sub, double& threshold) {
  sub->add_option("--threshold", threshold, "Decision threshold on P(inconsistent), in (0, 1)")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            double t = 0.0;
            try {
              t = std::stod(s);
            } catch (const std::exception&) {
              return "not a number: " + s;
            }
            return t > 0.0 && t < 1.0 ? "" : "threshold must lie in (0, 1)";
          },
          "(0,1)"));
}

void add_format(CLI::App* sub, std::string& format) {
  sub->add_option("--format", format, "Output shape")->check(CLI::IsMember({"json", "jsonl", "pretty"}));
}

void add_checkpoint(CLI::App* sub, std::string& path) {
  sub->add_option("--checkpoint", path, "Model checkpoint")->envname("DOCCHECK_CHECKPOINT");
}

model::Checkpoint need_checkpoint(const std::string& path) {
  if (path.empty()) throw UsageError("no checkpoint: pass --checkpoint or set DOCCHECK_CHECKPOINT");
  return model::load_checkpoint(path);
}

struct Options {
  std::vector<std::string> inputs;
  std::string lang;
  std::string checkpoint;
  std::string out;
  std::string format;
  double threshold = 0.5;
  std::optional<std::uint64_t> seed;
  int beam = 1;

  // build-dataset
  std::string jit, records;
  std::size_t synthetic = 0;
  bool shuffled_negatives = false;
  std::string split;
  std::vector<double> ratios = {0.8, 0.1, 0.1};

  // train / finetune
  std::string config, model_config, log;
  int vocab_size = 0;
  std::optional<int> epochs;

  // eval
  std::string scores, baseline = "none", train_data;

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
};

// ---- subcommands ----

int do_extract(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<ordered_json> items;
  for (const auto& file : collect_sources(o.inputs, lang_flag(o.lang), err)) {
    extract::ParseResult parsed = extract::parse_file(file);
    for (const auto& d : parsed.diagnostics) err << "warning: " << file.path.generic_string() << ": " << d << '\n';
    for (const auto& r : parsed.records) items.push_back(extract::to_json(r));
  }
  emit(render(items, o.format.empty() ? "jsonl" : o.format), o.out, out);
  return kOk;
}

std::vector<corpus::PairExample> pairs_from_records(const std::string& path) {
  std::vector<corpus::PairExample> pairs;
  for (const auto& j : read_jsonl(path)) {
    const extract::FunctionRecord r = extract::record_from_json(j);
    if (!r.docstring || r.docstring->empty()) continue;
    corpus::PairExample p;
    p.id = r.file + "#" + r.qualified_name + ":" + std::to_string(r.line_span.first);
    p.comment = *r.docstring;
    p.method = detect::model_code(r);
    p.label = corpus::Label::unlabeled;
    p.language = r.language;
    p.provenance = corpus::Provenance::extracted;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

int do_build_dataset(const Options& o, std::ostream& out, std::ostream& err) {
  const int sources = !o.jit.empty() + !o.records.empty() + (o.synthetic > 0);
  if (sources != 1) throw UsageError("give exactly one of --jit, --records, --synthetic");
  const std::uint64_t seed = o.seed.value_or(0);
  std::vector<corpus::PairExample> pairs;
  if (!o.jit.empty()) {
    for (const auto& rec : corpus::read_jit_records(o.jit)) {
      try {
        pairs.push_back(corpus::build_jit_pair(rec));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateRecord) throw;
        err << "warning: skipped " << rec.id << ": " << e.what() << '\n';
      }
    }
  } else if (!o.records.empty()) {
    pairs = pairs_from_records(o.records);
  } else {
    pairs = corpus::synthetic_pairs(o.synthetic);
  }
  if (o.shuffled_negatives) pairs = corpus::with_shuffled_negatives(pairs, seed);

  std::vector<ordered_json> items;
  for (const auto& p : pairs) items.push_back(corpus::to_json(p));
  emit(render(items, o.format.empty() ? "jsonl" : o.format), o.out, out);

  if (!o.split.empty()) {
    if (o.ratios.size() != 3) throw UsageError("--ratios takes three values");
    const corpus::DatasetSplit s = corpus::split_dataset(pairs, {o.ratios[0], o.ratios[1], o.ratios[2]}, seed);
    ordered_json j;
    j["seed"] = s.seed;
    j["train"] = s.train;
    j["valid"] = s.valid;
    j["test"] = s.test;
    emit(dump(j) + "\n", o.split, out);
  }
  return kOk;
}

train::TrainConfig train_config(const Options& o) {
  train::TrainConfig c = o.config.empty() ? train::TrainConfig{} : train::TrainConfig::load(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.epochs) c.epochs = *o.epochs;
  c.validate();
  return c;
}

void write_log(const train::TrainResult& r, const Options& o, std::ostream& out) {
  std::string text;
  for (const auto& rep : r.reports) text += dump(rep.to_json()) + "\n";
  emit(text, o.log, out);
}

int do_train(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw UsageError("train needs --out for the checkpoint");
  const auto pairs = corpus::read_pairs(o.inputs.at(0));
  const train::TrainConfig tc = train_config(o);

  model::Checkpoint init;
  if (!o.checkpoint.empty()) {
    init = model::load_checkpoint(o.checkpoint);
  } else {
    init.config = o.model_config.empty()
                      ? model::ModelConfig::desk()
                      : model::ModelConfig::from_json(nlohmann::json::parse(read_file(o.model_config)));
    if (o.vocab_size > 0) init.config.vocab_size = o.vocab_size;
    if (o.seed) init.config.seed = *o.seed;
    init.config.validate();
    std::vector<std::string> texts;
    for (const auto& p : pairs) {
      texts.push_back(p.comment);
      texts.push_back(p.method);
    }
    init.vocab = tokenize::train_bpe(texts, init.config.vocab_size);
    init.params = model::Parameters::init(init.config);
  }
  const train::TrainResult r = train::train_joint(pairs, init, tc);
  const model::Checkpoint done{init.config, r.params, init.vocab};
  model::save_checkpoint(done, o.out);
  write_log(r, o, out);
  err << "saved " << o.out << " (model_version " << done.version() << ")\n";
  return kOk;
}

int do_finetune(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw UsageError("finetune needs --out for the checkpoint");
  const model::Checkpoint base = need_checkpoint(o.checkpoint);
  const auto pairs = corpus::read_pairs(o.inputs.at(0));
  const train::TrainResult r = train::finetune_iccd(pairs, base, train_config(o));
  const model::Checkpoint done{base.config, r.params, base.vocab};
  model::save_checkpoint(done, o.out);
  write_log(r, o, out);
  err << "saved " << o.out << " (model_version " << done.version() << ")\n";
  return kOk;
}

int do_check(const Options& o, std::ostream& out, std::ostream& err) {
  const model::Checkpoint m = need_checkpoint(o.checkpoint);
  detect::CheckOptions opts;
  opts.threshold = o.threshold;
  opts.decode.beam_width = o.beam;
  std::vector<ordered_json> items;
  for (const auto& file : collect_sources(o.inputs, lang_flag(o.lang), err)) {
    const detect::CheckReport rep = detect::check_source(file.text, file.language, m, opts);
    for (const auto& d : rep.diagnostics) err << "warning: " << file.path.generic_string() << ": " << d << '\n';
    for (const auto& r : rep.results) items.push_back(detect::to_json(r));
  }
  emit(render(items, o.format.empty() ? "json" : o.format), o.out, out);
  return kOk;
}

int do_eval(const Options& o, std::ostream& out, std::ostream& err) {
  using corpus::Label;
  const auto pairs = corpus::read_pairs(o.inputs.at(0));
  if (pairs.empty()) throw Error(ErrorKind::EmptyDataset, o.inputs.at(0) + " has no pairs");
  ordered_json report;
  std::string scores;

  if (o.baseline != "none") {
    if (o.train_data.empty()) throw UsageError("--baseline needs --train");
    const auto train_pairs = corpus::read_pairs(o.train_data);
    if (o.baseline == "svm") {
      eval::SvmOptions so;
      so.seed = o.seed.value_or(0);
      report = eval::to_json(eval::tfidf_svm_baseline(train_pairs, pairs, so));
    } else {
      const eval::ThresholdBaseline b = eval::tfidf_similarity_baseline(train_pairs, pairs);
      report = eval::to_json(b.report);
      report["threshold"] = b.threshold;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        ordered_json s;
        s["id"] = pairs[i].id;
        s["label"] = corpus::to_string(pairs[i].label);
        s["similarity"] = b.test_scores[i];
        scores += dump(s) + "\n";
      }
    }
  } else {
    const model::Checkpoint m = need_checkpoint(o.checkpoint);
    detect::DecodeConfig dc;
    dc.beam_width = o.beam;
    std::vector<Label> preds, labels;
    std::vector<eval::BleuPair> bleu;
    for (const auto& p : pairs) {
      const train::Example e = train::prepare_example(p.method, p.comment, Label::consistent, m.vocab, m.config);
      ordered_json s;
      s["id"] = p.id;
      s["label"] = corpus::to_string(p.label);
      s["confidence"] = nullptr;
      s["prediction"] = nullptr;
      s["generated"] = nullptr;
      s["bleu"] = nullptr;
      if (p.label != Label::unlabeled) {
        const double conf = detect::inconsistency_probability(e.code, e.text, m);
        const Label pred = conf > o.threshold ? Label::inconsistent : Label::consistent;
        preds.push_back(pred);
        labels.push_back(p.label);
        s["confidence"] = conf;
        s["prediction"] = corpus::to_string(pred);
      }
      // the comment is a valid reference unless the pair is known stale
      if (p.label != Label::inconsistent) {
        const std::string gen = detect::generate_docstring(p.method, m, dc).text;
        bleu.push_back({gen, p.comment, p.language});
        s["generated"] = gen;
        s["bleu"] = eval::smoothed_bleu4(eval::whitespace_tokens(gen), eval::whitespace_tokens(p.comment));
      }
      scores += dump(s) + "\n";
    }
    eval::MetricsReport r;
    if (!preds.empty()) {
      r = eval::classification_metrics(preds, labels);
    } else {
      err << "warning: no labeled pairs; classification metrics omitted\n";
    }
    if (!bleu.empty()) {
      const eval::MetricsReport b = eval::corpus_bleu(bleu);
      r.bleu4 = b.bleu4;
      r.per_language = b.per_language;
    }
    report = eval::to_json(r);
    report["model_version"] = m.version();
  }
  emit(dump(report, o.format == "pretty" ? 2 : -1) + "\n", o.out, out);
  if (!o.scores.empty()) emit(scores, o.scores, out);
  return kOk;
}

int do_serve(const Options& o, std::ostream&, std::ostream& err) {
  detect::CheckOptions opts;
  opts.threshold = o.threshold;
  opts.decode.beam_width = o.beam;
  const serve::Service service(need_checkpoint(o.checkpoint), opts);
  serve::Server server(service);
  const int port = server.bind(o.host, o.port);
  err << "listening on http://" << o.host << ":" << port << " (model_version " << service.model_version() << ")\n";
  err.flush();
  server.listen();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detects stale docstrings and recommends replacements.", "doccheck"};
  app.require_subcommand(1);
  Options o;

  auto* extract = app.add_subcommand("extract", "Extract function/docstring records as JSONL");
  extract->add_option("paths", o.inputs, "Files or directories")->required();
  extract->add_option("--lang", o.lang, "Language (default: from the file extension)");
  extract->add_option("--out", o.out, "Output file (default: stdout)");
  add_format(extract, o.format);

  auto* build = app.add_subcommand("build-dataset", "Build a PairExample JSONL dataset");
  build->add_option("--jit", o.jit, "JitEditRecord JSONL (labels from the comment-edit rule)");
  build->add_option("--records", o.records, "FunctionRecord JSONL from `extract` (unlabeled pairs)");
  build->add_option("--synthetic", o.synthetic, "Generate N synthetic consistent pairs");
  build->add_flag("--shuffled-negatives", o.shuffled_negatives, "Add one shuffled-comment negative per pair");
  build->add_option("--split", o.split, "Also write a train/valid/test split (JSON) here");
  build->add_option("--ratios", o.ratios, "Split ratios")->expected(3);
  build->add_option("--seed", o.seed, "Seed for negatives and the split");
  build->add_option("--out", o.out, "Output file (default: stdout)");
  add_format(build, o.format);

  auto* train = app.add_subcommand("train", "Joint CTC + BC + TG training");
  train->add_option("data", o.inputs, "PairExample JSONL")->required()->expected(1);
  train->add_option("--out", o.out, "Checkpoint to write")->required();
  train->add_option("--config", o.config, "Training config (key = value lines)");
  train->add_option("--model-config", o.model_config, "Model config JSON (default: desk preset)");
  train->add_option("--vocab-size", o.vocab_size, "Override the BPE/model vocabulary size");
  train->add_option("--checkpoint", o.checkpoint, "Continue from this checkpoint instead of a fresh model");
  train->add_option("--seed", o.seed, "Seed for init, batching and mining");
  train->add_option("--epochs", o.epochs, "Override the configured epochs");
  train->add_option("--log", o.log, "Loss log JSONL (default: stdout)");

  auto* finetune = app.add_subcommand("finetune", "Fine-tune the classifier on labeled pairs");
  finetune->add_option("data", o.inputs, "Labeled PairExample JSONL")->required()->expected(1);
  finetune->add_option("--out", o.out, "Checkpoint to write")->required();
  add_checkpoint(finetune, o.checkpoint);
  finetune->add_option("--config", o.config, "Training config (key = value lines)");
  finetune->add_option("--seed", o.seed, "Seed for batching");
  finetune->add_option("--epochs", o.epochs, "Override the configured epochs");
  finetune->add_option("--log", o.log, "Loss log JSONL (default: stdout)");

  auto* check = app.add_subcommand("check", "Check docstrings in source files");
  check->add_option("paths", o.inputs, "Files or directories")->required();
  check->add_option("--lang", o.lang, "Language (default: from the file extension)");
  add_checkpoint(check, o.checkpoint);
  add_threshold(check, o.threshold);
  check->add_option("--beam", o.beam, "Beam width for generation")->check(CLI::PositiveNumber);
  check->add_option("--out", o.out, "Output file (default: stdout)");
  add_format(check, o.format);

  auto* evaluate = app.add_subcommand("eval", "Score a checkpoint or a baseline on a labeled dataset");
  evaluate->add_option("data", o.inputs, "PairExample JSONL")->required()->expected(1);
  add_checkpoint(evaluate, o.checkpoint);
  add_threshold(evaluate, o.threshold);
  evaluate->add_option("--beam", o.beam, "Beam width for generation")->check(CLI::PositiveNumber);
  evaluate->add_option("--baseline", o.baseline, "Score a TF-IDF baseline instead")
      ->check(CLI::IsMember({"none", "tfidf", "svm"}));
  evaluate->add_option("--train", o.train_data, "Training pairs for the baseline");
  evaluate->add_option("--seed", o.seed, "Seed for the SVM baseline");
  evaluate->add_option("--scores", o.scores, "Per-example score dump (JSONL)");
  evaluate->add_option("--out", o.out, "Report file (default: stdout)");
  evaluate->add_option("--format", o.format, "Report shape")->check(CLI::IsMember({"json", "pretty"}));

  auto* srv = app.add_subcommand("serve", "Serve the HTTP API");
  add_checkpoint(srv, o.checkpoint);
  add_threshold(srv, o.threshold);
  srv->add_option("--beam", o.beam, "Beam width for generation")->check(CLI::PositiveNumber);
  srv->add_option("--host", o.host, "Bind address");
  srv->add_option("--port", o.port, "Port (0 picks a free one)")->envname("DOCCHECK_PORT");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e, out, err);
      return kOk;
    }
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    error_record(err, "usage", e.what(), kUsage);
    return kUsage;
  }

  try {
    if (*extract) return do_extract(o, out, err);
    if (*build) return do_build_dataset(o, out, err);
    if (*train) return do_train(o, out, err);
    if (*finetune) return do_finetune(o, out, err);
    if (*check) return do_check(o, out, err);
    if (*evaluate) return do_eval(o, out, err);
    return do_serve(o, out, err);
  } catch (const UsageError& e) {
    error_record(err, "usage", e.what(), kUsage);
    return kUsage;
  } catch (const Error& e) {
    error_record(err, to_string(e.kind()), e.what(), kDataError);
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    error_record(err, "BadFormat", e.what(), kDataError);
    return kDataError;
  } catch (const std::exception& e) {
    error_record(err, "internal", e.what(), kDataError);
    return kDataError;
  }
}

}  // namespace doccheck::cli
