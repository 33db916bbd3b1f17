#include "doccheck/train.hpp"

#include "doccheck/error.hpp"
#include "doccheck/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace doccheck::train {

using corpus::Label;
using model::AttentionMode;
using model::ModelConfig;
using model::Trace;

// ---- configuration ----

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, what);
  };
  require(batch_size >= 2, "batch_size must be >= 2");
  require(epochs >= 1, "epochs must be >= 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(warmup_fraction >= 0.0 && warmup_fraction <= 1.0, "warmup_fraction must lie in [0, 1]");
  require(lambda_ctc >= 0.0 && lambda_bc >= 0.0 && lambda_tg >= 0.0, "loss weights must be >= 0");
  require(lambda_ctc + lambda_bc + lambda_tg > 0.0, "at least one loss weight must be positive");
  require(checkpoint_every >= 0, "checkpoint_every must be >= 0");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorKind::BadFormat, "bad value for " + key + ": " + v);
  }
  return out;
}

}  // namespace

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string l = trim(line);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::BadFormat, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(l).substr(0, eq));
    const std::string v = trim(std::string_view(l).substr(eq + 1));
    if (key == "batch_size") c.batch_size = parse_number<int>(key, v);
    else if (key == "epochs") c.epochs = parse_number<int>(key, v);
    else if (key == "learning_rate") c.learning_rate = parse_number<double>(key, v);
    else if (key == "weight_decay") c.weight_decay = parse_number<double>(key, v);
    else if (key == "warmup_fraction") c.warmup_fraction = parse_number<double>(key, v);
    else if (key == "lambda_ctc") c.lambda_ctc = parse_number<double>(key, v);
    else if (key == "lambda_bc") c.lambda_bc = parse_number<double>(key, v);
    else if (key == "lambda_tg") c.lambda_tg = parse_number<double>(key, v);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "checkpoint_every") c.checkpoint_every = parse_number<int>(key, v);
    else if (key == "checkpoint_dir") c.checkpoint_dir = v;
    else if (key == "finetune_tg") {
      if (v != "true" && v != "false") throw Error(ErrorKind::BadFormat, "finetune_tg must be true or false");
      c.finetune_tg = v == "true";
    } else {
      throw Error(ErrorKind::BadFormat, "unknown key: " + key);
    }
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string TrainConfig::to_text() const {
  std::ostringstream o;
  o.precision(17);
  o << "batch_size = " << batch_size << "\n"
    << "epochs = " << epochs << "\n"
    << "learning_rate = " << learning_rate << "\n"
    << "weight_decay = " << weight_decay << "\n"
    << "warmup_fraction = " << warmup_fraction << "\n"
    << "lambda_ctc = " << lambda_ctc << "\n"
    << "lambda_bc = " << lambda_bc << "\n"
    << "lambda_tg = " << lambda_tg << "\n"
    << "seed = " << seed << "\n"
    << "checkpoint_every = " << checkpoint_every << "\n"
    << "checkpoint_dir = " << checkpoint_dir << "\n"
    << "finetune_tg = " << (finetune_tg ? "true" : "false") << "\n";
  return o.str();
}

nlohmann::ordered_json LossReport::to_json() const {
  return {{"step", step}, {"ctc", ctc}, {"bc", bc}, {"tg", tg}, {"total", total}};
}

// ---- data ----

Example prepare_example(const std::string& method, const std::string& comment, Label label,
                        const tokenize::Vocabulary& vocab, const ModelConfig& config) {
  Example e;
  e.code = tokenize::encode(method, vocab);
  e.text = tokenize::encode(comment, vocab);
  e.label = label;
  // 3 specials in both the cross and the decoder layout
  model::fit_lengths(e.code, e.text, 3, config);
  return e;
}

std::vector<Example> prepare_examples(const std::vector<corpus::PairExample>& pairs,
                                      const tokenize::Vocabulary& vocab, const ModelConfig& config) {
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(prepare_example(p.method, p.comment, p.label, vocab, config));
  return out;
}

// ---- batch losses ----

namespace {

struct Pooled {
  Trace trace;
  VectorXd pooled;
};

Pooled run(std::span<const int> ids, AttentionMode mode, const Parameters& p, const ModelConfig& c) {
  Pooled out{model::forward(ids, mode, 0, p, c), {}};
  out.pooled = out.trace.states.row(0).transpose();
  return out;
}

// Pushes d pooled back through the stack at the CLS position.
void backward_pooled(const Pooled& r, const VectorXd& d_pooled, const Parameters& p, const ModelConfig& c,
                     Parameters& grads) {
  MatrixXd ds = MatrixXd::Zero(r.trace.states.rows(), r.trace.states.cols());
  ds.row(0) = d_pooled.transpose();
  model::backward(r.trace, ds, p, c, grads);
}

struct BcItem {
  const Example* code;
  const Example* text;
  int label;
};

double bc_part(const Parameters& p, const ModelConfig& c, const std::vector<BcItem>& items, double weight,
               Parameters* grads) {
  std::vector<Pooled> runs;
  std::vector<double> logits;
  std::vector<int> labels;
  for (const BcItem& it : items) {
    runs.push_back(run(model::cross_input(it.code->code, it.text->text, c), AttentionMode::cross, p, c));
    logits.push_back(model::bc_logit(runs.back().pooled, p));
    labels.push_back(it.label);
  }
  BcGrad g = bc_loss_grad(logits, labels);
  if (grads && weight != 0.0) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const VectorXd dp = model::bc_backward(runs[i].pooled, weight * g.d_logits[i], p, *grads);
      backward_pooled(runs[i], dp, p, c, *grads);
    }
  }
  return g.loss;
}

double tg_part(const Parameters& p, const ModelConfig& c, const std::vector<const Example*>& items, double weight,
               Parameters* grads) {
  std::vector<Trace> traces;
  std::vector<int> prefix, targets;
  Eigen::Index rows = 0;
  for (const Example* e : items) {
    model::DecoderInput d = model::decoder_input(e->code, e->text, c);
    traces.push_back(model::forward(d.ids, AttentionMode::decoder, d.prefix_len, p, c));
    prefix.push_back(d.prefix_len);
    targets.insert(targets.end(), d.targets.begin(), d.targets.end());
    rows += static_cast<Eigen::Index>(d.targets.size());
  }
  // all target positions of the batch form one mean
  MatrixXd logits(rows, c.vocab_size);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const Eigen::Index n = traces[i].states.rows() - prefix[i];
    logits.middleRows(r, n) = model::lm_logits(traces[i].states.bottomRows(n), p);
    r += n;
  }
  TgGrad g = tg_loss_grad(logits, targets);
  if (grads && weight != 0.0) {
    r = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const Eigen::Index n = traces[i].states.rows() - prefix[i];
      MatrixXd ds = MatrixXd::Zero(traces[i].states.rows(), traces[i].states.cols());
      ds.bottomRows(n) = model::lm_backward(traces[i].states.bottomRows(n), weight * g.d_logits.middleRows(r, n), p, *grads);
      model::backward(traces[i], ds, p, c, *grads);
      r += n;
    }
  }
  return g.loss;
}

}  // namespace

LossReport joint_batch_loss(const Parameters& p, const ModelConfig& c, const LossWeights& w,
                            std::span<const Example* const> batch, std::uint64_t mining_seed,
                            const std::vector<corpus::HardNegative>* fixed_negatives, Parameters* grads) {
  std::vector<const Example*> pos, neg;
  for (const Example* e : batch) (e->label == Label::inconsistent ? neg : pos).push_back(e);

  LossReport r;
  std::vector<BcItem> bc_items;
  for (const Example* e : pos) bc_items.push_back({e, e, 0});

  if (pos.size() >= 2) {
    const auto n = static_cast<Eigen::Index>(pos.size());
    std::vector<Pooled> code_runs, text_runs;
    std::vector<model::Projection> code_proj, text_proj;
    MatrixXd u(n, c.proj_dim), v(n, c.proj_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Example* e = pos[static_cast<std::size_t>(i)];
      code_runs.push_back(run(model::unimodal_input(e->code, c), AttentionMode::unimodal, p, c));
      text_runs.push_back(run(model::unimodal_input(e->text, c), AttentionMode::unimodal, p, c));
      code_proj.push_back(model::project(code_runs.back().pooled, p));
      text_proj.push_back(model::project(text_runs.back().pooled, p));
      u.row(i) = code_proj.back().unit.transpose();
      v.row(i) = text_proj.back().unit.transpose();
    }
    CtcGrad g = ctc_loss_grad(u, v, c.temperature);
    r.ctc = g.loss;
    if (grads && w.ctc != 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        VectorXd dp = model::project_backward(code_runs[k].pooled, code_proj[k], w.ctc * g.d_code.row(i).transpose(), p, *grads);
        backward_pooled(code_runs[k], dp, p, c, *grads);
        dp = model::project_backward(text_runs[k].pooled, text_proj[k], w.ctc * g.d_text.row(i).transpose(), p, *grads);
        backward_pooled(text_runs[k], dp, p, c, *grads);
      }
    }
    const std::vector<corpus::HardNegative> mined =
        fixed_negatives ? *fixed_negatives : corpus::mine_hard_negatives(u, v, c.temperature, mining_seed);
    for (const auto& hn : mined) {
      const Example* a = pos[hn.anchor];
      const Example* b = pos[hn.negative];
      bc_items.push_back(hn.side == corpus::NegativeSide::text ? BcItem{a, b, 1} : BcItem{b, a, 1});
    }
  }
  for (const Example* e : neg) bc_items.push_back({e, e, 1});

  if (!bc_items.empty()) r.bc = bc_part(p, c, bc_items, w.bc, grads);
  if (!pos.empty()) r.tg = tg_part(p, c, pos, w.tg, grads);
  r.total = w.ctc * r.ctc + w.bc * r.bc + w.tg * r.tg;
  return r;
}

LossReport labeled_batch_loss(const Parameters& p, const ModelConfig& c, std::span<const Example* const> batch,
                              bool with_tg, Parameters* grads) {
  std::vector<BcItem> items;
  std::vector<const Example*> consistent;
  for (const Example* e : batch) {
    if (e->label == Label::unlabeled) throw Error(ErrorKind::InvalidArgument, "fine-tuning needs labeled pairs");
    items.push_back({e, e, e->label == Label::inconsistent ? 1 : 0});
    if (e->label == Label::consistent) consistent.push_back(e);
  }
  LossReport r;
  r.bc = bc_part(p, c, items, 1.0, grads);
  if (with_tg && !consistent.empty()) r.tg = tg_part(p, c, consistent, 1.0, grads);
  r.total = r.bc + r.tg;
  return r;
}

// ---- optimization ----

AdamW::AdamW(const ModelConfig& config, double weight_decay)
    : m_(Parameters::zeros(config)), v_(Parameters::zeros(config)), weight_decay_(weight_decay) {}

void AdamW::step(Parameters& params, const Parameters& grads, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto ps = model::tensors(params);
  auto gs = model::tensors(grads);
  auto ms = model::tensors(m_);
  auto vs = model::tensors(v_);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const double decay = ps[k].cols > 1 ? lr * weight_decay_ : 0.0;
    for (Eigen::Index i = 0; i < ps[k].size(); ++i) {
      const double g = gs[k].data[i];
      double& m = ms[k].data[i];
      double& v = vs[k].data[i];
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g * g;
      double& x = ps[k].data[i];
      x -= decay * x;
      x -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
    }
  }
}

double learning_rate_at(const TrainConfig& cfg, long step, long total_steps) {
  const long warmup = static_cast<long>(std::ceil(cfg.warmup_fraction * static_cast<double>(total_steps)));
  if (step < warmup) return cfg.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
  return cfg.learning_rate;
}

// ---- loops ----

namespace {

constexpr std::uint64_t kMiningStream = 0x6d696e65;  // "mine"

// Shuffles each label class, then interleaves them so every stretch of the
// order (and so every batch) carries the dataset's class ratio.
std::vector<std::size_t> balanced_order(const std::vector<Example>& examples, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (examples[i].label == Label::inconsistent ? neg : pos).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::size_t> out;
  out.reserve(examples.size());
  std::size_t p = 0, n = 0;
  const std::size_t total = examples.size();
  for (std::size_t k = 0; k < total; ++k) {
    // take a positive while positives are behind their share of the first k+1
    if (n == neg.size() || (p < pos.size() && (p + 1) * total <= (k + 1) * pos.size())) out.push_back(pos[p++]);
    else out.push_back(neg[n++]);
  }
  return out;
}

TrainResult loop(const std::vector<corpus::PairExample>& pairs, const model::Checkpoint& m, const TrainConfig& cfg,
                 const EpochHook& hook, bool joint) {
  cfg.validate();
  if (pairs.empty()) throw Error(ErrorKind::EmptyDataset, "no training pairs");
  const std::vector<Example> examples = prepare_examples(pairs, m.vocab, m.config);
  const LossWeights w{cfg.lambda_ctc, cfg.lambda_bc, cfg.lambda_tg};

  TrainResult res{m.params, {}};
  AdamW opt(m.config, cfg.weight_decay);
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const long per_epoch = static_cast<long>((examples.size() + bs - 1) / bs);
  const long total = per_epoch * cfg.epochs;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = balanced_order(examples, derive_seed(cfg.seed, epoch));
    for (std::size_t start = 0; start < order.size(); start += bs, ++step) {
      std::vector<const Example*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) batch.push_back(&examples[order[i]]);
      Parameters grads = Parameters::zeros(m.config);
      LossReport r = joint ? joint_batch_loss(res.params, m.config, w, batch, derive_seed(cfg.seed, kMiningStream, step),
                                              nullptr, &grads)
                           : labeled_batch_loss(res.params, m.config, batch, cfg.finetune_tg, &grads);
      r.step = step;
      if (!std::isfinite(r.total)) throw Error(ErrorKind::NonFiniteLoss, r.to_json().dump());
      opt.step(res.params, grads, learning_rate_at(cfg, step, total));
      res.reports.push_back(r);
      if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() && (step + 1) % cfg.checkpoint_every == 0) {
        std::filesystem::create_directories(cfg.checkpoint_dir);
        char name[32];
        std::snprintf(name, sizeof(name), "step-%06ld.ckpt", step + 1);
        model::save_checkpoint({m.config, res.params, m.vocab}, std::filesystem::path(cfg.checkpoint_dir) / name);
      }
    }
    if (hook && !hook(epoch, res.params)) break;
  }
  return res;
}

}  // namespace

TrainResult train_joint(const std::vector<corpus::PairExample>& pairs, const model::Checkpoint& model,
                        const TrainConfig& cfg, const EpochHook& hook) {
  return loop(pairs, model, cfg, hook, true);
}

TrainResult finetune_iccd(const std::vector<corpus::PairExample>& pairs, const model::Checkpoint& model,
                          const TrainConfig& cfg, const EpochHook& hook) {
  return loop(pairs, model, cfg, hook, false);
}

}  // namespace doccheck::train
