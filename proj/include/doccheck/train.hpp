#pragma once

#include "doccheck/checkpoint.hpp"
#include "doccheck/corpus.hpp"
#include "doccheck/model.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace doccheck::train {

using model::MatrixXd;
using model::Parameters;
using model::VectorXd;

// ---- losses ----
// Each *_grad variant also returns the derivative with respect to its inputs.

// Symmetric InfoNCE over s_ij = u_i . v_j / tau; rows of code/text are the
// N unit vectors.
double ctc_loss(const MatrixXd& code, const MatrixXd& text, double tau);
struct CtcGrad {
  double loss;
  MatrixXd d_code, d_text;
};
CtcGrad ctc_loss_grad(const MatrixXd& code, const MatrixXd& text, double tau);

// Mean sigmoid cross-entropy; label 1 = inconsistent.
double bc_loss(std::span<const double> logits, std::span<const int> labels);
struct BcGrad {
  double loss;
  std::vector<double> d_logits;
};
BcGrad bc_loss_grad(std::span<const double> logits, std::span<const int> labels);

// Mean token cross-entropy over rows whose masked flag is false.
// An empty mask means no row is masked.
double tg_loss(const MatrixXd& logits, std::span<const int> targets, const std::vector<bool>& masked = {});
struct TgGrad {
  double loss;
  MatrixXd d_logits;
};
TgGrad tg_loss_grad(const MatrixXd& logits, std::span<const int> targets, const std::vector<bool>& masked = {});

// ---- configuration ----

struct TrainConfig {
  int batch_size = 8;
  int epochs = 10;
  double learning_rate = 3e-4;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  double lambda_ctc = 1.0;
  double lambda_bc = 1.0;
  double lambda_tg = 1.0;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // steps; 0 disables
  std::string checkpoint_dir;
  bool finetune_tg = false;  // add the TG loss on consistent pairs when fine-tuning

  void validate() const;  // InvalidArgument

  // `key = value` lines; `#` starts a comment; unknown keys are rejected.
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);
  std::string to_text() const;
};

struct LossReport {
  long step = 0;
  double ctc = 0.0, bc = 0.0, tg = 0.0, total = 0.0;

  nlohmann::ordered_json to_json() const;
  bool operator==(const LossReport&) const = default;
};

// ---- data ----

struct Example {
  std::vector<int> code;
  std::vector<int> text;
  corpus::Label label = corpus::Label::consistent;
};

// Tokenizes and truncates so every layout (unimodal, cross, decoder) fits.
Example prepare_example(const std::string& method, const std::string& comment, corpus::Label label,
                        const tokenize::Vocabulary& vocab, const model::ModelConfig& config);
std::vector<Example> prepare_examples(const std::vector<corpus::PairExample>& pairs,
                                      const tokenize::Vocabulary& vocab, const model::ModelConfig& config);

// ---- one batch ----

struct LossWeights {
  double ctc = 1.0, bc = 1.0, tg = 1.0;
};

// The joint objective for one batch. Consistent pairs feed CTC, mining and
// TG; mined negatives and dataset-inconsistent pairs feed BC. Negatives are
// mined with `mining_seed` unless `fixed_negatives` is given. When `grads`
// is non-null the weighted gradient is accumulated into it.
LossReport joint_batch_loss(const Parameters& params, const model::ModelConfig& config, const LossWeights& w,
                            std::span<const Example* const> batch, std::uint64_t mining_seed,
                            const std::vector<corpus::HardNegative>* fixed_negatives, Parameters* grads);

// BC on dataset labels only (plus TG when `with_tg`).
LossReport labeled_batch_loss(const Parameters& params, const model::ModelConfig& config,
                              std::span<const Example* const> batch, bool with_tg, Parameters* grads);

// ---- optimization ----

// Decoupled weight decay on matrices only; vectors (biases, norms) are not decayed.
class AdamW {
public:
  AdamW(const model::ModelConfig& config, double weight_decay);
  void step(Parameters& params, const Parameters& grads, double lr);

private:
  Parameters m_, v_;
  double weight_decay_;
  long t_ = 0;
};

// Linear warmup over the first warmup_fraction of steps, then constant.
double learning_rate_at(const TrainConfig& cfg, long step, long total_steps);

// Called after each epoch; return false to stop early.
using EpochHook = std::function<bool(int epoch, const Parameters& params)>;

struct TrainResult {
  Parameters params;
  std::vector<LossReport> reports;
};

TrainResult train_joint(const std::vector<corpus::PairExample>& pairs, const model::Checkpoint& model,
                        const TrainConfig& cfg, const EpochHook& hook = {});

TrainResult finetune_iccd(const std::vector<corpus::PairExample>& pairs, const model::Checkpoint& model,
                          const TrainConfig& cfg, const EpochHook& hook = {});

}  // namespace doccheck::train
