#pragma once

#include "json.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace doccheck::model {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

struct ModelConfig {
  int num_layers = 2;
  int hidden = 64;
  int heads = 4;
  int intermediate = 256;
  int proj_dim = 32;
  int vocab_size = 8192;
  int max_len = 128;
  double temperature = 0.07;
  std::uint64_t seed = 0;

  static ModelConfig desk();
  // 12 layers, 768 hidden, 12 heads, 3072 intermediate.
  static ModelConfig full();

  void validate() const;  // throws InvalidArgument
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  MatrixXd wq, wk, wv, wo;  // hidden x hidden
  VectorXd bq, bk, bv, bo;
  VectorXd ln1_g, ln1_b, ln2_g, ln2_b;
  MatrixXd w1;  // hidden x intermediate
  VectorXd b1;
  MatrixXd w2;  // intermediate x hidden
  VectorXd b2;
};

struct Parameters {
  MatrixXd tok_emb;  // vocab x hidden; also the lm head weight
  MatrixXd pos_emb;  // max_len x hidden
  std::vector<LayerParams> layers;
  VectorXd lnf_g, lnf_b;
  MatrixXd proj_w;  // hidden x proj_dim, shared by code and text
  VectorXd proj_b;
  VectorXd bc_w;    // hidden
  VectorXd bc_b;    // 1
  VectorXd lm_bias; // vocab

  // normal(0, 0.02) weights, zero biases, unit norm gains.
  static Parameters init(const ModelConfig& config);
  static Parameters zeros(const ModelConfig& config);
};

// A named view of one parameter tensor (column-major storage).
template <typename Scalar>
struct TensorView {
  std::string name;
  Scalar* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

// All tensors in a fixed order; shared by the optimizer, checkpoints and
// gradient checks.
std::vector<TensorView<double>> tensors(Parameters& p);
std::vector<TensorView<const double>> tensors(const Parameters& p);

std::size_t parameter_count(const Parameters& p);
// Same count from the config alone, without allocating.
std::size_t parameter_count(const ModelConfig& config);

enum class AttentionMode {
  unimodal,  // bidirectional over [CLS] x [SEP]
  cross,     // bidirectional over [CLS] code [SEP] text [SEP]
  decoder,   // code prefix bidirectional, text causal and sees all code
};

// Everything backward() needs from one forward pass.
struct Trace {
  std::vector<int> ids;
  AttentionMode mode = AttentionMode::unimodal;
  int prefix_len = 0;
  const Parameters* params = nullptr;  // the weights this pass ran with
  std::vector<std::vector<bool>> allowed;
  struct Layer {
    MatrixXd h_in, a, q, k, v, o, h_mid, b, u, g;
    MatrixXd cdf;  // Phi(u), reused by the GELU backward
    MatrixXd ln1_xhat, ln2_xhat;
    VectorXd ln1_rstd, ln2_rstd;
    std::vector<MatrixXd> probs;  // per head, T x T
  };
  std::vector<Layer> layers;
  MatrixXd h_final, lnf_xhat;
  VectorXd lnf_rstd;
  MatrixXd states;  // T x hidden, after the final norm
};

Trace forward(std::span<const int> ids, AttentionMode mode, int prefix_len, const Parameters& params,
              const ModelConfig& config);
// Accumulates into grads the gradient of a loss whose derivative with
// respect to trace.states is d_states.
void backward(const Trace& trace, const MatrixXd& d_states, const Parameters& params,
              const ModelConfig& config, Parameters& grads);

// Projection head: unit vector of pooled * proj_w + proj_b.
struct Projection {
  VectorXd z;
  VectorXd unit;
};
Projection project(const VectorXd& pooled, const Parameters& params);
// Returns d pooled; accumulates head gradients.
VectorXd project_backward(const VectorXd& pooled, const Projection& pr, const VectorXd& d_unit,
                          const Parameters& params, Parameters& grads);

double bc_logit(const VectorXd& pooled, const Parameters& params);
VectorXd bc_backward(const VectorXd& pooled, double d_logit, const Parameters& params, Parameters& grads);

// rows x vocab logits of the given state rows through the tied lm head.
MatrixXd lm_logits(const MatrixXd& states, const Parameters& params);
// Returns d states; accumulates tied-embedding and bias gradients.
MatrixXd lm_backward(const MatrixXd& states, const MatrixXd& d_logits, const Parameters& params,
                     Parameters& grads);

// Sequence layouts. All throw SequenceTooLong past config.max_len.
std::vector<int> unimodal_input(std::span<const int> content, const ModelConfig& config);
std::vector<int> cross_input(std::span<const int> code, std::span<const int> text,
                             const ModelConfig& config);
struct DecoderInput {
  std::vector<int> ids;      // [CLS] code [SEP] [BOS] text
  int prefix_len = 0;        // length of [CLS] code [SEP]
  std::vector<int> targets;  // text [EOS], one per position from prefix_len on
};
DecoderInput decoder_input(std::span<const int> code, std::span<const int> text, const ModelConfig& config);

// Truncates code (then text) so that code + text + overhead fits max_len.
// Returns true when anything was cut.
bool fit_lengths(std::vector<int>& code, std::vector<int>& text, int overhead, const ModelConfig& config);

struct EncodedOutput {
  MatrixXd states;
  VectorXd pooled;
  VectorXd projected;
};

// `tokens` is a complete layout (see unimodal_input / cross_input). PAD
// positions are masked out as attention keys.
EncodedOutput encode(std::span<const int> tokens, AttentionMode mode, const Parameters& params,
                     const ModelConfig& config);

// Next-token logits after [BOS] text_prefix, conditioned on the code.
VectorXd decode_step(std::span<const int> code_tokens, std::span<const int> text_prefix_tokens,
                     const Parameters& params, const ModelConfig& config);

}  // namespace doccheck::model
