#include "doccheck/model.hpp"

#include "doccheck/error.hpp"
#include "doccheck/rng.hpp"
#include "doccheck/tokenizer.hpp"

#include <cmath>
#include <numbers>

namespace doccheck::model {

using namespace tokenize;  // Special ids

namespace {

constexpr double kLnEps = 1e-5;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.num_layers = 12;
  c.hidden = 768;
  c.heads = 12;
  c.intermediate = 3072;
  c.proj_dim = 256;
  c.vocab_size = 51416;
  c.max_len = 1026;
  return c;
}

void ModelConfig::validate() const {
  require(num_layers >= 1, "num_layers must be >= 1");
  require(hidden >= 1 && heads >= 1 && hidden % heads == 0, "hidden must be divisible by heads");
  require(intermediate >= 1 && proj_dim >= 1, "intermediate and proj_dim must be positive");
  require(vocab_size >= tokenize::kBaseVocab, "vocab_size below the byte alphabet");
  require(max_len >= 8, "max_len must be >= 8");
  require(std::isfinite(temperature) && temperature > 0.0, "temperature must be positive");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  return {{"num_layers", num_layers}, {"hidden", hidden},       {"heads", heads},
          {"intermediate", intermediate}, {"proj_dim", proj_dim}, {"vocab_size", vocab_size},
          {"max_len", max_len},       {"temperature", temperature}, {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.num_layers = j.at("num_layers").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.heads = j.at("heads").get<int>();
    c.intermediate = j.at("intermediate").get<int>();
    c.proj_dim = j.at("proj_dim").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.temperature = j.at("temperature").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadFormat, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

Parameters Parameters::zeros(const ModelConfig& c) {
  c.validate();
  const int h = c.hidden, f = c.intermediate;
  Parameters p;
  p.tok_emb = MatrixXd::Zero(c.vocab_size, h);
  p.pos_emb = MatrixXd::Zero(c.max_len, h);
  p.layers.resize(static_cast<std::size_t>(c.num_layers));
  for (LayerParams& l : p.layers) {
    for (MatrixXd* m : {&l.wq, &l.wk, &l.wv, &l.wo}) *m = MatrixXd::Zero(h, h);
    for (VectorXd* v : {&l.bq, &l.bk, &l.bv, &l.bo, &l.ln1_g, &l.ln1_b, &l.ln2_g, &l.ln2_b, &l.b2})
      *v = VectorXd::Zero(h);
    l.w1 = MatrixXd::Zero(h, f);
    l.b1 = VectorXd::Zero(f);
    l.w2 = MatrixXd::Zero(f, h);
  }
  p.lnf_g = VectorXd::Zero(h);
  p.lnf_b = VectorXd::Zero(h);
  p.proj_w = MatrixXd::Zero(h, c.proj_dim);
  p.proj_b = VectorXd::Zero(c.proj_dim);
  p.bc_w = VectorXd::Zero(h);
  p.bc_b = VectorXd::Zero(1);
  p.lm_bias = VectorXd::Zero(c.vocab_size);
  return p;
}

Parameters Parameters::init(const ModelConfig& c) {
  Parameters p = zeros(c);
  // Each tensor draws from its own stream so adding a tensor never shifts the others.
  for (TensorView<double>& t : tensors(p)) {
    const std::string& n = t.name;
    const bool gain = n.ends_with("_g");
    const bool bias = !gain && (n.ends_with("_b") || n.ends_with(".bq") || n.ends_with(".bk") ||
                                n.ends_with(".bv") || n.ends_with(".bo") || n.ends_with(".b1") ||
                                n.ends_with(".b2") || n == "lm_bias");
    if (gain) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = 1.0;
    } else if (!bias) {
      std::uint64_t h = 1469598103934665603ULL;  // FNV-1a of the name
      for (char ch : n) h = (h ^ static_cast<unsigned char>(ch)) * 1099511628211ULL;
      Rng rng(derive_seed(c.seed, h));
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = 0.02 * rng.normal();
    }
  }
  return p;
}

namespace {

template <typename P, typename S>
std::vector<TensorView<S>> collect(P& p) {
  std::vector<TensorView<S>> out;
  auto add = [&](std::string name, auto& m) {
    out.push_back({std::move(name), m.data(), m.rows(), m.cols()});
  };
  add("tok_emb", p.tok_emb);
  add("pos_emb", p.pos_emb);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string pre = "layers." + std::to_string(i) + ".";
    add(pre + "ln1_g", l.ln1_g);
    add(pre + "ln1_b", l.ln1_b);
    add(pre + "wq", l.wq);
    add(pre + "bq", l.bq);
    add(pre + "wk", l.wk);
    add(pre + "bk", l.bk);
    add(pre + "wv", l.wv);
    add(pre + "bv", l.bv);
    add(pre + "wo", l.wo);
    add(pre + "bo", l.bo);
    add(pre + "ln2_g", l.ln2_g);
    add(pre + "ln2_b", l.ln2_b);
    add(pre + "w1", l.w1);
    add(pre + "b1", l.b1);
    add(pre + "w2", l.w2);
    add(pre + "b2", l.b2);
  }
  add("lnf_g", p.lnf_g);
  add("lnf_b", p.lnf_b);
  add("proj_w", p.proj_w);
  add("proj_b", p.proj_b);
  add("bc_w", p.bc_w);
  add("bc_b", p.bc_b);
  add("lm_bias", p.lm_bias);
  return out;
}

}  // namespace

std::vector<TensorView<double>> tensors(Parameters& p) { return collect<Parameters, double>(p); }
std::vector<TensorView<const double>> tensors(const Parameters& p) {
  return collect<const Parameters, const double>(p);
}

std::size_t parameter_count(const Parameters& p) {
  std::size_t n = 0;
  for (const auto& t : tensors(p)) n += static_cast<std::size_t>(t.size());
  return n;
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t h = static_cast<std::size_t>(c.hidden), f = static_cast<std::size_t>(c.intermediate);
  const std::size_t v = static_cast<std::size_t>(c.vocab_size);
  const std::size_t layer = 4 * (h * h + h) + 4 * h + (h * f + f) + (f * h + h);
  return v * h + static_cast<std::size_t>(c.max_len) * h + static_cast<std::size_t>(c.num_layers) * layer +
         2 * h + (h * static_cast<std::size_t>(c.proj_dim) + static_cast<std::size_t>(c.proj_dim)) + (h + 1) + v;
}

// ---- building blocks ----

namespace {

struct NormOut {
  MatrixXd y, xhat;
  VectorXd rstd;
};

NormOut layer_norm(const MatrixXd& x, const VectorXd& g, const VectorXd& b) {
  NormOut o;
  const Eigen::Index t = x.rows();
  o.xhat.resize(t, x.cols());
  o.rstd.resize(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    o.rstd(i) = 1.0 / std::sqrt(var + kLnEps);
    o.xhat.row(i) = (x.row(i).array() - mu) * o.rstd(i);
  }
  o.y = (o.xhat.array().rowwise() * g.transpose().array()).rowwise() + b.transpose().array();
  return o;
}

MatrixXd layer_norm_backward(const MatrixXd& dy, const MatrixXd& xhat, const VectorXd& rstd, const VectorXd& g,
                             VectorXd& dg, VectorXd& db) {
  dg += (dy.array() * xhat.array()).colwise().sum().transpose().matrix();
  db += dy.colwise().sum().transpose();
  const MatrixXd dxhat = dy.array().rowwise() * g.transpose().array();
  MatrixXd dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double m1 = dxhat.row(i).mean();
    const double m2 = (dxhat.row(i).array() * xhat.row(i).array()).mean();
    dx.row(i) = rstd(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
  }
  return dx;
}

// exact GELU: x * Phi(x)
double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

MatrixXd affine(const MatrixXd& x, const MatrixXd& w, const VectorXd& b) {
  return (x * w).rowwise() + b.transpose();
}

std::vector<std::vector<bool>> attention_mask(std::span<const int> ids, AttentionMode mode, int prefix_len) {
  const std::size_t t = ids.size();
  std::vector<std::vector<bool>> allowed(t, std::vector<bool>(t, false));
  for (std::size_t i = 0; i < t; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < t; ++j) {
      if (ids[j] == PAD) continue;
      bool ok = true;
      if (mode == AttentionMode::decoder) {
        const std::size_t p = static_cast<std::size_t>(prefix_len);
        ok = j < p || (i >= p && j <= i);
      }
      allowed[i][j] = ok;
      any |= ok;
    }
    if (!any) throw Error(ErrorKind::InvalidArgument, "a position has no visible keys");
  }
  return allowed;
}

}  // namespace

Trace forward(std::span<const int> ids, AttentionMode mode, int prefix_len, const Parameters& params,
              const ModelConfig& config) {
  const int t = static_cast<int>(ids.size());
  if (t == 0) throw Error(ErrorKind::InvalidArgument, "empty sequence");
  if (t > config.max_len) {
    throw Error(ErrorKind::SequenceTooLong,
                std::to_string(t) + " tokens exceed max_len " + std::to_string(config.max_len));
  }
  for (int id : ids) {
    if (id < 0 || id >= config.vocab_size) throw Error(ErrorKind::UnknownId, "token id " + std::to_string(id));
  }
  if (mode == AttentionMode::decoder && (prefix_len < 1 || prefix_len > t)) {
    throw Error(ErrorKind::InvalidArgument, "decoder prefix outside the sequence");
  }

  Trace tr;
  tr.ids.assign(ids.begin(), ids.end());
  tr.mode = mode;
  tr.prefix_len = prefix_len;
  tr.params = &params;
  tr.allowed = attention_mask(ids, mode, prefix_len);

  const int h = config.hidden, nh = config.heads, dh = h / nh;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  MatrixXd x(t, h);
  for (int i = 0; i < t; ++i) x.row(i) = params.tok_emb.row(ids[static_cast<std::size_t>(i)]) + params.pos_emb.row(i);

  for (const LayerParams& lp : params.layers) {
    Trace::Layer L;
    L.h_in = x;
    NormOut n1 = layer_norm(x, lp.ln1_g, lp.ln1_b);
    L.a = std::move(n1.y);
    L.ln1_xhat = std::move(n1.xhat);
    L.ln1_rstd = std::move(n1.rstd);
    L.q = affine(L.a, lp.wq, lp.bq);
    L.k = affine(L.a, lp.wk, lp.bk);
    L.v = affine(L.a, lp.wv, lp.bv);
    L.o.resize(t, h);
    for (int hd = 0; hd < nh; ++hd) {
      const auto qh = L.q.middleCols(hd * dh, dh);
      const auto kh = L.k.middleCols(hd * dh, dh);
      MatrixXd s = (qh * kh.transpose()) * scale;
      MatrixXd p = MatrixXd::Zero(t, t);
      for (int i = 0; i < t; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < t; ++j)
          if (tr.allowed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) mx = std::max(mx, s(i, j));
        double z = 0.0;
        for (int j = 0; j < t; ++j) {
          if (!tr.allowed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
          p(i, j) = std::exp(s(i, j) - mx);
          z += p(i, j);
        }
        p.row(i) /= z;
      }
      L.o.middleCols(hd * dh, dh) = p * L.v.middleCols(hd * dh, dh);
      L.probs.push_back(std::move(p));
    }
    x = x + affine(L.o, lp.wo, lp.bo);
    L.h_mid = x;
    NormOut n2 = layer_norm(x, lp.ln2_g, lp.ln2_b);
    L.b = std::move(n2.y);
    L.ln2_xhat = std::move(n2.xhat);
    L.ln2_rstd = std::move(n2.rstd);
    L.u = affine(L.b, lp.w1, lp.b1);
    L.cdf = L.u.unaryExpr([](double v) { return normal_cdf(v); });
    L.g = L.u.cwiseProduct(L.cdf);
    x = x + affine(L.g, lp.w2, lp.b2);
    tr.layers.push_back(std::move(L));
  }
  tr.h_final = x;
  NormOut nf = layer_norm(x, params.lnf_g, params.lnf_b);
  tr.states = std::move(nf.y);
  tr.lnf_xhat = std::move(nf.xhat);
  tr.lnf_rstd = std::move(nf.rstd);
  return tr;
}

void backward(const Trace& tr, const MatrixXd& d_states, const Parameters& params, const ModelConfig& config,
              Parameters& grads) {
  const int t = static_cast<int>(tr.ids.size());
  const int h = config.hidden, nh = config.heads, dh = h / nh;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  MatrixXd dx = layer_norm_backward(d_states, tr.lnf_xhat, tr.lnf_rstd, params.lnf_g, grads.lnf_g, grads.lnf_b);

  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const LayerParams& lp = params.layers[li];
    LayerParams& gp = grads.layers[li];
    const Trace::Layer& L = tr.layers[li];

    // feed-forward residual
    gp.w2 += L.g.transpose() * dx;
    gp.b2 += dx.colwise().sum().transpose();
    // d/du u*Phi(u) = Phi(u) + u*phi(u)
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const MatrixXd dgelu =
        L.cdf.array() + L.u.array() * (-0.5 * L.u.array().square()).exp() * inv_sqrt_2pi;
    MatrixXd du = (dx * lp.w2.transpose()).array() * dgelu.array();
    gp.w1 += L.b.transpose() * du;
    gp.b1 += du.colwise().sum().transpose();
    MatrixXd db = du * lp.w1.transpose();
    dx += layer_norm_backward(db, L.ln2_xhat, L.ln2_rstd, lp.ln2_g, gp.ln2_g, gp.ln2_b);

    // attention residual
    gp.wo += L.o.transpose() * dx;
    gp.bo += dx.colwise().sum().transpose();
    const MatrixXd dO = dx * lp.wo.transpose();
    MatrixXd dq(t, h), dk(t, h), dv(t, h);
    for (int hd = 0; hd < nh; ++hd) {
      const MatrixXd& p = L.probs[static_cast<std::size_t>(hd)];
      const auto dOh = dO.middleCols(hd * dh, dh);
      dv.middleCols(hd * dh, dh) = p.transpose() * dOh;
      const MatrixXd dp = dOh * L.v.middleCols(hd * dh, dh).transpose();
      const VectorXd rowdot = (dp.array() * p.array()).rowwise().sum();
      const MatrixXd ds = (p.array() * (dp.colwise() - rowdot).array()) * scale;
      dq.middleCols(hd * dh, dh) = ds * L.k.middleCols(hd * dh, dh);
      dk.middleCols(hd * dh, dh) = ds.transpose() * L.q.middleCols(hd * dh, dh);
    }
    gp.wq += L.a.transpose() * dq;
    gp.bq += dq.colwise().sum().transpose();
    gp.wk += L.a.transpose() * dk;
    gp.bk += dk.colwise().sum().transpose();
    gp.wv += L.a.transpose() * dv;
    gp.bv += dv.colwise().sum().transpose();
    const MatrixXd da = dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
    dx += layer_norm_backward(da, L.ln1_xhat, L.ln1_rstd, lp.ln1_g, gp.ln1_g, gp.ln1_b);
  }

  for (int i = 0; i < t; ++i) {
    grads.tok_emb.row(tr.ids[static_cast<std::size_t>(i)]) += dx.row(i);
    grads.pos_emb.row(i) += dx.row(i);
  }
}

// ---- heads ----

Projection project(const VectorXd& pooled, const Parameters& params) {
  Projection pr;
  pr.z = params.proj_w.transpose() * pooled + params.proj_b;
  const double n = pr.z.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorKind::NonFiniteLoss, "projection has zero norm");
  pr.unit = pr.z / n;
  return pr;
}

VectorXd project_backward(const VectorXd& pooled, const Projection& pr, const VectorXd& d_unit,
                          const Parameters& params, Parameters& grads) {
  const double n = pr.z.norm();
  const VectorXd dz = (d_unit - pr.unit * pr.unit.dot(d_unit)) / n;
  grads.proj_w += pooled * dz.transpose();
  grads.proj_b += dz;
  return params.proj_w * dz;
}

double bc_logit(const VectorXd& pooled, const Parameters& params) {
  return params.bc_w.dot(pooled) + params.bc_b(0);
}

VectorXd bc_backward(const VectorXd& pooled, double d_logit, const Parameters& params, Parameters& grads) {
  grads.bc_w += d_logit * pooled;
  grads.bc_b(0) += d_logit;
  return d_logit * params.bc_w;
}

MatrixXd lm_logits(const MatrixXd& states, const Parameters& params) {
  return (states * params.tok_emb.transpose()).rowwise() + params.lm_bias.transpose();
}

MatrixXd lm_backward(const MatrixXd& states, const MatrixXd& d_logits, const Parameters& params,
                     Parameters& grads) {
  grads.tok_emb += d_logits.transpose() * states;
  grads.lm_bias += d_logits.colwise().sum().transpose();
  return d_logits * params.tok_emb;
}

// ---- layouts ----

namespace {

void check_len(std::size_t n, const ModelConfig& config) {
  if (n > static_cast<std::size_t>(config.max_len)) {
    throw Error(ErrorKind::SequenceTooLong,
                std::to_string(n) + " tokens exceed max_len " + std::to_string(config.max_len));
  }
}

}  // namespace

std::vector<int> unimodal_input(std::span<const int> content, const ModelConfig& config) {
  check_len(content.size() + 2, config);
  std::vector<int> out{CLS};
  out.insert(out.end(), content.begin(), content.end());
  out.push_back(SEP);
  return out;
}

std::vector<int> cross_input(std::span<const int> code, std::span<const int> text, const ModelConfig& config) {
  check_len(code.size() + text.size() + 3, config);
  std::vector<int> out{CLS};
  out.insert(out.end(), code.begin(), code.end());
  out.push_back(SEP);
  out.insert(out.end(), text.begin(), text.end());
  out.push_back(SEP);
  return out;
}

DecoderInput decoder_input(std::span<const int> code, std::span<const int> text, const ModelConfig& config) {
  check_len(code.size() + text.size() + 3, config);
  DecoderInput d;
  d.ids.push_back(CLS);
  d.ids.insert(d.ids.end(), code.begin(), code.end());
  d.ids.push_back(SEP);
  d.prefix_len = static_cast<int>(d.ids.size());
  d.ids.push_back(BOS);
  d.ids.insert(d.ids.end(), text.begin(), text.end());
  d.targets.assign(text.begin(), text.end());
  d.targets.push_back(EOS);
  return d;
}

bool fit_lengths(std::vector<int>& code, std::vector<int>& text, int overhead, const ModelConfig& config) {
  const std::size_t budget = static_cast<std::size_t>(std::max(0, config.max_len - overhead));
  if (code.size() + text.size() <= budget) return false;
  // Text keeps at most half the budget; code gives way first.
  const std::size_t text_keep = std::min(text.size(), budget / 2);
  const std::size_t code_keep = std::min(code.size(), budget - text_keep);
  const std::size_t text_final = std::min(text.size(), budget - code_keep);
  code.resize(code_keep);
  text.resize(text_final);
  return true;
}

EncodedOutput encode(std::span<const int> tokens, AttentionMode mode, const Parameters& params,
                     const ModelConfig& config) {
  if (mode == AttentionMode::decoder) throw Error(ErrorKind::InvalidArgument, "encode takes unimodal or cross");
  Trace tr = forward(tokens, mode, 0, params, config);
  EncodedOutput out;
  out.pooled = tr.states.row(0).transpose();
  out.projected = project(out.pooled, params).unit;
  out.states = std::move(tr.states);
  return out;
}

VectorXd decode_step(std::span<const int> code_tokens, std::span<const int> text_prefix_tokens,
                     const Parameters& params, const ModelConfig& config) {
  DecoderInput d = decoder_input(code_tokens, text_prefix_tokens, config);
  Trace tr = forward(d.ids, AttentionMode::decoder, d.prefix_len, params, config);
  return lm_logits(tr.states.bottomRows(1), params).row(0).transpose();
}

}  // namespace doccheck::model
