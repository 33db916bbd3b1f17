#pragma once

// Central finite differences against the analytic backward pass, sampled per
// tensor. Shared by the unit tests and the acceptance binary.

#include "doccheck/model.hpp"
#include "doccheck/rng.hpp"
#include "doccheck/train.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace gradcheck {

using doccheck::model::ModelConfig;
using doccheck::model::Parameters;

inline constexpr double kZeroFloor = 1e-8;

struct TensorCheck {
  std::string name;
  double rel_error = 0.0;  // ||analytic - numeric|| / max(norms) over the sampled entries
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;

  // Relative error is undefined for gradients that vanish in exact
  // arithmetic (a head a loss never touches, the key bias under softmax
  // shift invariance); those pass when both sides are rounding noise.
  bool passed(double tol = 1e-4) const {
    return rel_error < tol || std::max(analytic_norm, numeric_norm) < kZeroFloor;
  }
};

// loss(params, grads) returns the loss and, when grads is non-null,
// accumulates its gradient.
using LossFn = std::function<double(const Parameters&, Parameters*)>;

inline std::vector<TensorCheck> check(Parameters params, const ModelConfig& config, const LossFn& loss,
                                      double eps = 1e-5, int per_tensor = 8, std::uint64_t seed = 0) {
  Parameters grads = Parameters::zeros(config);
  loss(params, &grads);
  auto pv = doccheck::model::tensors(params);
  auto gv = doccheck::model::tensors(grads);
  std::vector<TensorCheck> out;
  for (std::size_t k = 0; k < pv.size(); ++k) {
    const auto n = static_cast<std::size_t>(pv[k].size());
    // half the samples at the largest analytic entries, half at random
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const std::size_t top = std::min<std::size_t>(n, static_cast<std::size_t>(per_tensor / 2));
    std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(top), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(gv[k].data[a]) > std::abs(gv[k].data[b]);
    });
    std::vector<std::size_t> picks(idx.begin(), idx.begin() + static_cast<long>(top));
    doccheck::Rng rng(doccheck::derive_seed(seed, k));
    for (int i = 0; i < per_tensor / 2 && n > 0; ++i) picks.push_back(rng.below(n));
    std::sort(picks.begin(), picks.end());
    picks.erase(std::unique(picks.begin(), picks.end()), picks.end());

    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i : picks) {
      double& x = pv[k].data[i];
      const double saved = x;
      x = saved + eps;
      const double up = loss(params, nullptr);
      x = saved - eps;
      const double down = loss(params, nullptr);
      x = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = gv[k].data[i];
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    }
    const double denom = std::sqrt(std::max(a2, n2));
    out.push_back({pv[k].name, denom == 0.0 ? 0.0 : std::sqrt(diff2) / denom, std::sqrt(a2), std::sqrt(n2)});
  }
  return out;
}

}  // namespace gradcheck

namespace gradcheck {

// Desk-scale model on a four-pair batch: three consistent pairs (CTC,
// mining, TG) and one dataset-inconsistent pair (BC only). Negatives are
// fixed so the loss is a smooth function of the weights.
struct Problem {
  ModelConfig config = ModelConfig::desk();
  Parameters params;
  std::vector<doccheck::train::Example> examples;
  std::vector<const doccheck::train::Example*> batch;
  std::vector<doccheck::corpus::HardNegative> negatives;

  Problem() {
    params = Parameters::init(config);
    // move norms and biases off their init values so every term is exercised
    doccheck::Rng rng(7);
    for (auto& t : doccheck::model::tensors(params)) {
      if (t.cols == 1) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] += 0.1 * rng.normal();
      }
    }
    using doccheck::corpus::Label;
    examples = {{{300, 301, 302, 303}, {400, 401, 402}, Label::consistent},
                {{310, 311, 312}, {410, 411}, Label::consistent},
                {{320, 321, 322, 323, 324}, {420, 421, 422, 423}, Label::consistent},
                {{330, 331}, {430}, Label::inconsistent}};
    for (const auto& e : examples) batch.push_back(&e);
    negatives = {{0, 1, doccheck::corpus::NegativeSide::text}, {0, 2, doccheck::corpus::NegativeSide::code},
                 {1, 2, doccheck::corpus::NegativeSide::text}, {1, 0, doccheck::corpus::NegativeSide::code},
                 {2, 0, doccheck::corpus::NegativeSide::text}, {2, 1, doccheck::corpus::NegativeSide::code}};
  }

  LossFn loss(doccheck::train::LossWeights w) const {
    return [this, w](const Parameters& p, Parameters* g) {
      return doccheck::train::joint_batch_loss(p, config, w, batch, 0, &negatives, g).total;
    };
  }
};

}  // namespace gradcheck
