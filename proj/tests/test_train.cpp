#include "doctest.h"

#include "doccheck/error.hpp"
#include "doccheck/train.hpp"
#include "gradcheck.hpp"
#include "overfit.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

using namespace doccheck;
using namespace doccheck::train;
using corpus::Label;

TEST_CASE("ctc loss identities") {
  // all similarities equal -> ln N
  for (int n : {2, 5, 16}) {
    MatrixXd u = MatrixXd::Zero(n, 4), v = MatrixXd::Zero(n, 4);
    u.col(0).setOnes();
    v.col(0).setOnes();
    CHECK(std::abs(ctc_loss(u, v, 0.07) - std::log(static_cast<double>(n))) < 1e-9);
  }
  // u_i = v_i orthonormal: loss falls toward zero as tau shrinks
  const MatrixXd eye = MatrixXd::Identity(4, 4);
  const double l1 = ctc_loss(eye, eye, 1.0), l2 = ctc_loss(eye, eye, 0.1), l3 = ctc_loss(eye, eye, 0.01);
  CHECK(l1 > l2);
  CHECK(l2 > l3);
  CHECK(l3 < 1e-40);
  CHECK(l3 >= 0.0);
  // s = [[2,0],[0,2]], tau 1: every row and column is CE = ln(1 + e^-2)
  const MatrixXd s2 = MatrixXd::Identity(2, 2) * std::numbers::sqrt2;
  CHECK(std::abs(ctc_loss(s2, s2, 1.0) - 0.1269280110429726) < 1e-12);

  Rng rng(5);
  MatrixXd a(6, 8), b(6, 8);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a.data()[i] = rng.normal();
    b.data()[i] = rng.normal();
  }
  a.rowwise().normalize();
  b.rowwise().normalize();
  CHECK(ctc_loss(a, b, 0.07) == doctest::Approx(ctc_loss(b, a, 0.07)).epsilon(1e-12));
  CHECK(ctc_loss(a, b, 0.07) >= 0.0);
  CHECK_THROWS_AS(ctc_loss(a.topRows(1), b.topRows(1), 0.07), Error);
}

TEST_CASE("bc loss identities") {
  const std::vector<double> zeros = {0.0, 0.0, 0.0};
  CHECK(std::abs(bc_loss(zeros, std::vector<int>{1, 0, 1}) - std::numbers::ln2) < 1e-15);
  CHECK(bc_loss(std::vector<double>{20.0}, std::vector<int>{1}) < 1e-8);
  // (softplus(-1) + softplus(-1)) / 2
  CHECK(std::abs(bc_loss(std::vector<double>{1.0, -1.0}, std::vector<int>{1, 0}) - 0.31326168751822286) < 1e-12);
  CHECK_THROWS_AS(bc_loss(std::vector<double>{1.0}, std::vector<int>{}), Error);
}

TEST_CASE("tg loss identities") {
  const MatrixXd uniform = MatrixXd::Constant(5, 7, 0.3);
  const std::vector<int> t5 = {0, 1, 2, 3, 4};
  CHECK(std::abs(tg_loss(uniform, t5) - std::log(7.0)) < 1e-12);

  MatrixXd onehot = MatrixXd::Zero(5, 7);
  for (int i = 0; i < 5; ++i) onehot(i, t5[static_cast<std::size_t>(i)]) = 30.0;
  CHECK(tg_loss(onehot, t5) < 1e-8);

  // row 0: ln(e + e^2 + e^3) - 3; row 1: ln 4 - 0
  MatrixXd l(2, 3);
  l << 1, 2, 3, 0, 0, std::log(2.0);
  const std::vector<int> t2 = {2, 0};
  CHECK(std::abs(tg_loss(l, t2) - 0.8969501627821354) < 1e-12);
  CHECK(std::abs(tg_loss(l, t2, {false, true}) - 0.40760596444438013) < 1e-12);
  CHECK_THROWS_AS(tg_loss(l, t2, {true, true}), Error);
}

TEST_CASE("analytic gradients match finite differences for every tensor") {
  const auto start = std::chrono::steady_clock::now();
  gradcheck::Problem prob;
  const std::vector<std::pair<std::string, LossWeights>> cases = {
      {"ctc", {1, 0, 0}}, {"bc", {0, 1, 0}}, {"tg", {0, 0, 1}}, {"weighted", {0.7, 1.3, 0.4}}};
  for (const auto& [label, w] : cases) {
    CAPTURE(label);
    const auto checks = gradcheck::check(prob.params, prob.config, prob.loss(w));
    double max_norm = 0.0;
    for (const auto& c : checks) {
      CAPTURE(c.name);
      CAPTURE(c.rel_error);
      CHECK(c.passed());
      max_norm = std::max(max_norm, c.analytic_norm);
    }
    CHECK(max_norm > 0.0);
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 120.0);
}

TEST_CASE("loss reports follow the weighted-sum contract") {
  gradcheck::Problem prob;
  const LossReport all = joint_batch_loss(prob.params, prob.config, {1, 1, 1}, prob.batch, 0, &prob.negatives, nullptr);
  CHECK(all.ctc > 0.0);
  CHECK(all.bc > 0.0);
  CHECK(all.tg > 0.0);
  CHECK(std::abs(all.total - (all.ctc + all.bc + all.tg)) < 1e-9);

  const LossReport ctc_only = joint_batch_loss(prob.params, prob.config, {2.5, 0, 0}, prob.batch, 0, &prob.negatives, nullptr);
  CHECK(ctc_only.total == 2.5 * ctc_only.ctc);
  CHECK(ctc_only.ctc == all.ctc);
}

TEST_CASE("training config file round-trips") {
  TrainConfig c;
  c.batch_size = 16;
  c.learning_rate = 1e-3;
  c.lambda_tg = 0.25;
  c.seed = 42;
  c.checkpoint_dir = "out/ckpts";
  c.finetune_tg = true;
  const TrainConfig back = TrainConfig::parse(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.learning_rate == 1e-3);

  CHECK(TrainConfig::parse("# comment\n\nepochs = 3  # trailing\n").epochs == 3);
  CHECK_THROWS_AS(TrainConfig::parse("epoch = 3\n"), Error);
  CHECK_THROWS_AS(TrainConfig::parse("epochs = three\n"), Error);
  CHECK_THROWS_AS(TrainConfig::parse("batch_size = 1\n"), Error);
  CHECK_THROWS_AS(TrainConfig::parse("lambda_ctc = 0\nlambda_bc = 0\nlambda_tg = 0\n"), Error);
}

TEST_CASE("warmup is linear over the first tenth of the steps") {
  TrainConfig c;
  c.learning_rate = 1e-3;
  CHECK(learning_rate_at(c, 0, 100) == doctest::Approx(1e-4));
  CHECK(learning_rate_at(c, 9, 100) == doctest::Approx(1e-3));
  CHECK(learning_rate_at(c, 50, 100) == 1e-3);
}

namespace {

model::Checkpoint tiny_model(const std::vector<corpus::PairExample>& pairs) {
  std::vector<std::string> texts;
  for (const auto& p : pairs) {
    texts.push_back(p.comment);
    texts.push_back(p.method);
  }
  model::ModelConfig c = model::ModelConfig::desk();
  c.vocab_size = 512;
  return {c, model::Parameters::init(c), tokenize::train_bpe(texts, 512)};
}

double train_accuracy(const std::vector<corpus::PairExample>& pairs, const model::Checkpoint& m) {
  int ok = 0;
  for (const auto& p : pairs) {
    Example e = prepare_example(p.method, p.comment, p.label, m.vocab, m.config);
    const auto enc = model::encode(model::cross_input(e.code, e.text, m.config), model::AttentionMode::cross,
                                   m.params, m.config);
    const bool flagged = model::bc_logit(enc.pooled, m.params) > 0.0;
    ok += flagged == (p.label == Label::inconsistent);
  }
  return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

}  // namespace

TEST_CASE("joint training is seed-deterministic") {
  const auto pairs = corpus::with_shuffled_negatives(corpus::synthetic_pairs(16), 1);
  const model::Checkpoint m = tiny_model(pairs);
  TrainConfig c;
  c.batch_size = 16;
  c.learning_rate = 1e-3;
  c.epochs = 10;
  const TrainResult a = train_joint(pairs, m, c);
  const TrainResult b = train_joint(pairs, m, c);
  REQUIRE(a.reports.size() == 20);
  CHECK(a.reports == b.reports);
  for (const auto& r : a.reports) {
    CHECK(r.ctc >= 0.0);
    CHECK(r.bc >= 0.0);
    CHECK(r.tg >= 0.0);
    CHECK(std::abs(r.total - (r.ctc + r.bc + r.tg)) < 1e-9);
  }
  c.seed = 1;
  CHECK_FALSE(train_joint(pairs, m, c).reports == a.reports);
}

TEST_CASE("overfit run: smoothed loss falls over the first 50 steps") {
  const model::Checkpoint init = overfit::initial_model();
  const TrainResult r = train_joint(overfit::dataset(), init, overfit::train_config(),
                                    [](int epoch, const model::Parameters&) { return epoch + 1 < 50; });
  REQUIRE(r.reports.size() >= 50);
  auto window = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t k = i; k < i + 5; ++k) s += r.reports[k].total;
    return s / 5;
  };
  for (std::size_t i = 0; i + 5 < 50; ++i) {
    CAPTURE(i);
    CHECK(window(i + 1) <= window(i));
  }
}

TEST_CASE("fine-tuning optimizes BC on dataset labels only") {
  auto pairs = corpus::synthetic_pairs(16);
  const model::Checkpoint m = tiny_model(pairs);
  TrainConfig c;
  c.batch_size = 8;
  c.learning_rate = 1e-3;
  c.epochs = 15;
  c.lambda_ctc = 5.0;  // ignored here
  c.lambda_tg = 3.0;

  SUBCASE("all-consistent labels") {
    for (auto& p : pairs) p.label = Label::consistent;
    const TrainResult r = finetune_iccd(pairs, m, c);
    for (const auto& rep : r.reports) CHECK(rep.total == rep.bc);
    CHECK(train_accuracy(pairs, {m.config, r.params, m.vocab}) == 1.0);
  }
  SUBCASE("labels carried by a marker token") {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      pairs[i].label = i % 2 ? Label::inconsistent : Label::consistent;
      if (i % 2) pairs[i].comment += " TODO stale";
    }
    c.epochs = 40;
    const TrainResult r = finetune_iccd(pairs, m, c);
    CHECK(train_accuracy(pairs, {m.config, r.params, m.vocab}) == 1.0);
  }
  SUBCASE("unlabeled pairs are rejected") {
    pairs[0].label = Label::unlabeled;
    CHECK_THROWS_AS(finetune_iccd(pairs, m, c), Error);
  }
}
