#include "doccheck/error.hpp"
#include "doccheck/train.hpp"

#include <cmath>

namespace doccheck::train {

namespace {

// log(sum(exp(x))) without overflow
double logsumexp(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const double mx = x.maxCoeff();
  return mx + std::log((x.array() - mx).exp().sum());
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

CtcGrad ctc_loss_grad(const MatrixXd& code, const MatrixXd& text, double tau) {
  const Eigen::Index n = code.rows();
  if (n < 2) throw Error(ErrorKind::BatchTooSmall, "contrastive loss needs at least 2 pairs");
  if (text.rows() != n || text.cols() != code.cols()) throw Error(ErrorKind::LengthMismatch, "code/text shapes differ");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be positive");

  const MatrixXd s = code * text.transpose() / tau;
  const double dn = static_cast<double>(n);
  double rows = 0.0, cols = 0.0;
  MatrixXd ds = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lr = logsumexp(s.row(i));
    rows += lr - s(i, i);
    ds.row(i) += (s.row(i).array() - lr).exp().matrix() * (0.5 / dn);
    const double lc = logsumexp(s.col(i).transpose());
    cols += lc - s(i, i);
    ds.col(i) += (s.col(i).array() - lc).exp().matrix() * (0.5 / dn);
    ds(i, i) -= 1.0 / dn;  // half from each direction
  }
  CtcGrad g;
  g.loss = 0.5 * (rows / dn + cols / dn);
  g.d_code = ds * text / tau;
  g.d_text = ds.transpose() * code / tau;
  return g;
}

double ctc_loss(const MatrixXd& code, const MatrixXd& text, double tau) {
  return ctc_loss_grad(code, text, tau).loss;
}

BcGrad bc_loss_grad(std::span<const double> logits, std::span<const int> labels) {
  if (logits.size() != labels.size()) throw Error(ErrorKind::LengthMismatch, "logits and labels differ in length");
  if (logits.empty()) throw Error(ErrorKind::EmptyInput, "no logits");
  const double m = static_cast<double>(logits.size());
  BcGrad g{0.0, std::vector<double>(logits.size())};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i], y = labels[i];
    // -y log s(x) - (1-y) log(1-s(x)) = softplus(x) - y x
    g.loss += y != 0 ? softplus(-x) : softplus(x);
    const double sig = 1.0 / (1.0 + std::exp(-x));
    g.d_logits[i] = (sig - y) / m;
  }
  g.loss /= m;
  return g;
}

double bc_loss(std::span<const double> logits, std::span<const int> labels) {
  return bc_loss_grad(logits, labels).loss;
}

TgGrad tg_loss_grad(const MatrixXd& logits, std::span<const int> targets, const std::vector<bool>& masked) {
  const auto t = static_cast<std::size_t>(logits.rows());
  if (targets.size() != t) throw Error(ErrorKind::LengthMismatch, "one target per logit row");
  if (!masked.empty() && masked.size() != t) throw Error(ErrorKind::LengthMismatch, "one mask flag per row");
  std::size_t count = 0;
  for (std::size_t i = 0; i < t; ++i) count += masked.empty() || !masked[i];
  if (count == 0) throw Error(ErrorKind::AllPositionsMasked, "every target position is masked");

  TgGrad g{0.0, MatrixXd::Zero(logits.rows(), logits.cols())};
  const double c = static_cast<double>(count);
  for (std::size_t i = 0; i < t; ++i) {
    if (!masked.empty() && masked[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    const int y = targets[i];
    if (y < 0 || y >= logits.cols()) throw Error(ErrorKind::UnknownId, "target " + std::to_string(y));
    const double lse = logsumexp(logits.row(r));
    g.loss += lse - logits(r, y);
    g.d_logits.row(r) = (logits.row(r).array() - lse).exp().matrix() / c;
    g.d_logits(r, y) -= 1.0 / c;
  }
  g.loss /= c;
  return g;
}

double tg_loss(const MatrixXd& logits, std::span<const int> targets, const std::vector<bool>& masked) {
  return tg_loss_grad(logits, targets, masked).loss;
}

}  // namespace doccheck::train
