// Copyright 2026 The fedsmooth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedsmooth/objectives.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "fedsmooth/rng.h"

namespace fedsmooth {
namespace {

using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;

void CheckShapes(const LogisticModel& model, std::span<const double> w,
                 const Dataset& data) {
  if (static_cast<int64_t>(w.size()) != model.dim()) {
    throw std::invalid_argument("weight vector has " +
                                std::to_string(w.size()) + " entries, model " +
                                "expects " + std::to_string(model.dim()));
  }
  if (data.num_features() != model.features) {
    throw std::invalid_argument("dataset has " +
                                std::to_string(data.num_features()) +
                                " features, model expects " +
                                std::to_string(model.features));
  }
  if (static_cast<int64_t>(data.features.rows()) != data.size()) {
    throw std::invalid_argument("dataset rows and labels differ in count");
  }
}

int32_t CheckedLabel(const LogisticModel& model, int32_t y) {
  if (y < 0 || y >= model.classes) {
    throw std::invalid_argument("label " + std::to_string(y) +
                                " outside [0, " +
                                std::to_string(model.classes) + ")");
  }
  return y;
}

// Row-wise log-sum-exp of a logits block, turning the block into
// probabilities as a side effect.
Eigen::VectorXd SoftmaxInPlace(RowMatrix& logits) {
  Eigen::VectorXd lse(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i).array() = (logits.row(i).array() - m).exp();
    const double s = logits.row(i).sum();
    logits.row(i) /= s;
    lse(i) = m + std::log(s);
  }
  return lse;
}

}  // namespace

std::vector<double> LogisticModel::Init() const {
  return std::vector<double>(static_cast<std::size_t>(dim()), 0.0);
}

double LogisticLossGrad(const LogisticModel& model, std::span<const double> w,
                        const Dataset& data, std::span<const int64_t> rows,
                        double weight_decay, std::span<double> grad) {
  CheckShapes(model, w, data);
  if (static_cast<int64_t>(grad.size()) != model.dim()) {
    throw std::invalid_argument("gradient buffer has the wrong size");
  }
  if (rows.empty()) throw std::invalid_argument("empty batch");
  const auto n = static_cast<Eigen::Index>(rows.size());
  RowMatrix xb(n, model.features);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int64_t r = rows[static_cast<std::size_t>(i)];
    if (r < 0 || r >= data.size()) {
      throw std::invalid_argument("batch row out of range");
    }
    xb.row(i) = data.features.row(r);
  }
  ConstWeights wm(w.data(), model.classes, model.features);
  RowMatrix probs = xb * wm.transpose();
  const Eigen::VectorXd lse = SoftmaxInPlace(probs);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int32_t y =
        CheckedLabel(model, data.labels[static_cast<std::size_t>(rows[i])]);
    // log p_y = logit_y - lse; recover logit_y from the input row.
    loss += lse(i) - xb.row(i).dot(wm.row(y));
    probs(i, y) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Weights gm(grad.data(), model.classes, model.features);
  gm.noalias() = inv_n * probs.transpose() * xb;
  loss *= inv_n;
  if (weight_decay != 0.0) {
    double sq = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      sq += w[k] * w[k];
      grad[k] += weight_decay * w[k];
    }
    loss += 0.5 * weight_decay * sq;
  }
  return loss;
}

LossGrad LogisticGrad(const LogisticModel& model, std::span<const double> w,
                      const Dataset& data, double weight_decay) {
  std::vector<int64_t> rows(static_cast<std::size_t>(data.size()));
  std::iota(rows.begin(), rows.end(), int64_t{0});
  LossGrad out;
  out.grad.assign(static_cast<std::size_t>(model.dim()), 0.0);
  out.loss = LogisticLossGrad(model, w, data, rows, weight_decay, out.grad);
  return out;
}

std::vector<double> PerSampleLosses(const LogisticModel& model,
                                    std::span<const double> w,
                                    const Dataset& data) {
  CheckShapes(model, w, data);
  ConstWeights wm(w.data(), model.classes, model.features);
  RowMatrix logits = data.features * wm.transpose();
  std::vector<double> out(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int32_t y = CheckedLabel(model, data.labels[i]);
    const double m = logits.row(i).maxCoeff();
    const double lse =
        m + std::log((logits.row(i).array() - m).exp().sum());
    out[static_cast<std::size_t>(i)] = lse - logits(i, y);
  }
  return out;
}

LossAccuracy LogisticEvaluate(const LogisticModel& model,
                              std::span<const double> w, const Dataset& data) {
  CheckShapes(model, w, data);
  LossAccuracy out;
  if (data.size() == 0) return out;
  ConstWeights wm(w.data(), model.classes, model.features);
  RowMatrix logits = data.features * wm.transpose();
  int64_t hits = 0;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int32_t y = CheckedLabel(model, data.labels[i]);
    Eigen::Index arg = 0;
    const double m = logits.row(i).maxCoeff(&arg);
    loss += m + std::log((logits.row(i).array() - m).exp().sum()) -
            logits(i, y);
    if (arg == y) ++hits;
  }
  out.loss = loss / static_cast<double>(data.size());
  out.accuracy =
      static_cast<double>(hits) / static_cast<double>(data.size());
  return out;
}

QuadraticFamily QuadMake(int64_t n_clients, int64_t dim, double mu,
                         double beta, double hetero_g, uint64_t seed) {
  if (n_clients < 1 || dim < 1) {
    throw std::invalid_argument("QuadMake: n_clients and dim must be >= 1");
  }
  if (!(mu > 0.0 && mu <= beta)) {
    throw std::invalid_argument("QuadMake: need 0 < mu <= beta");
  }
  if (!(hetero_g >= 0.0)) {
    throw std::invalid_argument("QuadMake: hetero_g must be >= 0");
  }
  Rng rng(MixBits(seed));
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  auto gaussian_matrix = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = gauss(rng);
    return m;
  };

  QuadraticFamily fam;
  const auto d = static_cast<Eigen::Index>(dim);
  const double log_mu = std::log(mu), log_beta = std::log(beta);
  Eigen::VectorXd w_shared(d);
  for (Eigen::Index i = 0; i < d; ++i) w_shared(i) = gauss(rng);

  fam.a_mean = Eigen::MatrixXd::Zero(d, d);
  for (int64_t j = 0; j < n_clients; ++j) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(d, d));
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < d; ++k) {
      if (r(k, k) < 0) q.col(k) = -q.col(k);
    }
    Eigen::VectorXd spec(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      spec(k) = std::exp(log_mu + (log_beta - log_mu) * unif(rng));
    }
    // Pin the extremes so the family spans the requested range.
    spec(0) = mu;
    if (d > 1) spec(1) = beta;
    Eigen::MatrixXd a = q * spec.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose());
    fam.a_mean += a;
    fam.a.push_back(std::move(a));
  }
  fam.a_mean /= static_cast<double>(n_clients);

  Eigen::MatrixXd g = gaussian_matrix(d, n_clients);
  if (n_clients > 1) {
    const Eigen::VectorXd mean = g.rowwise().mean();
    g.colwise() -= mean;
  }
  const double rms =
      std::sqrt(g.squaredNorm() / static_cast<double>(n_clients));
  if (hetero_g == 0.0 || n_clients == 1 || rms == 0.0) {
    g.setZero();
  } else {
    g *= hetero_g / rms;
  }
  fam.b_mean = Eigen::VectorXd::Zero(d);
  for (int64_t j = 0; j < n_clients; ++j) {
    fam.b.push_back(fam.a[j] * w_shared + g.col(j));
    fam.b_mean += fam.b.back();
  }
  fam.b_mean /= static_cast<double>(n_clients);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fam.a_mean);
  fam.mu = eig.eigenvalues().minCoeff();
  fam.beta = eig.eigenvalues().maxCoeff();
  fam.w_star = fam.a_mean.ldlt().solve(fam.b_mean);
  fam.f_star = 0.5 * fam.w_star.dot(fam.a_mean * fam.w_star) -
               fam.b_mean.dot(fam.w_star);
  return fam;
}

QuadEvaluation QuadEval(const QuadraticFamily& family,
                        std::span<const double> w) {
  if (static_cast<int64_t>(w.size()) != family.dim()) {
    throw std::invalid_argument("QuadEval: dimension mismatch");
  }
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), family.dim());
  const Eigen::VectorXd aw = family.a_mean * wv;
  QuadEvaluation out;
  out.value = 0.5 * wv.dot(aw) - family.b_mean.dot(wv);
  const Eigen::VectorXd grad = aw - family.b_mean;
  out.grad.assign(grad.data(), grad.data() + grad.size());
  const Eigen::VectorXd e = wv - family.w_star;
  out.gap = 0.5 * e.dot(family.a_mean * e);
  return out;
}

void QuadClientGrad(const QuadraticFamily& family, int64_t client,
                    std::span<const double> w, std::span<double> grad) {
  if (client < 0 || client >= family.num_clients()) {
    throw std::invalid_argument("QuadClientGrad: client out of range");
  }
  if (static_cast<int64_t>(w.size()) != family.dim() ||
      grad.size() != w.size()) {
    throw std::invalid_argument("QuadClientGrad: dimension mismatch");
  }
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), family.dim());
  Eigen::Map<Eigen::VectorXd> gv(grad.data(), family.dim());
  gv.noalias() = family.a[client] * wv - family.b[client];
}

double QuadDissimilarity(const QuadraticFamily& family,
                         std::span<const double> w) {
  std::vector<double> g(w.size());
  double total = 0.0;
  for (int64_t j = 0; j < family.num_clients(); ++j) {
    QuadClientGrad(family, j, w, g);
    for (double x : g) total += x * x;
  }
  return total / static_cast<double>(family.num_clients());
}

double GradientVarianceAinv(const SmoothingOperator& op,
                            const std::vector<std::vector<double>>& batch_grads,
                            std::span<const double> full_grad) {
  if (batch_grads.empty()) {
    throw std::invalid_argument("GradientVarianceAinv: no batch gradients");
  }
  std::vector<double> diff(full_grad.size());
  double total = 0.0;
  for (const auto& g : batch_grads) {
    if (g.size() != full_grad.size()) {
      throw std::invalid_argument("GradientVarianceAinv: size mismatch");
    }
    for (std::size_t k = 0; k < g.size(); ++k) diff[k] = g[k] - full_grad[k];
    const std::vector<double> smoothed = op.Apply(diff);
    for (std::size_t k = 0; k < g.size(); ++k) total += diff[k] * smoothed[k];
  }
  return total / static_cast<double>(batch_grads.size());
}

}  // namespace fedsmooth
