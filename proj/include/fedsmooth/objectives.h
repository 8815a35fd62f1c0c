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

#ifndef FEDSMOOTH_OBJECTIVES_H_
#define FEDSMOOTH_OBJECTIVES_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fedsmooth/lapsmooth.h"
#include "fedsmooth/types.h"

namespace fedsmooth {

// Multiclass logistic regression without bias terms. The weight vector is
// the (classes x features) matrix flattened row-major, so entry
// c * features + f multiplies feature f in the logit of class c.
struct LogisticModel {
  int64_t classes = 10;
  int64_t features = 784;

  int64_t dim() const { return classes * features; }
  // Zero weights.
  std::vector<double> Init() const;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean softmax cross-entropy over `rows` of `data`, plus
// (weight_decay / 2) ||w||^2. Writes the gradient to `grad` (size dim()).
// Throws std::invalid_argument on a shape mismatch or out-of-range label.
double LogisticLossGrad(const LogisticModel& model, std::span<const double> w,
                        const Dataset& data, std::span<const int64_t> rows,
                        double weight_decay, std::span<double> grad);

// Full-batch variant.
LossGrad LogisticGrad(const LogisticModel& model, std::span<const double> w,
                      const Dataset& data, double weight_decay);

// Cross-entropy of each sample, no weight decay.
std::vector<double> PerSampleLosses(const LogisticModel& model,
                                    std::span<const double> w,
                                    const Dataset& data);

struct LossAccuracy {
  double loss = 0.0;      // mean cross-entropy, no weight decay
  double accuracy = 0.0;  // fraction of argmax hits
};

LossAccuracy LogisticEvaluate(const LogisticModel& model,
                              std::span<const double> w, const Dataset& data);

// Heterogeneous quadratics f_j(w) = 1/2 w^T A_j w - b_j^T w with mean f.
struct QuadraticFamily {
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::VectorXd> b;
  Eigen::MatrixXd a_mean;
  Eigen::VectorXd b_mean;
  Eigen::VectorXd w_star;
  double mu = 0.0;    // smallest eigenvalue of a_mean
  double beta = 0.0;  // largest eigenvalue of a_mean
  double f_star = 0.0;

  int64_t num_clients() const { return static_cast<int64_t>(a.size()); }
  int64_t dim() const { return w_star.size(); }
};

// Each A_j has eigenvalues drawn log-uniformly from [mu, beta] and a Haar
// random eigenbasis. b_j = A_j w_shared + g_j, where the g_j sum to zero and
// have root-mean-square norm hetero_g. Throws std::invalid_argument unless
// 0 < mu <= beta, n_clients >= 1 and dim >= 1.
QuadraticFamily QuadMake(int64_t n_clients, int64_t dim, double mu,
                         double beta, double hetero_g, uint64_t seed);

struct QuadEvaluation {
  double value = 0.0;
  std::vector<double> grad;
  double gap = 0.0;  // f(w) - f(w*), evaluated as 1/2 (w-w*)^T A (w-w*)
};

QuadEvaluation QuadEval(const QuadraticFamily& family,
                        std::span<const double> w);

// Gradient of client j's quadratic at w, written to `grad`.
void QuadClientGrad(const QuadraticFamily& family, int64_t client,
                    std::span<const double> w, std::span<double> grad);

// (1/N) sum_j ||grad f_j(w)||^2.
double QuadDissimilarity(const QuadraticFamily& family,
                         std::span<const double> w);

// Mean of ||g_b - g||^2 measured in the A^{-1} norm, x^T A^{-1} x, over the
// mini-batch gradients g_b. Sigma = 0 gives the plain squared l2 spread.
double GradientVarianceAinv(const SmoothingOperator& op,
                            const std::vector<std::vector<double>>& batch_grads,
                            std::span<const double> full_grad);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_OBJECTIVES_H_
