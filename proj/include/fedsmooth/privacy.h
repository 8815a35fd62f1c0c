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

#ifndef FEDSMOOTH_PRIVACY_H_
#define FEDSMOOTH_PRIVACY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fedsmooth {

// Renyi-DP accounting for the subsampled Gaussian mechanism used by the
// federated engine: closed-form per-round bounds, numeric reference bounds,
// composition, conversion to (epsilon, delta)-DP, and noise calibration.
//
// Noise levels passed as `nu_over_sens` are in sensitivity units. For the
// engine's noisy sum of clipped client deltas the sensitivity is 2L under
// uniform subsampling (replace-one adjacency) and L under Poisson
// subsampling (add/remove-one adjacency); see SensitivityScale().

enum class Subsampling { kUniform, kPoisson };

std::string SubsamplingName(Subsampling kind);
// Accepts "uniform" and "poisson". Throws std::invalid_argument otherwise.
Subsampling ParseSubsampling(const std::string& name);

struct Mechanism {
  Subsampling kind = Subsampling::kUniform;
  double tau = 1.0;     // sampling ratio in (0, 1]
  double clip = 1.0;    // clipping radius L
  int64_t rounds = 1;   // number of compositions T

  // Throws std::invalid_argument when a field is out of range.
  void Validate() const;
};

struct NoiseCalibration {
  double nu = 0.0;
  double lambda_star = 0.0;
  double alpha = 0.0;
  bool feasible = false;
};

struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> rho;
};

inline constexpr int kDefaultLambdaGrid = 999;
inline constexpr double kMinBudgetEpsilon = 1e-6;
inline constexpr double kMaxBudgetEpsilon = 1e4;

// 2 for uniform subsampling, 1 for Poisson: the l2 sensitivity of the noisy
// sum is SensitivityScale(kind) * L.
double SensitivityScale(Subsampling kind);

// alpha / (2 (nu/Delta)^2). Throws std::invalid_argument if alpha <= 1.
double RdpGaussian(double alpha, double nu_over_sens);

// Side conditions of the closed-form subsampled bounds:
//   (nu/Delta)^2 >= 2/3 (uniform) or 5/9 (Poisson), and
//   alpha - 1 <= (2/3) (nu/Delta)^2 ln(1 / (alpha tau (1 + (nu/Delta)^2))).
bool ClosedFormConditionsHold(Subsampling kind, double alpha, double tau,
                              double nu_over_sens);

// 3.5 tau^2 alpha / (nu/Delta)^2 when the side conditions hold, nullopt
// otherwise. Real alpha is accepted. Throws on tau outside (0, 1] or
// alpha <= 1.
std::optional<double> RdpUniformClosed(double alpha, double tau,
                                       double nu_over_sens);
// 2 tau^2 alpha / (nu/Delta)^2 under the Poisson side conditions.
std::optional<double> RdpPoissonClosed(double alpha, double tau,
                                       double nu_over_sens);
std::optional<double> RdpClosed(Subsampling kind, double alpha, double tau,
                                double nu_over_sens);

// Numeric upper bounds for integer orders, evaluated in log space. Uniform:
//   1/(a-1) ln(1 + tau^2 C(a,2) min{4(e^{r(2)}-1), 2 e^{r(2)}}
//              + sum_{j=3}^{a} tau^j C(a,j) 2 e^{(j-1) r(j)}),
// Poisson:
//   1/(a-1) ln((a tau - tau + 1)(1-tau)^{a-1}
//              + sum_{j=2}^{a} C(a,j) (1-tau)^{a-j} tau^j e^{(j-1) r(j)}),
// with r(j) = j / (2 (nu/Delta)^2). Returns +infinity if the bound overflows.
// Throws std::invalid_argument if alpha < 2.
double RdpUniformNumeric(int64_t alpha, double tau, double nu_over_sens);
double RdpPoissonNumeric(int64_t alpha, double tau, double nu_over_sens);

// Homogeneous composition: rho scaled by k at every order.
RdpCurve Compose(const RdpCurve& curve, int64_t k);

// rho + ln(1/delta) / (alpha - 1).
double RdpToDp(double alpha, double rho, double delta);

// ln(1/delta) / ((1 - lambda) epsilon) + 1.
double OrderForLambda(double epsilon, double delta, double lambda);

// Noise lower bound at a single lambda:
//   nu = (tau L / epsilon) sqrt(c T / lambda (ln(1/delta)/(1-lambda) + epsilon))
// with c = 14 (uniform) or 2 (Poisson), plus the side-condition check at
// that nu and alpha = OrderForLambda(epsilon, delta, lambda).
NoiseCalibration NoiseForLambda(const Mechanism& mech, double epsilon,
                                double delta, double lambda);

// Scans lambda over `grid` equispaced interior points of (0, 1) and returns
// the smallest feasible nu (smallest lambda on ties). feasible == false when
// no lambda passes the side conditions; nu is then 0.
NoiseCalibration CalibrateNoise(const Mechanism& mech, double epsilon,
                                double delta, int grid = kDefaultLambdaGrid);

// Smallest epsilon in (kMinBudgetEpsilon, kMaxBudgetEpsilon) whose
// calibration requires at most `nu` and whose side conditions also hold at
// `nu` itself. nullopt when none exists.
std::optional<double> BudgetFromNoise(const Mechanism& mech, double nu,
                                      double delta,
                                      int grid = kDefaultLambdaGrid);

struct MaxRoundsResult {
  int64_t rounds = 0;
  double bound = 0.0;  // unfloored right-hand side
  double alpha = 0.0;
  bool feasible = false;
};

// Largest T for a fixed noise multiplier nu1 (nu = L nu1) under uniform
// subsampling:
//   T <= lambda eps^2 nu1^2 / (14 tau^2 (ln(1/delta)/(1-lambda) + eps)),
// valid when nu1 >= 8/3 and
//   alpha - 1 <= (nu1^2/6) ln(1/(tau alpha (1 + nu1^2/4))).
MaxRoundsResult MaxRounds(double nu1, double tau, double epsilon,
                          double delta, double lambda);

// Composes the closed-form per-round bound at `alpha` over mech.rounds and
// converts to epsilon. nullopt if the closed form is infeasible.
std::optional<double> EpsilonAfterRounds(const Mechanism& mech, double nu,
                                         double alpha, double delta);

// 1 / n^exponent.
double DefaultDelta(int64_t n_clients, double exponent = 1.1);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_PRIVACY_H_
