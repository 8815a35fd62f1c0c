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

#include "fedsmooth/privacy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedsmooth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Terms more than this far below the running maximum (in log space) are
// below 1e-300 relative and are dropped.
constexpr double kLogDropThreshold = 690.0;

double LogBinomial(int64_t n, int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// ln(sum_i exp(t_i)) with extra precision when the sum is 1 + small, which
// is the common case for these bounds.
double LogSumExp(const std::vector<double>& terms) {
  double max_term = -kInf;
  for (double t : terms) max_term = std::max(max_term, t);
  if (max_term == -kInf) return -kInf;
  if (max_term == kInf) return kInf;
  double sum = 0.0;
  for (double t : terms) {
    if (t < max_term - kLogDropThreshold) continue;
    sum += std::exp(t - max_term);
  }
  return max_term + std::log(sum);
}

// ln(1 + sum_i exp(t_i)).
double Log1pSumExp(const std::vector<double>& terms) {
  double max_term = 0.0;
  for (double t : terms) max_term = std::max(max_term, t);
  if (max_term == kInf) return kInf;
  if (max_term == 0.0) {
    double sum = 0.0;
    for (double t : terms) {
      if (t < -kLogDropThreshold) continue;
      sum += std::exp(t);
    }
    return std::log1p(sum);
  }
  std::vector<double> all(terms);
  all.push_back(0.0);
  return LogSumExp(all);
}

void CheckTau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("sampling ratio tau must lie in (0, 1]");
  }
}

void CheckAlpha(double alpha) {
  if (!(alpha > 1.0)) {
    throw std::invalid_argument("Renyi order alpha must exceed 1");
  }
}

void CheckDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
}

double NoiseConstant(Subsampling kind) {
  return kind == Subsampling::kUniform ? 14.0 : 2.0;
}

double ClosedFormConstant(Subsampling kind) {
  return kind == Subsampling::kUniform ? 3.5 : 2.0;
}

}  // namespace

std::string SubsamplingName(Subsampling kind) {
  return kind == Subsampling::kUniform ? "uniform" : "poisson";
}

Subsampling ParseSubsampling(const std::string& name) {
  if (name == "uniform") return Subsampling::kUniform;
  if (name == "poisson") return Subsampling::kPoisson;
  throw std::invalid_argument("unknown subsampling '" + name +
                              "' (expected uniform or poisson)");
}

void Mechanism::Validate() const {
  CheckTau(tau);
  if (!(clip > 0.0) || !std::isfinite(clip)) {
    throw std::invalid_argument("clip must be positive and finite");
  }
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
}

double SensitivityScale(Subsampling kind) {
  return kind == Subsampling::kUniform ? 2.0 : 1.0;
}

double RdpGaussian(double alpha, double nu_over_sens) {
  CheckAlpha(alpha);
  return alpha / (2.0 * nu_over_sens * nu_over_sens);
}

bool ClosedFormConditionsHold(Subsampling kind, double alpha, double tau,
                              double nu_over_sens) {
  const double x = nu_over_sens * nu_over_sens;
  const double floor = kind == Subsampling::kUniform ? 2.0 / 3.0 : 5.0 / 9.0;
  if (!(x >= floor)) return false;
  const double arg = alpha * tau * (1.0 + x);
  if (!(arg < 1.0)) return false;
  return alpha - 1.0 <= (2.0 / 3.0) * x * std::log(1.0 / arg);
}

std::optional<double> RdpClosed(Subsampling kind, double alpha, double tau,
                                double nu_over_sens) {
  CheckAlpha(alpha);
  CheckTau(tau);
  if (!ClosedFormConditionsHold(kind, alpha, tau, nu_over_sens)) {
    return std::nullopt;
  }
  return ClosedFormConstant(kind) * tau * tau * alpha /
         (nu_over_sens * nu_over_sens);
}

std::optional<double> RdpUniformClosed(double alpha, double tau,
                                       double nu_over_sens) {
  return RdpClosed(Subsampling::kUniform, alpha, tau, nu_over_sens);
}

std::optional<double> RdpPoissonClosed(double alpha, double tau,
                                       double nu_over_sens) {
  return RdpClosed(Subsampling::kPoisson, alpha, tau, nu_over_sens);
}

double RdpUniformNumeric(int64_t alpha, double tau, double nu_over_sens) {
  if (alpha < 2) throw std::invalid_argument("numeric bound needs alpha >= 2");
  CheckTau(tau);
  const double inv_var = 1.0 / (nu_over_sens * nu_over_sens);
  const double log_tau = std::log(tau);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(alpha));
  // min{4(e^{r(2)} - 1), 2 e^{r(2)}} with r(2) = 1/nu^2.
  const double log_a = std::log(4.0) + std::log(std::expm1(inv_var));
  const double log_b = std::log(2.0) + inv_var;
  terms.push_back(2.0 * log_tau + LogBinomial(alpha, 2) +
                  std::min(log_a, log_b));
  for (int64_t j = 3; j <= alpha; ++j) {
    const double jd = static_cast<double>(j);
    terms.push_back(jd * log_tau + LogBinomial(alpha, j) + std::log(2.0) +
                    (jd - 1.0) * jd * 0.5 * inv_var);
  }
  const double value = Log1pSumExp(terms) / static_cast<double>(alpha - 1);
  return std::isfinite(value) ? value : kInf;
}

double RdpPoissonNumeric(int64_t alpha, double tau, double nu_over_sens) {
  if (alpha < 2) throw std::invalid_argument("numeric bound needs alpha >= 2");
  CheckTau(tau);
  const double inv_var = 1.0 / (nu_over_sens * nu_over_sens);
  const double log_tau = std::log(tau);
  const double log_keep = std::log1p(-tau);  // -inf when tau == 1
  const double a = static_cast<double>(alpha);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(alpha));
  terms.push_back(std::log(a * tau - tau + 1.0) + (a - 1.0) * log_keep);
  for (int64_t j = 2; j <= alpha; ++j) {
    const double jd = static_cast<double>(j);
    double t = LogBinomial(alpha, j) + jd * log_tau +
               (jd - 1.0) * jd * 0.5 * inv_var;
    if (j < alpha) t += (a - jd) * log_keep;
    terms.push_back(t);
  }
  const double value = LogSumExp(terms) / (a - 1.0);
  return std::isfinite(value) || value < 0 ? value : kInf;
}

RdpCurve Compose(const RdpCurve& curve, int64_t k) {
  if (k < 1) throw std::invalid_argument("Compose: k must be >= 1");
  if (curve.orders.size() != curve.rho.size()) {
    throw std::invalid_argument("Compose: orders and rho differ in length");
  }
  RdpCurve out = curve;
  for (double& r : out.rho) r *= static_cast<double>(k);
  return out;
}

double RdpToDp(double alpha, double rho, double delta) {
  CheckAlpha(alpha);
  CheckDelta(delta);
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  return rho + std::log(1.0 / delta) / (alpha - 1.0);
}

double OrderForLambda(double epsilon, double delta, double lambda) {
  return std::log(1.0 / delta) / ((1.0 - lambda) * epsilon) + 1.0;
}

NoiseCalibration NoiseForLambda(const Mechanism& mech, double epsilon,
                                double delta, double lambda) {
  mech.Validate();
  CheckDelta(delta);
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("lambda must lie in (0, 1)");
  }
  const double log_inv_delta = std::log(1.0 / delta);
  const double t = static_cast<double>(mech.rounds);
  NoiseCalibration cal;
  cal.lambda_star = lambda;
  cal.alpha = OrderForLambda(epsilon, delta, lambda);
  cal.nu = mech.tau * mech.clip / epsilon *
           std::sqrt(NoiseConstant(mech.kind) * t / lambda *
                     (log_inv_delta / (1.0 - lambda) + epsilon));
  const double nu_over_sens =
      cal.nu / (SensitivityScale(mech.kind) * mech.clip);
  cal.feasible =
      ClosedFormConditionsHold(mech.kind, cal.alpha, mech.tau, nu_over_sens);
  return cal;
}

NoiseCalibration CalibrateNoise(const Mechanism& mech, double epsilon,
                                double delta, int grid) {
  if (grid < 2) throw std::invalid_argument("lambda grid must have >= 2 points");
  NoiseCalibration best;
  for (int k = 1; k <= grid; ++k) {
    const double lambda = static_cast<double>(k) / static_cast<double>(grid + 1);
    const NoiseCalibration cand = NoiseForLambda(mech, epsilon, delta, lambda);
    if (!cand.feasible) continue;
    if (!best.feasible || cand.nu < best.nu) best = cand;
  }
  if (!best.feasible) best = NoiseCalibration{};
  return best;
}

std::optional<double> BudgetFromNoise(const Mechanism& mech, double nu,
                                      double delta, int grid) {
  mech.Validate();
  CheckDelta(delta);
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  const double nu_over_sens = nu / (SensitivityScale(mech.kind) * mech.clip);
  auto certified = [&](double eps) {
    const NoiseCalibration cal = CalibrateNoise(mech, eps, delta, grid);
    return cal.feasible && cal.nu <= nu &&
           ClosedFormConditionsHold(mech.kind, cal.alpha, mech.tau,
                                    nu_over_sens);
  };
  // Calibrated noise falls with epsilon until it reaches the side-condition
  // floor, where it plateaus and wobbles, so bracket the first certified
  // epsilon on a fine log grid before bisecting.
  constexpr int kScanPoints = 4000;
  const double log_lo = std::log(kMinBudgetEpsilon);
  const double log_hi = std::log(kMaxBudgetEpsilon);
  double prev = kMinBudgetEpsilon;
  if (certified(prev)) return prev;
  for (int i = 1; i <= kScanPoints; ++i) {
    const double eps = std::exp(log_lo + (log_hi - log_lo) * i /
                                         static_cast<double>(kScanPoints));
    if (!certified(eps)) {
      prev = eps;
      continue;
    }
    double lo = prev, hi = eps;
    while (hi - lo > 1e-9 * hi) {
      const double mid = 0.5 * (lo + hi);
      if (certified(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  }
  return std::nullopt;
}

MaxRoundsResult MaxRounds(double nu1, double tau, double epsilon, double delta,
                          double lambda) {
  CheckTau(tau);
  CheckDelta(delta);
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("lambda must lie in (0, 1)");
  }
  if (!(nu1 > 0.0)) throw std::invalid_argument("nu1 must be positive");
  MaxRoundsResult res;
  res.alpha = OrderForLambda(epsilon, delta, lambda);
  res.bound = lambda * epsilon * epsilon * nu1 * nu1 /
              (14.0 * tau * tau *
               (std::log(1.0 / delta) / (1.0 - lambda) + epsilon));
  const double x = nu1 * nu1 / 4.0;
  const double arg = tau * res.alpha * (1.0 + x);
  res.feasible = nu1 >= 8.0 / 3.0 && arg < 1.0 &&
                 res.alpha - 1.0 <= (nu1 * nu1 / 6.0) * std::log(1.0 / arg);
  res.rounds = res.feasible ? static_cast<int64_t>(std::floor(res.bound)) : 0;
  return res;
}

std::optional<double> EpsilonAfterRounds(const Mechanism& mech, double nu,
                                         double alpha, double delta) {
  mech.Validate();
  const double nu_over_sens = nu / (SensitivityScale(mech.kind) * mech.clip);
  const std::optional<double> per_round =
      RdpClosed(mech.kind, alpha, mech.tau, nu_over_sens);
  if (!per_round) return std::nullopt;
  const RdpCurve composed =
      Compose(RdpCurve{{alpha}, {*per_round}}, mech.rounds);
  return RdpToDp(alpha, composed.rho[0], delta);
}

double DefaultDelta(int64_t n_clients, double exponent) {
  if (n_clients < 1) throw std::invalid_argument("n_clients must be >= 1");
  return std::pow(static_cast<double>(n_clients), -exponent);
}

}  // namespace fedsmooth
