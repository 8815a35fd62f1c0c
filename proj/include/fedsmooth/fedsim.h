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

#ifndef FEDSMOOTH_FEDSIM_H_
#define FEDSMOOTH_FEDSIM_H_

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedsmooth/data.h"
#include "fedsmooth/denoise.h"
#include "fedsmooth/lapsmooth.h"
#include "fedsmooth/objectives.h"
#include "fedsmooth/privacy.h"
#include "fedsmooth/rng.h"

namespace fedsmooth {

enum class Averaging { kLast, kUniform, kGeometric };

std::string AveragingName(Averaging a);
Averaging ParseAveraging(const std::string& name);

// Coordinate order used when the parameter vector is flattened for
// smoothing. kNative uses the storage order; kTransposed walks a
// (rows x cols) parameter matrix column by column.
enum class FlattenOrder { kNative, kTransposed };

std::string FlattenOrderName(FlattenOrder f);
FlattenOrder ParseFlattenOrder(const std::string& name);

struct FedConfig {
  double tau = 1.0;
  Subsampling subsampling = Subsampling::kUniform;
  int64_t rounds = 1;
  // Local work per round: local_steps when positive, otherwise
  // local_epochs * ceil(shard_size / batch_size) steps.
  int64_t local_epochs = 1;
  int64_t local_steps = 0;
  int64_t batch_size = 10;
  double eta_l = 0.1;
  double eta_g = 1.0;
  double lr_decay = 1.0;
  double clip = 1.0;
  DenoiserKind denoiser = LaplacianSmoothingDenoiser{0.0};
  double nu = 0.0;
  bool non_private = false;  // required for nu == 0
  double weight_decay = 0.0;
  uint64_t seed = 0;
  Averaging averaging = Averaging::kLast;
  double geometric_mu = 0.0;  // strong-convexity constant for kGeometric
  FlattenOrder flatten_order = FlattenOrder::kNative;
  int threads = 1;
  // 1-based rounds at which the pre-noise federated average is recorded.
  std::vector<int64_t> spectrum_rounds;

  // Throws std::invalid_argument on out-of-range fields.
  void Validate() const;
  // sigma of the Laplacian-smoothing denoiser, 0 for the others.
  double sigma() const;
};

// Thrown when a client produces a non-finite gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The optimisation problem seen by the engine.
class FedProblem {
 public:
  virtual ~FedProblem() = default;

  virtual int64_t dim() const = 0;
  virtual int64_t num_clients() const = 0;
  virtual int64_t client_size(int64_t client) const = 0;
  virtual std::vector<double> Init() const = 0;
  // Mini-batch loss over `rows` (indices into the client's own samples);
  // writes the gradient, weight decay included, to `grad`.
  virtual double ClientLossGrad(int64_t client, std::span<const double> w,
                                std::span<const int64_t> rows,
                                double weight_decay,
                                std::span<double> grad) const = 0;

  struct Evaluation {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double grad_norm = 0.0;
  };
  virtual Evaluation Evaluate(std::span<const double> w) const = 0;

  // Parameter matrix shape used by FlattenOrder::kTransposed.
  virtual std::pair<int64_t, int64_t> shape() const { return {1, dim()}; }
};

// Logistic regression over client shards. Training metrics cover the union
// of shards, validation metrics the held-out set.
class LogisticProblem : public FedProblem {
 public:
  LogisticProblem(LogisticModel model, std::vector<ClientShard> shards,
                  Dataset validation);

  int64_t dim() const override { return model_.dim(); }
  int64_t num_clients() const override {
    return static_cast<int64_t>(shards_.size());
  }
  int64_t client_size(int64_t client) const override;
  std::vector<double> Init() const override { return model_.Init(); }
  double ClientLossGrad(int64_t client, std::span<const double> w,
                        std::span<const int64_t> rows, double weight_decay,
                        std::span<double> grad) const override;
  Evaluation Evaluate(std::span<const double> w) const override;
  std::pair<int64_t, int64_t> shape() const override {
    return {model_.classes, model_.features};
  }

  const LogisticModel& model() const { return model_; }
  const std::vector<ClientShard>& shards() const { return shards_; }
  const Dataset& validation() const { return validation_; }

 private:
  LogisticModel model_;
  std::vector<ClientShard> shards_;
  Dataset validation_;
};

// Client j holds the exact quadratic f_j; every step uses the full gradient.
// Reports f(w) as train_loss and the gap f(w) - f(w*) as val_loss;
// accuracies are NaN.
class QuadraticProblem : public FedProblem {
 public:
  explicit QuadraticProblem(QuadraticFamily family, std::vector<double> init);

  int64_t dim() const override { return family_.dim(); }
  int64_t num_clients() const override { return family_.num_clients(); }
  int64_t client_size(int64_t) const override { return 1; }
  std::vector<double> Init() const override { return init_; }
  double ClientLossGrad(int64_t client, std::span<const double> w,
                        std::span<const int64_t> rows, double weight_decay,
                        std::span<double> grad) const override;
  Evaluation Evaluate(std::span<const double> w) const override;

  const QuadraticFamily& family() const { return family_; }

 private:
  QuadraticFamily family_;
  std::vector<double> init_;
};

// v / max(1, ||v|| / L).
std::vector<double> Clip(std::span<const double> v, double clip);
void ClipInPlace(std::span<double> v, double clip);

// Number of clients drawn per round under uniform subsampling:
// max(1, round(tau * N)).
int64_t UniformSelectionSize(double tau, int64_t n_clients);

// Sorted client indices for one round. Uniform: exactly
// UniformSelectionSize distinct indices; Poisson: independent inclusion
// with probability tau (possibly empty).
std::vector<int64_t> SelectClients(const FedConfig& cfg, int64_t n_clients,
                                   Rng& rng);

// Local clipped SGD from w_global; returns w_final - w_global.
std::vector<double> ClientUpdate(const FedProblem& problem, int64_t client,
                                  std::span<const double> w_global,
                                  const FedConfig& cfg, double lr, Rng& rng);

// (eta_g / K) * denoise(sum_j deltas_j + N(0, nu^2 I)), summing in the
// given order. `op` must match the delta length when the denoiser is
// Laplacian smoothing.
std::vector<double> Aggregate(const std::vector<std::vector<double>>& deltas,
                              const FedConfig& cfg,
                              const SmoothingOperator& op, Rng& rng);

struct RoundMetrics {
  int64_t round = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double grad_norm = 0.0;
  int64_t k_selected = 0;
};

struct SpectrumSnapshot {
  int64_t round = 0;
  SpectrumDump dump;
};

struct RunMetrics {
  std::vector<RoundMetrics> rounds;
  std::vector<SpectrumSnapshot> spectra;
  bool diverged = false;
  std::string abort_reason;

  // "round,train_loss,val_loss,train_acc,val_acc,grad_norm,k_selected".
  std::string ToCsv() const;
};

struct RunResult {
  std::vector<double> w_out;   // averaged output
  std::vector<double> w_last;  // final iterate
  RunMetrics metrics;
};

using RoundObserver =
    std::function<void(const RoundMetrics&, std::span<const double> w)>;

// Runs cfg.rounds rounds of private federated training. Divergence (a
// non-finite gradient, or a training loss that is NaN or above 1e12) stops
// the run early with metrics.diverged set.
RunResult Run(const FedConfig& cfg, const FedProblem& problem,
              const RoundObserver& observer = nullptr);

// Variance of the mean of a uniformly drawn subset of size s:
//   (1/s) (1 - (s-1)/(N-1)) (1/N) sum_j ||x_j - x_bar||^2.
double SubsampledMeanVariance(const std::vector<std::vector<double>>& xs,
                              int64_t s);

// Model file: little-endian uint64 length, then little-endian doubles.
void WriteModel(const std::string& path, std::span<const double> w);
std::vector<double> ReadModel(const std::string& path);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_FEDSIM_H_
