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

#ifndef FEDSMOOTH_EXPERIMENT_H_
#define FEDSMOOTH_EXPERIMENT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsmooth/data.h"
#include "fedsmooth/fedsim.h"
#include "fedsmooth/privacy.h"

namespace fedsmooth {

inline constexpr char kDataDirEnv[] = "FEDSMOOTH_DATA_DIR";
inline constexpr double kMnistPixelMean = 0.1307;
inline constexpr double kMnistPixelStd = 0.3081;

struct DataSection {
  std::string source = "mnist";  // mnist | synthetic | quadratic
  std::string dir;               // MNIST directory; empty = environment
  int64_t n_clients = 1000;
  int64_t per_client = 50;
  std::string partition = "iid";        // iid | label_sorted
  std::string normalize = "unit";  // unit | standardize (MNIST)
  // synthetic
  int64_t synth_train = 6000;
  int64_t synth_test = 1000;
  int64_t synth_dim = 20;
  int64_t synth_classes = 2;
  double synth_separation = 4.0;
  // quadratic
  int64_t quad_dim = 32;
  double quad_mu = 0.1;
  double quad_beta = 1.0;
  double quad_hetero = 0.0;
};

struct PrivacySection {
  std::optional<double> epsilon;
  std::optional<double> nu;
  std::optional<double> z;  // noise multiplier, nu = z * clip
  std::optional<double> delta;
  double delta_exponent = 1.1;
  int lambda_grid = kDefaultLambdaGrid;
  bool non_private = false;
};

struct OutputSection {
  std::string dir = "out";
  int64_t repeats = 1;
  std::vector<int64_t> spectrum_rounds;
  bool save_model = true;
};

// Experiment description read from a JSON document with the sections
// {data, fed, privacy, output}. FedConfig::nu and non_private are filled
// in from the privacy section.
struct ExperimentConfig {
  DataSection data;
  FedConfig fed;
  PrivacySection privacy;
  OutputSection output;

  // Throws std::invalid_argument on an inconsistent combination.
  void Validate() const;
};

// Throws std::invalid_argument on malformed documents, unknown keys or bad
// values.
ExperimentConfig ParseExperimentConfig(const std::string& json_text);
ExperimentConfig LoadExperimentConfig(const std::string& path);

// Sorted-key JSON with every field present; parse(Canonical(c)) == c.
std::string CanonicalJson(const ExperimentConfig& cfg);

// Applies "section.key=value" where value is JSON (bare words are taken as
// strings). Throws std::invalid_argument on unknown keys.
void ApplyOverride(ExperimentConfig& cfg, const std::string& assignment);

struct PrivacyResolution {
  double nu = 0.0;
  double epsilon = 0.0;  // NaN when no finite budget is certified
  double delta = 0.0;
  double lambda_star = 0.0;
  double alpha = 0.0;
  bool feasible = false;
  std::string mode;  // epsilon | nu | z | none
};

// Number of clients of the configured problem.
int64_t ConfiguredClients(const ExperimentConfig& cfg);

// Turns the privacy section into a noise level. An epsilon target goes
// through CalibrateNoise; nu or z are reported with BudgetFromNoise.
PrivacyResolution ResolvePrivacy(const ExperimentConfig& cfg);

// Data directory: cfg.data.dir, else $FEDSMOOTH_DATA_DIR, else data/mnist.
std::string ResolveDataDir(const ExperimentConfig& cfg);

struct LoadedData {
  Dataset train;  // full training pool (MNIST: 60K)
  Dataset test;
};

// MNIST or synthetic data, normalised per cfg.data.normalize.
LoadedData LoadData(const ExperimentConfig& cfg);

// Builds the federated problem for one repeat. For classification data the
// first n_clients * per_client permuted rows go to clients and the rest
// becomes the validation set. `partition` (optional) receives the row
// indices of the split; its shards are left empty.
std::unique_ptr<FedProblem> BuildProblem(const ExperimentConfig& cfg,
                                         const LoadedData& data,
                                         uint64_t seed,
                                         Partition* partition = nullptr);

struct RepeatResult {
  uint64_t seed = 0;
  RunResult run;
  double test_loss = 0.0;
  double test_acc = 0.0;
};

// Raised when an epsilon target admits no feasible noise level.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentResult {
  PrivacyResolution privacy;
  std::vector<RepeatResult> repeats;
  bool diverged = false;
  std::string summary_json;
};

// Runs cfg.output.repeats independent runs with seeds fed.seed + r. When
// `write_outputs` is set, writes metrics_<r>.csv, model_<r>.bin,
// spectrum_<r>_round<t>.csv, config.json and summary.json to output.dir.
ExperimentResult RunExperiment(const ExperimentConfig& cfg,
                               bool write_outputs = true);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_EXPERIMENT_H_
