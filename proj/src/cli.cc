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

#include "fedsmooth/cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedsmooth/attack.h"
#include "fedsmooth/data.h"
#include "fedsmooth/experiment.h"
#include "fedsmooth/fedsim.h"
#include "fedsmooth/lapsmooth.h"
#include "fedsmooth/privacy.h"

namespace fedsmooth {
namespace {

using json = nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json NumberOrNull(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

struct AccountantArgs {
  std::string mech = "uniform";
  std::optional<double> eps, nu, nu1, delta, lambda;
  double delta_exp = 1.1;
  std::optional<int64_t> n;
  double tau = 1.0;
  int64_t rounds = 1;
  double clip = 1.0;
  int grid = kDefaultLambdaGrid;
};

double ResolveDelta(const AccountantArgs& a) {
  if (a.delta) return *a.delta;
  if (!a.n) throw UsageError("either --delta or --n is required");
  return DefaultDelta(*a.n, a.delta_exp);
}

Mechanism MechanismFrom(const AccountantArgs& a) {
  Mechanism m;
  m.kind = ParseSubsampling(a.mech);
  m.tau = a.tau;
  m.clip = a.clip;
  m.rounds = a.rounds;
  m.Validate();
  return m;
}

json Record(const Mechanism& m, double eps, double delta, double nu,
            double lambda_star, double alpha, bool feasible) {
  return json{{"mechanism", SubsamplingName(m.kind)},
              {"epsilon", NumberOrNull(eps)},
              {"delta", delta},
              {"tau", m.tau},
              {"T", m.rounds},
              {"clip", m.clip},
              {"nu", NumberOrNull(nu)},
              {"lambda_star", NumberOrNull(lambda_star)},
              {"alpha", NumberOrNull(alpha)},
              {"feasible", feasible}};
}

int Calibrate(const AccountantArgs& a, std::ostream& out) {
  if (!a.eps) throw UsageError("calibrate needs --eps");
  const Mechanism m = MechanismFrom(a);
  const double delta = ResolveDelta(a);
  const NoiseCalibration cal = CalibrateNoise(m, *a.eps, delta, a.grid);
  json rec = Record(m, *a.eps, delta, cal.feasible ? cal.nu : NAN,
                    cal.feasible ? cal.lambda_star : NAN,
                    cal.feasible ? cal.alpha : NAN, cal.feasible);
  if (!cal.feasible) {
    rec["reason"] = "no lambda on the grid satisfies the side conditions";
  }
  out << rec.dump() << "\n";
  return cal.feasible ? kExitOk : kExitInfeasible;
}

int Budget(const AccountantArgs& a, std::ostream& out) {
  if (!a.nu) throw UsageError("budget needs --nu");
  const Mechanism m = MechanismFrom(a);
  const double delta = ResolveDelta(a);
  const std::optional<double> eps = BudgetFromNoise(m, *a.nu, delta, a.grid);
  double lambda_star = NAN, alpha = NAN;
  if (eps) {
    const NoiseCalibration cal = CalibrateNoise(m, *eps, delta, a.grid);
    lambda_star = cal.lambda_star;
    alpha = cal.alpha;
  }
  json rec = Record(m, eps ? *eps : NAN, delta, *a.nu, lambda_star, alpha,
                    eps.has_value());
  if (!eps) {
    rec["reason"] = "no epsilon in the search interval is certified by "
                    "this noise level";
  }
  out << rec.dump() << "\n";
  return eps ? kExitOk : kExitInfeasible;
}

int MaxRoundsCmd(const AccountantArgs& a, std::ostream& out) {
  if (!a.nu1) throw UsageError("max-rounds needs --nu1");
  if (!a.eps) throw UsageError("max-rounds needs --eps");
  if (ParseSubsampling(a.mech) != Subsampling::kUniform) {
    throw UsageError("max-rounds supports --mech uniform only");
  }
  const double delta = ResolveDelta(a);
  const double lambda = a.lambda.value_or(0.5);
  const MaxRoundsResult r = MaxRounds(*a.nu1, a.tau, *a.eps, delta, lambda);
  Mechanism m;
  m.kind = Subsampling::kUniform;
  m.tau = a.tau;
  m.clip = a.clip;
  m.rounds = r.rounds;
  json rec = Record(m, *a.eps, delta, *a.nu1 * a.clip, lambda, r.alpha,
                    r.feasible);
  rec["nu1"] = *a.nu1;
  rec["bound"] = r.bound;
  if (!r.feasible) {
    rec["reason"] = *a.nu1 < 8.0 / 3.0
                        ? "nu1 below 8/3"
                        : "the Renyi-order condition fails at this lambda";
  }
  out << rec.dump() << "\n";
  return r.feasible ? kExitOk : kExitInfeasible;
}

void AddAccountantOptions(CLI::App* app, AccountantArgs& a) {
  app->add_option("--mech", a.mech, "uniform or poisson")
      ->check(CLI::IsMember({"uniform", "poisson"}));
  app->add_option("--eps", a.eps, "target epsilon");
  app->add_option("--nu", a.nu, "noise standard deviation");
  app->add_option("--nu1", a.nu1, "noise multiplier for max-rounds");
  app->add_option("--delta", a.delta, "target delta");
  app->add_option("--delta-exp", a.delta_exp,
                  "delta = 1 / n^exp when --delta is absent");
  app->add_option("--n", a.n, "number of clients");
  app->add_option("--tau", a.tau, "sampling ratio");
  app->add_option("--rounds", a.rounds, "number of rounds T");
  app->add_option("--clip", a.clip, "clipping radius L");
  app->add_option("--grid", a.grid, "number of lambda grid points");
  app->add_option("--lambda", a.lambda, "lambda for max-rounds");
}

struct RunArgs {
  std::string config;
  std::string out_dir;
  std::string data_dir;
  std::vector<std::string> overrides;
  std::optional<int64_t> repeats;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
};

int RunCmd(const RunArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = LoadExperimentConfig(a.config);
    for (const auto& o : a.overrides) ApplyOverride(cfg, o);
    if (!a.out_dir.empty()) cfg.output.dir = a.out_dir;
    if (!a.data_dir.empty()) cfg.data.dir = a.data_dir;
    if (a.repeats) cfg.output.repeats = *a.repeats;
    if (a.seed) cfg.fed.seed = *a.seed;
    if (a.threads) cfg.fed.threads = *a.threads;
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  ExperimentResult res;
  try {
    res = RunExperiment(cfg, true);
  } catch (const InfeasibleError& e) {
    out << json{{"feasible", false}, {"reason", e.what()}}.dump() << "\n";
    return kExitInfeasible;
  }
  out << res.summary_json;
  if (res.diverged) {
    err << "run diverged; partial artifacts kept in " << cfg.output.dir
        << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}

struct AttackArgs {
  std::string model;
  std::string member_images, member_labels, nonmember_images,
      nonmember_labels;
  std::string normalize = "unit";
  std::string config;
  int64_t repeat = 0;
  int64_t max_samples = 0;
  std::optional<int64_t> classes;
  std::string roc;
};

Dataset Truncate(Dataset d, int64_t max_samples) {
  if (max_samples <= 0 || d.size() <= max_samples) return d;
  std::vector<int64_t> rows(static_cast<std::size_t>(max_samples));
  for (int64_t i = 0; i < max_samples; ++i) rows[i] = i;
  return Subset(d, rows);
}

int AttackCmd(const AttackArgs& a, std::ostream& out) {
  const std::vector<double> w = ReadModel(a.model);
  Dataset members, nonmembers;
  if (!a.config.empty()) {
    ExperimentConfig cfg;
    try {
      cfg = LoadExperimentConfig(a.config);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (cfg.data.source == "quadratic") {
      throw UsageError("attack needs a classification data source");
    }
    const LoadedData data = LoadData(cfg);
    Partition p;
    BuildProblem(cfg, data, cfg.fed.seed + static_cast<uint64_t>(a.repeat), &p);
    std::vector<int64_t> member_rows;
    for (const auto& rows : p.shard_rows) {
      member_rows.insert(member_rows.end(), rows.begin(), rows.end());
    }
    members = Subset(data.train, member_rows);
    nonmembers = Subset(data.train, p.leftover_rows);
  } else {
    if (a.member_images.empty() || a.member_labels.empty() ||
        a.nonmember_images.empty() || a.nonmember_labels.empty()) {
      throw UsageError(
          "attack needs --config or all four --member-*/--nonmember-* files");
    }
    members = LoadIdx(a.member_images, a.member_labels);
    nonmembers = LoadIdx(a.nonmember_images, a.nonmember_labels);
    if (a.normalize == "standardize") {
      Standardize(members, kMnistPixelMean, kMnistPixelStd);
      Standardize(nonmembers, kMnistPixelMean, kMnistPixelStd);
    }
  }
  members = Truncate(std::move(members), a.max_samples);
  nonmembers = Truncate(std::move(nonmembers), a.max_samples);
  if (members.num_features() != nonmembers.num_features()) {
    throw UsageError("member and non-member feature counts differ");
  }
  LogisticModel model;
  model.features = members.num_features();
  if (model.features == 0 || w.size() % model.features != 0) {
    throw UsageError("model size " + std::to_string(w.size()) +
                     " is not a multiple of the feature count " +
                     std::to_string(model.features));
  }
  model.classes = a.classes.value_or(
      static_cast<int64_t>(w.size()) / model.features);
  if (model.dim() != static_cast<int64_t>(w.size())) {
    throw UsageError("model size does not match --classes x features");
  }
  for (const Dataset* d : {&members, &nonmembers}) {
    for (int32_t y : d->labels) {
      if (y < 0 || y >= model.classes) {
        throw UsageError("label outside the model's class range");
      }
    }
  }
  RocCurve roc;
  const AttackReport rep = RunThresholdAttack(
      model, w, members, nonmembers, a.roc.empty() ? nullptr : &roc);
  if (!a.roc.empty()) {
    std::ofstream f(a.roc);
    if (!f) throw std::runtime_error("cannot write " + a.roc);
    f << roc.ToCsv();
  }
  out << json{{"auc", rep.auc},
              {"n_members", rep.n_members},
              {"n_nonmembers", rep.n_nonmembers}}
             .dump()
      << "\n";
  return kExitOk;
}

struct SpectrumArgs {
  std::string model;
  std::string out;
};

int SpectrumCmd(const SpectrumArgs& a, std::ostream& out) {
  const std::vector<double> v = ReadModel(a.model);
  if (v.size() < 2) throw UsageError("spectrum needs a vector of length >= 2");
  const SpectrumDump dump = Spectrum(v);
  if (a.out.empty()) {
    out << dump.ToCsv();
    return kExitOk;
  }
  std::ofstream f(a.out);
  if (!f) throw std::runtime_error("cannot write " + a.out);
  f << dump.ToCsv();
  out << json{{"dim", v.size()},
              {"frequencies", dump.frequencies.size()},
              {"loglog_slope", NumberOrNull(LogLogSlope(dump))},
              {"out", a.out}}
             .dump()
      << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Differentially private federated learning with Laplacian "
               "smoothing",
               "fedsmooth"};
  app.require_subcommand(1);

  AccountantArgs acc;
  CLI::App* accountant =
      app.add_subcommand("accountant", "privacy accounting queries");
  AddAccountantOptions(accountant, acc);
  accountant->require_subcommand(0, 1);
  CLI::App* calibrate =
      accountant->add_subcommand("calibrate", "noise level for a budget");
  CLI::App* budget =
      accountant->add_subcommand("budget", "budget certified by a noise level");
  CLI::App* max_rounds =
      accountant->add_subcommand("max-rounds", "round limit for a multiplier");
  for (CLI::App* sub : {calibrate, budget, max_rounds}) sub->fallthrough();

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", run_args.config, "experiment JSON")->required();
  run->add_option("--out", run_args.out_dir, "output directory");
  run->add_option("--data-dir", run_args.data_dir, "MNIST directory");
  run->add_option("--set", run_args.overrides, "section.key=value override");
  run->add_option("--repeats", run_args.repeats, "number of repeats");
  run->add_option("--seed", run_args.seed, "base seed");
  run->add_option("--threads", run_args.threads, "client worker threads");

  AttackArgs atk;
  CLI::App* attack =
      app.add_subcommand("attack", "loss-threshold membership attack");
  attack->add_option("--model", atk.model, "model file")->required();
  attack->add_option("--config", atk.config,
                     "experiment config; members are client samples, "
                     "non-members the held-out rows");
  attack->add_option("--repeat", atk.repeat, "repeat index for --config");
  attack->add_option("--member-images", atk.member_images);
  attack->add_option("--member-labels", atk.member_labels);
  attack->add_option("--nonmember-images", atk.nonmember_images);
  attack->add_option("--nonmember-labels", atk.nonmember_labels);
  attack->add_option("--normalize", atk.normalize)
      ->check(CLI::IsMember({"standardize", "unit"}));
  attack->add_option("--max-samples", atk.max_samples,
                     "cap per class (0 = all)");
  attack->add_option("--classes", atk.classes);
  attack->add_option("--roc", atk.roc, "write fpr,tpr CSV here");

  SpectrumArgs spec;
  CLI::App* spectrum =
      app.add_subcommand("spectrum", "Fourier magnitudes of a stored vector");
  spectrum->add_option("--model", spec.model, "model file")->required();
  spectrum->add_option("--out", spec.out, "CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (accountant->parsed()) {
      if (calibrate->parsed()) return Calibrate(acc, out);
      if (budget->parsed()) return Budget(acc, out);
      if (max_rounds->parsed()) return MaxRoundsCmd(acc, out);
      if (acc.eps) return Calibrate(acc, out);
      if (acc.nu) return Budget(acc, out);
      throw UsageError("accountant needs --eps or --nu");
    }
    if (run->parsed()) return RunCmd(run_args, out, err);
    if (attack->parsed()) return AttackCmd(atk, out);
    if (spectrum->parsed()) return SpectrumCmd(spec, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace fedsmooth
