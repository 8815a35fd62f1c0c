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

#include "fedsmooth/experiment.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fedsmooth {
namespace {

using json = nlohmann::json;

struct Field {
  const char* section;
  const char* key;
  std::function<json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const json&)> set;
};

template <typename T>
T As(const json& v, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("bad value for '") + key +
                                "': " + v.dump());
  }
}

double AsDouble(const json& v, const char* key) {
  if (!v.is_number()) {
    throw std::invalid_argument(std::string("'") + key +
                                "' must be a number, got " + v.dump());
  }
  return v.get<double>();
}

int64_t AsInt(const json& v, const char* key) {
  if (!v.is_number_integer()) {
    throw std::invalid_argument(std::string("'") + key +
                                "' must be an integer, got " + v.dump());
  }
  return v.get<int64_t>();
}

json OptionalToJson(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> OptionalFromJson(const json& v, const char* key) {
  if (v.is_null()) return std::nullopt;
  return AsDouble(v, key);
}

#define FS_FIELD(sec, name, getter, setter)                          \
  Field {                                                            \
    sec, name, [](const ExperimentConfig& c) -> json { return getter; }, \
        [](ExperimentConfig& c, const json& v) { setter; }           \
  }

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      // data
      FS_FIELD("data", "source", c.data.source,
               c.data.source = As<std::string>(v, "source")),
      FS_FIELD("data", "dir", c.data.dir, c.data.dir = As<std::string>(v, "dir")),
      FS_FIELD("data", "n_clients", c.data.n_clients,
               c.data.n_clients = AsInt(v, "n_clients")),
      FS_FIELD("data", "per_client", c.data.per_client,
               c.data.per_client = AsInt(v, "per_client")),
      FS_FIELD("data", "partition", c.data.partition,
               c.data.partition = As<std::string>(v, "partition")),
      FS_FIELD("data", "normalize", c.data.normalize,
               c.data.normalize = As<std::string>(v, "normalize")),
      FS_FIELD("data", "synth_train", c.data.synth_train,
               c.data.synth_train = AsInt(v, "synth_train")),
      FS_FIELD("data", "synth_test", c.data.synth_test,
               c.data.synth_test = AsInt(v, "synth_test")),
      FS_FIELD("data", "synth_dim", c.data.synth_dim,
               c.data.synth_dim = AsInt(v, "synth_dim")),
      FS_FIELD("data", "synth_classes", c.data.synth_classes,
               c.data.synth_classes = AsInt(v, "synth_classes")),
      FS_FIELD("data", "synth_separation", c.data.synth_separation,
               c.data.synth_separation = AsDouble(v, "synth_separation")),
      FS_FIELD("data", "quad_dim", c.data.quad_dim,
               c.data.quad_dim = AsInt(v, "quad_dim")),
      FS_FIELD("data", "quad_mu", c.data.quad_mu,
               c.data.quad_mu = AsDouble(v, "quad_mu")),
      FS_FIELD("data", "quad_beta", c.data.quad_beta,
               c.data.quad_beta = AsDouble(v, "quad_beta")),
      FS_FIELD("data", "quad_hetero", c.data.quad_hetero,
               c.data.quad_hetero = AsDouble(v, "quad_hetero")),
      // fed
      FS_FIELD("fed", "tau", c.fed.tau, c.fed.tau = AsDouble(v, "tau")),
      FS_FIELD("fed", "subsampling", SubsamplingName(c.fed.subsampling),
               c.fed.subsampling =
                   ParseSubsampling(As<std::string>(v, "subsampling"))),
      FS_FIELD("fed", "rounds", c.fed.rounds,
               c.fed.rounds = AsInt(v, "rounds")),
      FS_FIELD("fed", "local_epochs", c.fed.local_epochs,
               c.fed.local_epochs = AsInt(v, "local_epochs")),
      FS_FIELD("fed", "local_steps", c.fed.local_steps,
               c.fed.local_steps = AsInt(v, "local_steps")),
      FS_FIELD("fed", "batch_size", c.fed.batch_size,
               c.fed.batch_size = AsInt(v, "batch_size")),
      FS_FIELD("fed", "eta_l", c.fed.eta_l, c.fed.eta_l = AsDouble(v, "eta_l")),
      FS_FIELD("fed", "eta_g", c.fed.eta_g, c.fed.eta_g = AsDouble(v, "eta_g")),
      FS_FIELD("fed", "lr_decay", c.fed.lr_decay,
               c.fed.lr_decay = AsDouble(v, "lr_decay")),
      FS_FIELD("fed", "clip", c.fed.clip, c.fed.clip = AsDouble(v, "clip")),
      // denoiser before sigma: sigma applies to the chosen denoiser.
      FS_FIELD("fed", "denoiser", DenoiserName(c.fed.denoiser),
               c.fed.denoiser = ParseDenoiser(As<std::string>(v, "denoiser"),
                                              c.fed.sigma())),
      FS_FIELD("fed", "sigma", c.fed.sigma(), {
        const double s = AsDouble(v, "sigma");
        if (auto* ls = std::get_if<LaplacianSmoothingDenoiser>(&c.fed.denoiser)) {
          ls->sigma = s;
        } else if (s != 0.0) {
          throw std::invalid_argument("sigma requires denoiser \"ls\"");
        }
      }),
      FS_FIELD("fed", "weight_decay", c.fed.weight_decay,
               c.fed.weight_decay = AsDouble(v, "weight_decay")),
      FS_FIELD("fed", "seed", c.fed.seed, {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<int64_t>() < 0)) {
          throw std::invalid_argument("'seed' must be a nonnegative integer");
        }
        c.fed.seed = v.get<uint64_t>();
      }),
      FS_FIELD("fed", "averaging", AveragingName(c.fed.averaging),
               c.fed.averaging = ParseAveraging(As<std::string>(v, "averaging"))),
      FS_FIELD("fed", "geometric_mu", c.fed.geometric_mu,
               c.fed.geometric_mu = AsDouble(v, "geometric_mu")),
      FS_FIELD("fed", "flatten_order", FlattenOrderName(c.fed.flatten_order),
               c.fed.flatten_order =
                   ParseFlattenOrder(As<std::string>(v, "flatten_order"))),
      FS_FIELD("fed", "threads", c.fed.threads,
               c.fed.threads = static_cast<int>(AsInt(v, "threads"))),
      // privacy
      FS_FIELD("privacy", "epsilon", OptionalToJson(c.privacy.epsilon),
               c.privacy.epsilon = OptionalFromJson(v, "epsilon")),
      FS_FIELD("privacy", "nu", OptionalToJson(c.privacy.nu),
               c.privacy.nu = OptionalFromJson(v, "nu")),
      FS_FIELD("privacy", "z", OptionalToJson(c.privacy.z),
               c.privacy.z = OptionalFromJson(v, "z")),
      FS_FIELD("privacy", "delta", OptionalToJson(c.privacy.delta),
               c.privacy.delta = OptionalFromJson(v, "delta")),
      FS_FIELD("privacy", "delta_exponent", c.privacy.delta_exponent,
               c.privacy.delta_exponent = AsDouble(v, "delta_exponent")),
      FS_FIELD("privacy", "lambda_grid", c.privacy.lambda_grid,
               c.privacy.lambda_grid =
                   static_cast<int>(AsInt(v, "lambda_grid"))),
      FS_FIELD("privacy", "non_private", c.privacy.non_private,
               c.privacy.non_private = As<bool>(v, "non_private")),
      // output
      FS_FIELD("output", "dir", c.output.dir,
               c.output.dir = As<std::string>(v, "dir")),
      FS_FIELD("output", "repeats", c.output.repeats,
               c.output.repeats = AsInt(v, "repeats")),
      FS_FIELD("output", "spectrum_rounds", c.output.spectrum_rounds,
               c.output.spectrum_rounds =
                   As<std::vector<int64_t>>(v, "spectrum_rounds")),
      FS_FIELD("output", "save_model", c.output.save_model,
               c.output.save_model = As<bool>(v, "save_model")),
  };
  return fields;
}

#undef FS_FIELD

constexpr const char* kSections[] = {"data", "fed", "privacy", "output"};

json ToJson(const ExperimentConfig& cfg) {
  json doc = json::object();
  for (const char* s : kSections) doc[s] = json::object();
  for (const Field& f : Fields()) doc[f.section][f.key] = f.get(cfg);
  return doc;
}

bool KnownField(const std::string& section, const std::string& key) {
  for (const Field& f : Fields()) {
    if (section == f.section && key == f.key) return true;
  }
  return false;
}

std::string FormatDouble(double x) {
  if (!std::isfinite(x)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

json NumberOrNull(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json MeanStd(const std::vector<double>& xs) {
  std::vector<double> finite;
  for (double x : xs)
    if (std::isfinite(x)) finite.push_back(x);
  if (finite.empty()) return json{{"mean", nullptr}, {"std", nullptr}};
  double mean = 0.0;
  for (double x : finite) mean += x;
  mean /= static_cast<double>(finite.size());
  double var = 0.0;
  for (double x : finite) var += (x - mean) * (x - mean);
  const double sd =
      finite.size() > 1
          ? std::sqrt(var / static_cast<double>(finite.size() - 1))
          : 0.0;
  return json{{"mean", mean}, {"std", sd}};
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (data.source != "mnist" && data.source != "synthetic" &&
      data.source != "quadratic") {
    throw std::invalid_argument("data.source must be mnist, synthetic or "
                                "quadratic");
  }
  if (data.partition != "iid" && data.partition != "label_sorted") {
    throw std::invalid_argument("data.partition must be iid or label_sorted");
  }
  if (data.normalize != "standardize" && data.normalize != "unit") {
    throw std::invalid_argument("data.normalize must be standardize or unit");
  }
  if (data.n_clients < 1 || data.per_client < 1) {
    throw std::invalid_argument("data.n_clients and per_client must be >= 1");
  }
  const int given = static_cast<int>(privacy.epsilon.has_value()) +
                    static_cast<int>(privacy.nu.has_value()) +
                    static_cast<int>(privacy.z.has_value());
  if (privacy.non_private) {
    if (given != 0) {
      throw std::invalid_argument(
          "a non-private run takes none of privacy.epsilon, nu, z");
    }
  } else if (given != 1) {
    throw std::invalid_argument(
        "exactly one of privacy.epsilon, privacy.nu, privacy.z is required");
  }
  if (privacy.epsilon && !(*privacy.epsilon > 0.0)) {
    throw std::invalid_argument("privacy.epsilon must be positive");
  }
  if (privacy.nu && !(*privacy.nu > 0.0)) {
    throw std::invalid_argument("privacy.nu must be positive");
  }
  if (privacy.z && !(*privacy.z > 0.0)) {
    throw std::invalid_argument("privacy.z must be positive");
  }
  if (privacy.delta && !(*privacy.delta > 0.0 && *privacy.delta < 1.0)) {
    throw std::invalid_argument("privacy.delta must lie in (0, 1)");
  }
  if (privacy.lambda_grid < 2) {
    throw std::invalid_argument("privacy.lambda_grid must be >= 2");
  }
  if (output.repeats < 1) {
    throw std::invalid_argument("output.repeats must be >= 1");
  }
  FedConfig probe = fed;
  probe.non_private = true;
  probe.Validate();
}

ExperimentConfig ParseExperimentConfig(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config must be a JSON object");
  }
  for (const auto& [section, body] : doc.items()) {
    bool known = false;
    for (const char* s : kSections) known = known || section == s;
    if (!known) {
      throw std::invalid_argument("unknown config section '" + section + "'");
    }
    if (!body.is_object()) {
      throw std::invalid_argument("config section '" + section +
                                  "' must be an object");
    }
    for (const auto& [key, value] : body.items()) {
      if (!KnownField(section, key)) {
        throw std::invalid_argument("unknown config key '" + section + "." +
                                    key + "'");
      }
    }
  }
  ExperimentConfig cfg;
  for (const Field& f : Fields()) {
    if (doc.contains(f.section) && doc[f.section].contains(f.key)) {
      f.set(cfg, doc[f.section][f.key]);
    }
  }
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseExperimentConfig(ss.str());
}

std::string CanonicalJson(const ExperimentConfig& cfg) {
  return ToJson(cfg).dump(2) + "\n";
}

void ApplyOverride(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw std::invalid_argument("override must look like section.key=value: " +
                                assignment);
  }
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  for (const Field& f : Fields()) {
    if (section == f.section && key == f.key) {
      f.set(cfg, value);
      cfg.Validate();
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + section + "." + key +
                              "'");
}

int64_t ConfiguredClients(const ExperimentConfig& cfg) {
  return cfg.data.n_clients;
}

PrivacyResolution ResolvePrivacy(const ExperimentConfig& cfg) {
  PrivacyResolution r;
  const int64_t n = ConfiguredClients(cfg);
  r.delta = cfg.privacy.delta ? *cfg.privacy.delta
                              : DefaultDelta(n, cfg.privacy.delta_exponent);
  r.epsilon = std::numeric_limits<double>::quiet_NaN();
  if (cfg.privacy.non_private) {
    r.mode = "none";
    r.feasible = true;
    return r;
  }
  if (cfg.fed.rounds == 0) {
    // Nothing is released, so nothing is spent.
    r.mode = cfg.privacy.epsilon ? "epsilon" : (cfg.privacy.nu ? "nu" : "z");
    r.epsilon = 0.0;
    r.nu = cfg.privacy.nu ? *cfg.privacy.nu
                          : (cfg.privacy.z ? *cfg.privacy.z * cfg.fed.clip : 0.0);
    r.feasible = true;
    return r;
  }
  Mechanism mech;
  mech.kind = cfg.fed.subsampling;
  mech.tau = cfg.fed.tau;
  mech.clip = cfg.fed.clip;
  mech.rounds = cfg.fed.rounds;
  if (cfg.privacy.epsilon) {
    r.mode = "epsilon";
    const NoiseCalibration cal = CalibrateNoise(
        mech, *cfg.privacy.epsilon, r.delta, cfg.privacy.lambda_grid);
    r.nu = cal.nu;
    r.lambda_star = cal.lambda_star;
    r.alpha = cal.alpha;
    r.feasible = cal.feasible;
    r.epsilon = *cfg.privacy.epsilon;
    return r;
  }
  r.mode = cfg.privacy.nu ? "nu" : "z";
  r.nu = cfg.privacy.nu ? *cfg.privacy.nu : *cfg.privacy.z * cfg.fed.clip;
  const std::optional<double> eps =
      BudgetFromNoise(mech, r.nu, r.delta, cfg.privacy.lambda_grid);
  if (eps) {
    const NoiseCalibration cal =
        CalibrateNoise(mech, *eps, r.delta, cfg.privacy.lambda_grid);
    r.epsilon = *eps;
    r.lambda_star = cal.lambda_star;
    r.alpha = cal.alpha;
    r.feasible = true;
  }
  return r;
}

std::string ResolveDataDir(const ExperimentConfig& cfg) {
  if (!cfg.data.dir.empty()) return cfg.data.dir;
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env) {
    return env;
  }
  return "data/mnist";
}

LoadedData LoadData(const ExperimentConfig& cfg) {
  LoadedData out;
  if (cfg.data.source == "mnist") {
    const std::filesystem::path dir = ResolveDataDir(cfg);
    out.train = LoadIdx((dir / "train-images.idx3-ubyte").string(),
                        (dir / "train-labels.idx1-ubyte").string());
    out.test = LoadIdx((dir / "t10k-images.idx3-ubyte").string(),
                       (dir / "t10k-labels.idx1-ubyte").string());
    if (cfg.data.normalize == "standardize") {
      Standardize(out.train, kMnistPixelMean, kMnistPixelStd);
      Standardize(out.test, kMnistPixelMean, kMnistPixelStd);
    }
  } else if (cfg.data.source == "synthetic") {
    const Dataset all = SynthClassification(
        cfg.data.synth_train + cfg.data.synth_test, cfg.data.synth_dim,
        cfg.data.synth_classes, cfg.data.synth_separation, cfg.fed.seed);
    std::vector<int64_t> train_rows(static_cast<std::size_t>(cfg.data.synth_train));
    std::vector<int64_t> test_rows(static_cast<std::size_t>(cfg.data.synth_test));
    for (int64_t i = 0; i < cfg.data.synth_train; ++i) train_rows[i] = i;
    for (int64_t i = 0; i < cfg.data.synth_test; ++i) {
      test_rows[i] = cfg.data.synth_train + i;
    }
    out.train = Subset(all, train_rows);
    out.test = Subset(all, test_rows);
  }
  return out;
}

std::unique_ptr<FedProblem> BuildProblem(const ExperimentConfig& cfg,
                                         const LoadedData& data,
                                         uint64_t seed, Partition* partition) {
  if (cfg.data.source == "quadratic") {
    QuadraticFamily fam =
        QuadMake(cfg.data.n_clients, cfg.data.quad_dim, cfg.data.quad_mu,
                 cfg.data.quad_beta, cfg.data.quad_hetero, seed);
    std::vector<double> init(static_cast<std::size_t>(cfg.data.quad_dim), 0.0);
    return std::make_unique<QuadraticProblem>(std::move(fam), std::move(init));
  }
  Partition p = cfg.data.partition == "iid"
                    ? PartitionIid(data.train, cfg.data.n_clients,
                                   cfg.data.per_client, seed)
                    : PartitionLabelSorted(data.train, cfg.data.n_clients,
                                           cfg.data.per_client, seed);
  Dataset validation = Subset(data.train, p.leftover_rows);
  int32_t max_label = 0;
  for (int32_t y : data.train.labels) max_label = std::max(max_label, y);
  for (int32_t y : data.test.labels) max_label = std::max(max_label, y);
  LogisticModel model;
  model.classes = std::max<int64_t>(2, int64_t{max_label} + 1);
  model.features = data.train.num_features();
  if (partition != nullptr) {
    partition->scheme = p.scheme;
    partition->seed = p.seed;
    partition->shard_rows = p.shard_rows;
    partition->leftover_rows = p.leftover_rows;
    partition->shards.clear();
  }
  return std::make_unique<LogisticProblem>(model, std::move(p.shards),
                                           std::move(validation));
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg,
                               bool write_outputs) {
  cfg.Validate();
  ExperimentResult result;
  result.privacy = ResolvePrivacy(cfg);
  if (result.privacy.mode == "epsilon" && !result.privacy.feasible) {
    throw InfeasibleError("no lambda on the grid satisfies the side "
                          "conditions for epsilon = " +
                          FormatDouble(*cfg.privacy.epsilon));
  }
  FedConfig fed = cfg.fed;
  fed.nu = result.privacy.nu;
  fed.non_private = cfg.privacy.non_private || fed.nu == 0.0;
  fed.spectrum_rounds = cfg.output.spectrum_rounds;

  std::filesystem::path out_dir(cfg.output.dir);
  if (write_outputs) {
    std::filesystem::create_directories(out_dir);
    WriteText(out_dir / "config.json", CanonicalJson(cfg));
  }

  const LoadedData data = LoadData(cfg);
  json repeats = json::array();
  std::vector<double> test_acc, test_loss, val_acc, train_loss;
  for (int64_t r = 0; r < cfg.output.repeats; ++r) {
    RepeatResult rep;
    rep.seed = cfg.fed.seed + static_cast<uint64_t>(r);
    std::unique_ptr<FedProblem> problem = BuildProblem(cfg, data, rep.seed);
    FedConfig run_cfg = fed;
    run_cfg.seed = rep.seed;
    if (run_cfg.averaging == Averaging::kGeometric &&
        run_cfg.geometric_mu == 0.0) {
      if (const auto* q = dynamic_cast<const QuadraticProblem*>(problem.get())) {
        run_cfg.geometric_mu = q->family().mu;
      }
    }
    rep.run = Run(run_cfg, *problem);

    if (const auto* lp = dynamic_cast<const LogisticProblem*>(problem.get())) {
      const LossAccuracy t = LogisticEvaluate(lp->model(), rep.run.w_out, data.test);
      rep.test_loss = t.loss;
      rep.test_acc = t.accuracy;
    } else {
      const auto ev = problem->Evaluate(rep.run.w_out);
      rep.test_loss = ev.val_loss;
      rep.test_acc = std::numeric_limits<double>::quiet_NaN();
    }
    result.diverged = result.diverged || rep.run.metrics.diverged;

    if (write_outputs) {
      const std::string tag = std::to_string(r);
      WriteText(out_dir / ("metrics_" + tag + ".csv"), rep.run.metrics.ToCsv());
      if (cfg.output.save_model) {
        WriteModel((out_dir / ("model_" + tag + ".bin")).string(),
                   rep.run.w_out);
      }
      for (const auto& snap : rep.run.metrics.spectra) {
        WriteText(out_dir / ("spectrum_" + tag + "_round" +
                             std::to_string(snap.round) + ".csv"),
                  snap.dump.ToCsv());
      }
    }

    json last = nullptr;
    if (!rep.run.metrics.rounds.empty()) {
      const RoundMetrics& m = rep.run.metrics.rounds.back();
      last = json{{"round", m.round},
                  {"train_loss", NumberOrNull(m.train_loss)},
                  {"val_loss", NumberOrNull(m.val_loss)},
                  {"train_acc", NumberOrNull(m.train_acc)},
                  {"val_acc", NumberOrNull(m.val_acc)},
                  {"grad_norm", NumberOrNull(m.grad_norm)}};
      val_acc.push_back(m.val_acc);
      train_loss.push_back(m.train_loss);
    }
    test_acc.push_back(rep.test_acc);
    test_loss.push_back(rep.test_loss);
    repeats.push_back(json{{"seed", rep.seed},
                           {"final", last},
                           {"test_loss", NumberOrNull(rep.test_loss)},
                           {"test_acc", NumberOrNull(rep.test_acc)},
                           {"diverged", rep.run.metrics.diverged},
                           {"abort_reason", rep.run.metrics.abort_reason}});
    result.repeats.push_back(std::move(rep));
  }

  const PrivacyResolution& pr = result.privacy;
  json summary = {
      {"config", ToJson(cfg)},
      {"privacy",
       {{"mode", pr.mode},
        {"nu", pr.nu},
        {"epsilon", NumberOrNull(pr.epsilon)},
        {"delta", pr.delta},
        {"lambda_star", pr.lambda_star},
        {"alpha", pr.alpha},
        {"feasible", pr.feasible}}},
      {"repeats", repeats},
      {"summary",
       {{"test_acc", MeanStd(test_acc)},
        {"test_loss", MeanStd(test_loss)},
        {"val_acc", MeanStd(val_acc)},
        {"train_loss", MeanStd(train_loss)}}},
      {"diverged", result.diverged}};
  result.summary_json = summary.dump(2) + "\n";
  if (write_outputs) WriteText(out_dir / "summary.json", result.summary_json);
  return result;
}

}  // namespace fedsmooth
