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

#include "fedsmooth/fedsim.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <numeric>
#include <thread>

namespace fedsmooth {
namespace {

constexpr double kDivergenceLoss = 1e12;

double SquaredNorm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

bool AllFinite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

// Permutation p with flattened[i] = native[p[i]].
std::vector<int64_t> FlattenPermutation(FlattenOrder order,
                                        std::pair<int64_t, int64_t> shape) {
  const auto [rows, cols] = shape;
  std::vector<int64_t> p(static_cast<std::size_t>(rows * cols));
  if (order == FlattenOrder::kNative) {
    std::iota(p.begin(), p.end(), int64_t{0});
    return p;
  }
  std::size_t i = 0;
  for (int64_t c = 0; c < cols; ++c) {
    for (int64_t r = 0; r < rows; ++r) p[i++] = r * cols + c;
  }
  return p;
}

std::vector<double> Denoise(std::vector<double> v, const FedConfig& cfg,
                            const SmoothingOperator& op,
                            const std::vector<int64_t>* perm) {
  return std::visit(
      [&](const auto& kind) -> std::vector<double> {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, IdentityDenoiser>) {
          return v;
        } else if constexpr (std::is_same_v<T, LaplacianSmoothingDenoiser>) {
          if (kind.sigma == 0.0) return v;
          if (perm == nullptr) {
            op.ApplyInPlace(v);
            return v;
          }
          std::vector<double> flat(v.size());
          for (std::size_t i = 0; i < v.size(); ++i) flat[i] = v[(*perm)[i]];
          op.ApplyInPlace(flat);
          for (std::size_t i = 0; i < v.size(); ++i) v[(*perm)[i]] = flat[i];
          return v;
        } else if constexpr (std::is_same_v<T, JamesSteinDenoiser>) {
          return cfg.nu > 0.0 ? JamesSteinEstimate(v, cfg.nu) : v;
        } else {
          return cfg.nu > 0.0 ? SoftThresholdEstimate(v, cfg.nu) : v;
        }
      },
      cfg.denoiser);
}

std::vector<double> AggregateImpl(
    const std::vector<std::vector<double>>& deltas, const FedConfig& cfg,
    const SmoothingOperator& op, Rng& rng, const std::vector<int64_t>* perm) {
  if (deltas.empty()) throw std::invalid_argument("Aggregate: no deltas");
  const std::size_t d = deltas.front().size();
  std::vector<double> sum(d, 0.0);
  for (const auto& delta : deltas) {
    if (delta.size() != d) {
      throw std::invalid_argument("Aggregate: deltas differ in length");
    }
    for (std::size_t i = 0; i < d; ++i) sum[i] += delta[i];
  }
  if (cfg.nu > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.nu);
    for (double& x : sum) x += noise(rng);
  }
  std::vector<double> out = Denoise(std::move(sum), cfg, op, perm);
  const double scale = cfg.eta_g / static_cast<double>(deltas.size());
  for (double& x : out) x *= scale;
  return out;
}

template <typename Fn>
void ParallelFor(int64_t n, int threads, Fn&& fn) {
  const int workers =
      static_cast<int>(std::min<int64_t>(std::max(threads, 1), n));
  if (workers <= 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int64_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void WriteLe64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b, 8);
}

uint64_t ReadLe64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw std::runtime_error("model file truncated");
  }
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

std::string AveragingName(Averaging a) {
  switch (a) {
    case Averaging::kLast:
      return "last";
    case Averaging::kUniform:
      return "uniform";
    case Averaging::kGeometric:
      return "geometric";
  }
  return "last";
}

Averaging ParseAveraging(const std::string& name) {
  if (name == "last") return Averaging::kLast;
  if (name == "uniform") return Averaging::kUniform;
  if (name == "geometric") return Averaging::kGeometric;
  throw std::invalid_argument("unknown averaging '" + name + "'");
}

std::string FlattenOrderName(FlattenOrder f) {
  return f == FlattenOrder::kNative ? "native" : "transposed";
}

FlattenOrder ParseFlattenOrder(const std::string& name) {
  if (name == "native") return FlattenOrder::kNative;
  if (name == "transposed") return FlattenOrder::kTransposed;
  throw std::invalid_argument("unknown flatten order '" + name + "'");
}

void FedConfig::Validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(rounds >= 0, "rounds must be >= 0");
  require(local_steps > 0 || local_epochs > 0,
          "local_epochs or local_steps must be positive");
  require(local_steps >= 0 && local_epochs >= 0,
          "local_epochs and local_steps must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(eta_l > 0.0, "eta_l must be positive");
  require(eta_g > 0.0, "eta_g must be positive");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay must lie in (0, 1]");
  require(clip > 0.0 && std::isfinite(clip), "clip must be positive");
  require(sigma() >= 0.0 && std::isfinite(sigma()), "sigma must be >= 0");
  require(nu >= 0.0 && std::isfinite(nu), "nu must be >= 0");
  require(nu > 0.0 || non_private,
          "nu = 0 requires the run to be marked non-private");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(averaging != Averaging::kGeometric || geometric_mu > 0.0,
          "geometric averaging needs geometric_mu > 0");
  require(threads >= 1, "threads must be >= 1");
}

double FedConfig::sigma() const {
  if (const auto* ls = std::get_if<LaplacianSmoothingDenoiser>(&denoiser)) {
    return ls->sigma;
  }
  return 0.0;
}

LogisticProblem::LogisticProblem(LogisticModel model,
                                 std::vector<ClientShard> shards,
                                 Dataset validation)
    : model_(model),
      shards_(std::move(shards)),
      validation_(std::move(validation)) {
  if (shards_.empty()) throw std::invalid_argument("no client shards");
  for (const auto& s : shards_) {
    if (s.data.size() < 1) throw std::invalid_argument("empty client shard");
    if (s.data.num_features() != model_.features) {
      throw std::invalid_argument("shard feature count mismatch");
    }
  }
}

int64_t LogisticProblem::client_size(int64_t client) const {
  return shards_.at(static_cast<std::size_t>(client)).data.size();
}

double LogisticProblem::ClientLossGrad(int64_t client,
                                       std::span<const double> w,
                                       std::span<const int64_t> rows,
                                       double weight_decay,
                                       std::span<double> grad) const {
  return LogisticLossGrad(model_, w,
                          shards_.at(static_cast<std::size_t>(client)).data,
                          rows, weight_decay, grad);
}

FedProblem::Evaluation LogisticProblem::Evaluate(
    std::span<const double> w) const {
  Evaluation ev;
  std::vector<double> grad_sum(w.size(), 0.0), grad(w.size());
  std::vector<int64_t> rows;
  double loss = 0.0, hits = 0.0;
  int64_t n = 0;
  for (const auto& s : shards_) {
    rows.resize(static_cast<std::size_t>(s.data.size()));
    std::iota(rows.begin(), rows.end(), int64_t{0});
    const double m = static_cast<double>(s.data.size());
    loss += m * LogisticLossGrad(model_, w, s.data, rows, 0.0, grad);
    for (std::size_t i = 0; i < w.size(); ++i) grad_sum[i] += m * grad[i];
    hits += m * LogisticEvaluate(model_, w, s.data).accuracy;
    n += s.data.size();
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  ev.train_loss = loss * inv_n;
  ev.train_acc = hits * inv_n;
  ev.grad_norm = std::sqrt(SquaredNorm(grad_sum)) * inv_n;
  if (validation_.size() > 0) {
    const LossAccuracy v = LogisticEvaluate(model_, w, validation_);
    ev.val_loss = v.loss;
    ev.val_acc = v.accuracy;
  } else {
    ev.val_loss = ev.val_acc = std::nan("");
  }
  return ev;
}

QuadraticProblem::QuadraticProblem(QuadraticFamily family,
                                   std::vector<double> init)
    : family_(std::move(family)), init_(std::move(init)) {
  if (static_cast<int64_t>(init_.size()) != family_.dim()) {
    throw std::invalid_argument("initial point has the wrong dimension");
  }
}

double QuadraticProblem::ClientLossGrad(int64_t client,
                                        std::span<const double> w,
                                        std::span<const int64_t>,
                                        double weight_decay,
                                        std::span<double> grad) const {
  QuadClientGrad(family_, client, w, grad);
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), family_.dim());
  double loss = 0.5 * wv.dot(family_.a[client] * wv) -
                family_.b[client].dot(wv);
  if (weight_decay != 0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) grad[i] += weight_decay * w[i];
    loss += 0.5 * weight_decay * SquaredNorm(w);
  }
  return loss;
}

FedProblem::Evaluation QuadraticProblem::Evaluate(
    std::span<const double> w) const {
  const QuadEvaluation q = QuadEval(family_, w);
  Evaluation ev;
  ev.train_loss = q.value;
  ev.val_loss = q.gap;
  ev.train_acc = ev.val_acc = std::nan("");
  ev.grad_norm = std::sqrt(SquaredNorm(q.grad));
  return ev;
}

std::vector<double> Clip(std::span<const double> v, double clip) {
  std::vector<double> out(v.begin(), v.end());
  ClipInPlace(out, clip);
  return out;
}

void ClipInPlace(std::span<double> v, double clip) {
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be positive");
  const double scale = std::max(1.0, std::sqrt(SquaredNorm(v)) / clip);
  if (scale > 1.0) {
    for (double& x : v) x /= scale;
  }
}

int64_t UniformSelectionSize(double tau, int64_t n_clients) {
  const auto k = static_cast<int64_t>(
      std::llround(tau * static_cast<double>(n_clients)));
  return std::clamp<int64_t>(k, 1, n_clients);
}

std::vector<int64_t> SelectClients(const FedConfig& cfg, int64_t n_clients,
                                   Rng& rng) {
  std::vector<int64_t> out;
  if (n_clients < 1) return out;
  if (cfg.subsampling == Subsampling::kUniform) {
    const int64_t k = UniformSelectionSize(cfg.tau, n_clients);
    std::vector<int64_t> pool(static_cast<std::size_t>(n_clients));
    std::iota(pool.begin(), pool.end(), int64_t{0});
    // Partial Fisher-Yates: the first k slots form the sample.
    for (int64_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<int64_t> pick(i, n_clients - 1);
      std::swap(pool[static_cast<std::size_t>(i)],
                pool[static_cast<std::size_t>(pick(rng))]);
    }
    out.assign(pool.begin(), pool.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int64_t j = 0; j < n_clients; ++j) {
    if (coin(rng) < cfg.tau) out.push_back(j);
  }
  return out;
}

std::vector<double> ClientUpdate(const FedProblem& problem, int64_t client,
                                  std::span<const double> w_global,
                                  const FedConfig& cfg, double lr, Rng& rng) {
  const int64_t n = problem.client_size(client);
  if (n < 1) throw std::invalid_argument("empty client shard");
  const int64_t b = std::min(cfg.batch_size, n);
  const int64_t steps = cfg.local_steps > 0
                            ? cfg.local_steps
                            : cfg.local_epochs * ((n + b - 1) / b);
  const std::size_t d = w_global.size();
  std::vector<double> w(w_global.begin(), w_global.end());
  std::vector<double> disp(d, 0.0), grad(d);
  std::vector<int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), int64_t{0});
  int64_t pos = n;
  for (int64_t s = 0; s < steps; ++s) {
    if (pos >= n) {
      std::shuffle(order.begin(), order.end(), rng);
      pos = 0;
    }
    const int64_t end = std::min(pos + b, n);
    std::span<const int64_t> batch(order.data() + pos,
                                   static_cast<std::size_t>(end - pos));
    pos = end;
    problem.ClientLossGrad(client, w, batch, cfg.weight_decay, grad);
    if (!AllFinite(grad)) {
      throw DivergenceError("non-finite gradient at client " +
                            std::to_string(client) + ", local step " +
                            std::to_string(s));
    }
    for (std::size_t i = 0; i < d; ++i) {
      disp[i] = w[i] - lr * grad[i] - w_global[i];
    }
    ClipInPlace(disp, cfg.clip);
    for (std::size_t i = 0; i < d; ++i) w[i] = w_global[i] + disp[i];
  }
  return disp;
}

std::vector<double> Aggregate(const std::vector<std::vector<double>>& deltas,
                              const FedConfig& cfg,
                              const SmoothingOperator& op, Rng& rng) {
  return AggregateImpl(deltas, cfg, op, rng, nullptr);
}

std::string RunMetrics::ToCsv() const {
  std::string out =
      "round,train_loss,val_loss,train_acc,val_acc,grad_norm,k_selected\n";
  char buf[256];
  for (const auto& r : rounds) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%lld\n",
                  static_cast<long long>(r.round), r.train_loss, r.val_loss,
                  r.train_acc, r.val_acc, r.grad_norm,
                  static_cast<long long>(r.k_selected));
    out += buf;
  }
  return out;
}

RunResult Run(const FedConfig& cfg, const FedProblem& problem,
              const RoundObserver& observer) {
  cfg.Validate();
  const int64_t n_clients = problem.num_clients();
  const auto d = static_cast<std::size_t>(problem.dim());
  const SmoothingOperator op(cfg.sigma(), d);
  std::vector<int64_t> perm;
  if (cfg.flatten_order != FlattenOrder::kNative) {
    const auto shape = problem.shape();
    if (static_cast<std::size_t>(shape.first * shape.second) != d) {
      throw std::invalid_argument("problem shape does not match its dimension");
    }
    perm = FlattenPermutation(cfg.flatten_order, shape);
  }

  RunResult res;
  std::vector<double> w = problem.Init();
  if (w.size() != d) throw std::invalid_argument("Init() has the wrong size");

  // Running weighted sum of iterates w^0..w^t.
  double q = 1.0;
  if (cfg.averaging == Averaging::kGeometric) {
    const double s = static_cast<double>(
        cfg.local_steps > 0 ? cfg.local_steps
                            : cfg.local_epochs *
                                  ((problem.client_size(0) + cfg.batch_size - 1) /
                                   cfg.batch_size));
    // Weights a_t proportional to q^{-t}, accumulated as q^{T-t}.
    q = 1.0 - cfg.geometric_mu * cfg.eta_l * cfg.eta_g * s / 2.0;
    if (!(q > 0.0 && q < 1.0)) {
      throw std::invalid_argument(
          "geometric averaging needs 0 < 1 - mu eta_l eta_g S / 2 < 1");
    }
  }
  std::vector<double> acc(w);
  double acc_weight = 1.0;

  for (int64_t t = 0; t < cfg.rounds; ++t) {
    const double lr = cfg.eta_l * std::pow(cfg.lr_decay, static_cast<double>(t));
    Rng server = Substream(cfg.seed, static_cast<uint64_t>(t), kServerStream);
    const std::vector<int64_t> selected = SelectClients(cfg, n_clients, server);
    const auto k = static_cast<int64_t>(selected.size());

    if (k > 0) {
      std::vector<std::vector<double>> deltas(selected.size());
      try {
        ParallelFor(k, cfg.threads, [&](int64_t i) {
          const int64_t j = selected[static_cast<std::size_t>(i)];
          Rng rng = Substream(cfg.seed, static_cast<uint64_t>(t),
                              static_cast<uint64_t>(j));
          deltas[static_cast<std::size_t>(i)] =
              ClientUpdate(problem, j, w, cfg, lr, rng);
        });
      } catch (const DivergenceError& e) {
        res.metrics.diverged = true;
        res.metrics.abort_reason =
            "round " + std::to_string(t + 1) + ": " + e.what();
        break;
      }
      const int64_t round1 = t + 1;
      if (std::find(cfg.spectrum_rounds.begin(), cfg.spectrum_rounds.end(),
                    round1) != cfg.spectrum_rounds.end() &&
          d >= 2) {
        std::vector<double> avg(d, 0.0);
        for (const auto& delta : deltas)
          for (std::size_t i = 0; i < d; ++i) avg[i] += delta[i];
        for (double& x : avg) x /= static_cast<double>(k);
        res.metrics.spectra.push_back({round1, Spectrum(avg)});
      }
      const std::vector<double> update =
          AggregateImpl(deltas, cfg, op, server, perm.empty() ? nullptr : &perm);
      for (std::size_t i = 0; i < d; ++i) w[i] += update[i];
    }

    for (std::size_t i = 0; i < d; ++i) acc[i] = q * acc[i] + w[i];
    acc_weight = q * acc_weight + 1.0;

    const FedProblem::Evaluation ev = problem.Evaluate(w);
    RoundMetrics m{t + 1,       ev.train_loss, ev.val_loss, ev.train_acc,
                   ev.val_acc,  ev.grad_norm,  k};
    res.metrics.rounds.push_back(m);
    if (observer) observer(m, w);
    if (!std::isfinite(ev.train_loss) || ev.train_loss > kDivergenceLoss ||
        !AllFinite(w)) {
      res.metrics.diverged = true;
      res.metrics.abort_reason =
          "round " + std::to_string(t + 1) + ": training loss diverged";
      break;
    }
  }

  res.w_last = w;
  switch (cfg.averaging) {
    case Averaging::kLast:
      res.w_out = w;
      break;
    case Averaging::kUniform:
    case Averaging::kGeometric:
      res.w_out = acc;
      for (double& x : res.w_out) x /= acc_weight;
      break;
  }
  return res;
}

double SubsampledMeanVariance(const std::vector<std::vector<double>>& xs,
                              int64_t s) {
  const auto n = static_cast<int64_t>(xs.size());
  if (n < 1 || s < 1 || s > n) {
    throw std::invalid_argument("SubsampledMeanVariance: need 1 <= s <= N");
  }
  if (n == 1) return 0.0;
  const std::size_t d = xs.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& x : xs)
    for (std::size_t i = 0; i < d; ++i) mean[i] += x[i];
  for (double& m : mean) m /= static_cast<double>(n);
  double spread = 0.0;
  for (const auto& x : xs)
    for (std::size_t i = 0; i < d; ++i) {
      const double e = x[i] - mean[i];
      spread += e * e;
    }
  spread /= static_cast<double>(n);
  const double sd = static_cast<double>(s);
  return (1.0 / sd) * (1.0 - (sd - 1.0) / static_cast<double>(n - 1)) * spread;
}

void WriteModel(const std::string& path, std::span<const double> w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  WriteLe64(out, w.size());
  for (double x : w) WriteLe64(out, std::bit_cast<uint64_t>(x));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<double> ReadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const uint64_t n = ReadLe64(in);
  if (n > (uint64_t{1} << 32)) throw std::runtime_error("bad model header");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& x : w) x = std::bit_cast<double>(ReadLe64(in));
  return w;
}

}  // namespace fedsmooth
