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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

namespace fedsmooth {
namespace {

namespace fs = std::filesystem;

using GradFn = std::function<double(int64_t client, std::span<const double> w,
                                    std::span<double> grad)>;

// Problem whose gradients come from a callback; evaluation reports the
// squared norm of w as the training loss unless overridden.
class CallbackProblem : public FedProblem {
 public:
  CallbackProblem(int64_t dim, int64_t clients, int64_t size, GradFn fn)
      : dim_(dim), clients_(clients), size_(size), fn_(std::move(fn)) {}

  int64_t dim() const override { return dim_; }
  int64_t num_clients() const override { return clients_; }
  int64_t client_size(int64_t) const override { return size_; }
  std::vector<double> Init() const override { return init_.empty() ? std::vector<double>(dim_, 0.0) : init_; }
  double ClientLossGrad(int64_t client, std::span<const double> w,
                        std::span<const int64_t> rows, double,
                        std::span<double> grad) const override {
    ++calls_;
    batch_rows_ += static_cast<int64_t>(rows.size());
    return fn_(client, w, grad);
  }
  Evaluation Evaluate(std::span<const double> w) const override {
    Evaluation ev;
    for (double x : w) ev.train_loss += x * x;
    if (loss_override_) ev.train_loss = loss_override_;
    return ev;
  }
  std::pair<int64_t, int64_t> shape() const override { return shape_; }

  std::vector<double> init_;
  double loss_override_ = 0.0;
  std::pair<int64_t, int64_t> shape_{1, 0};
  mutable std::atomic<int64_t> calls_{0};
  mutable std::atomic<int64_t> batch_rows_{0};

 private:
  int64_t dim_, clients_, size_;
  GradFn fn_;
};

GradFn ConstantGrad(std::vector<double> g) {
  return [g](int64_t, std::span<const double>, std::span<double> grad) {
    std::copy(g.begin(), g.end(), grad.begin());
    return 0.0;
  };
}

FedConfig NonPrivate() {
  FedConfig cfg;
  cfg.non_private = true;
  cfg.nu = 0.0;
  return cfg;
}

double Norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> RandomVector(std::size_t n, uint64_t seed, double scale = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// --- clip ---

TEST(ClipTest, Examples) {
  EXPECT_EQ(Clip(std::vector<double>{0.3, 0.4}, 1.0), (std::vector<double>{0.3, 0.4}));
  const auto c = Clip(std::vector<double>{3, 4}, 1.0);
  EXPECT_NEAR(c[0], 0.6, 1e-15);
  EXPECT_NEAR(c[1], 0.8, 1e-15);
  EXPECT_EQ(Clip(std::vector<double>{0, 0}, 1.0), (std::vector<double>{0, 0}));
  EXPECT_THROW(Clip(std::vector<double>{1}, 0.0), std::invalid_argument);
}

TEST(ClipTest, NormBoundAndDirection) {
  for (int t = 0; t < 100; ++t) {
    const auto v = RandomVector(17, t, 0.1 + t * 0.05);
    const auto c = Clip(v, 0.7);
    EXPECT_LE(Norm(c), 0.7 * (1 + 1e-14));
    const double ratio = c[0] / v[0];
    EXPECT_GT(ratio, 0);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(c[i], ratio * v[i], 1e-14);
  }
}

// --- selection ---

TEST(SelectClientsTest, FullParticipation) {
  FedConfig cfg = NonPrivate();
  cfg.tau = 1.0;
  for (Subsampling s : {Subsampling::kUniform, Subsampling::kPoisson}) {
    cfg.subsampling = s;
    Rng rng(1);
    const auto sel = SelectClients(cfg, 37, rng);
    std::vector<int64_t> all(37);
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(sel, all);
  }
}

TEST(SelectClientsTest, UniformSizeAndDistinct) {
  FedConfig cfg = NonPrivate();
  cfg.tau = 0.05;
  EXPECT_EQ(UniformSelectionSize(0.05, 1000), 50);
  EXPECT_EQ(UniformSelectionSize(0.001, 100), 1);
  for (int r = 0; r < 20; ++r) {
    Rng rng = Substream(3, r, kServerStream);
    const auto sel = SelectClients(cfg, 1000, rng);
    ASSERT_EQ(sel.size(), 50u);
    EXPECT_TRUE(std::is_sorted(sel.begin(), sel.end()));
    EXPECT_EQ(std::set<int64_t>(sel.begin(), sel.end()).size(), 50u);
    EXPECT_GE(sel.front(), 0);
    EXPECT_LT(sel.back(), 1000);
  }
}

TEST(SelectClientsTest, DeterministicGivenStream) {
  FedConfig cfg = NonPrivate();
  cfg.tau = 0.1;
  Rng a = Substream(9, 4, kServerStream), b = Substream(9, 4, kServerStream),
      c = Substream(9, 5, kServerStream);
  const auto sa = SelectClients(cfg, 500, a);
  EXPECT_EQ(sa, SelectClients(cfg, 500, b));
  EXPECT_NE(sa, SelectClients(cfg, 500, c));
}

TEST(SelectClientsTest, UniformMarginalsAndPoissonCounts) {
  FedConfig cfg = NonPrivate();
  cfg.tau = 0.2;
  std::vector<int> hits(20, 0);
  double poisson_total = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Substream(11, t, kServerStream);
    cfg.subsampling = Subsampling::kUniform;
    for (int64_t j : SelectClients(cfg, 20, rng)) ++hits[j];
    cfg.subsampling = Subsampling::kPoisson;
    poisson_total += static_cast<double>(SelectClients(cfg, 20, rng).size());
  }
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(trials), 0.2, 0.01);
  EXPECT_NEAR(poisson_total / trials, 4.0, 0.05);
}

// --- client update ---

TEST(ClientUpdateTest, ZeroGradientGivesZeroDelta) {
  CallbackProblem p(5, 1, 10, ConstantGrad(std::vector<double>(5, 0.0)));
  FedConfig cfg = NonPrivate();
  Rng rng(1);
  const auto d = ClientUpdate(p, 0, RandomVector(5, 2), cfg, 0.1, rng);
  EXPECT_EQ(d, std::vector<double>(5, 0.0));
}

TEST(ClientUpdateTest, SingleUnclippedStep) {
  const std::vector<double> g = {0.5, -1.0, 2.0};
  CallbackProblem p(3, 1, 4, ConstantGrad(g));
  FedConfig cfg = NonPrivate();
  cfg.local_steps = 1;
  cfg.clip = 10;
  Rng rng(1);
  const auto d = ClientUpdate(p, 0, std::vector<double>{1, 2, 3}, cfg, 0.1, rng);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(d[i], -0.1 * g[i], 1e-15);
}

TEST(ClientUpdateTest, ClipsCumulativeDisplacementEveryStep) {
  // Constant gradient (1, 0): the displacement saturates at the clip radius.
  CallbackProblem p(2, 1, 4, ConstantGrad({1.0, 0.0}));
  FedConfig cfg = NonPrivate();
  cfg.local_steps = 7;
  cfg.clip = 0.25;
  Rng rng(1);
  const auto d = ClientUpdate(p, 0, std::vector<double>{0, 0}, cfg, 0.1, rng);
  EXPECT_NEAR(d[0], -0.25, 1e-15);
  EXPECT_EQ(d[1], 0.0);
  // A gradient that pulls back toward the origin: clipping at step 3 changes
  // where later steps start, which a final-only clip would not reproduce.
  GradFn pull = [](int64_t, std::span<const double> w, std::span<double> grad) {
    grad[0] = w[0] < -0.2 ? -3.0 : 1.0;
    grad[1] = 0.0;
    return 0.0;
  };
  CallbackProblem q(2, 1, 4, pull);
  cfg.local_steps = 4;
  const auto e = ClientUpdate(q, 0, std::vector<double>{0, 0}, cfg, 0.1, rng);
  // -0.1, -0.2, -0.25 (clipped from -0.3), then +0.3 -> 0.05.
  EXPECT_NEAR(e[0], 0.05, 1e-15);
}

TEST(ClientUpdateTest, NormBoundOnLogistic) {
  const Dataset data = SynthClassification(200, 8, 3, 3, 1);
  const Partition part = PartitionIid(data, 4, 50, 2);
  LogisticProblem p(LogisticModel{3, 8}, part.shards, Dataset{});
  FedConfig cfg = NonPrivate();
  cfg.local_epochs = 3;
  for (double clip : {0.01, 0.1, 1.0}) {
    cfg.clip = clip;
    for (int64_t j = 0; j < 4; ++j) {
      Rng rng = Substream(5, 0, j);
      const auto d = ClientUpdate(p, j, RandomVector(24, j), cfg, 1.0, rng);
      EXPECT_LE(Norm(d), clip * (1 + 1e-12));
    }
  }
}

TEST(ClientUpdateTest, StepCountFromEpochs) {
  CallbackProblem p(1, 1, 25, ConstantGrad({0.0}));
  FedConfig cfg = NonPrivate();
  cfg.local_epochs = 2;
  cfg.batch_size = 10;
  Rng rng(1);
  ClientUpdate(p, 0, std::vector<double>{0}, cfg, 0.1, rng);
  EXPECT_EQ(p.calls_, 6);        // 2 * ceil(25 / 10)
  EXPECT_EQ(p.batch_rows_, 50);  // every sample twice
  cfg.local_steps = 4;
  p.calls_ = 0;
  ClientUpdate(p, 0, std::vector<double>{0}, cfg, 0.1, rng);
  EXPECT_EQ(p.calls_, 4);
}

TEST(ClientUpdateTest, NonFiniteGradientAborts) {
  CallbackProblem p(2, 1, 3, ConstantGrad({std::nan(""), 0.0}));
  FedConfig cfg = NonPrivate();
  Rng rng(1);
  EXPECT_THROW(ClientUpdate(p, 0, std::vector<double>{0, 0}, cfg, 0.1, rng),
               DivergenceError);
}

// --- aggregate ---

TEST(AggregateTest, PlainMeanWithoutNoiseOrSmoothing) {
  FedConfig cfg = NonPrivate();
  const std::vector<std::vector<double>> deltas = {{1, 2, 3}, {3, 2, 1}, {2, 5, -1}};
  Rng rng(1);
  const auto out = Aggregate(deltas, cfg, SmoothingOperator(0, 3), rng);
  EXPECT_NEAR(out[0], 2.0, 1e-15);
  EXPECT_NEAR(out[1], 3.0, 1e-15);
  EXPECT_NEAR(out[2], 1.0, 1e-15);
  const auto single = Aggregate({{4, -4, 1}}, cfg, SmoothingOperator(0, 3), rng);
  EXPECT_EQ(single, (std::vector<double>{4, -4, 1}));
}

TEST(AggregateTest, ConstantDeltasSurviveSmoothing) {
  FedConfig cfg = NonPrivate();
  cfg.denoiser = LaplacianSmoothingDenoiser{2.0};
  Rng rng(1);
  const auto out = Aggregate({std::vector<double>(16, 0.5), std::vector<double>(16, 1.5)},
                             cfg, SmoothingOperator(2.0, 16), rng);
  for (double x : out) EXPECT_NEAR(x, 1.0, 1e-14);
}

TEST(AggregateTest, MatchesSmoothedScaledSum) {
  FedConfig cfg = NonPrivate();
  cfg.denoiser = LaplacianSmoothingDenoiser{1.0};
  cfg.eta_g = 0.7;
  const SmoothingOperator op(1.0, 12);
  std::vector<std::vector<double>> deltas;
  std::vector<double> sum(12, 0.0);
  for (int j = 0; j < 4; ++j) {
    deltas.push_back(RandomVector(12, j));
    for (int i = 0; i < 12; ++i) sum[i] += deltas.back()[i];
  }
  const auto ref = op.Apply(sum);
  Rng rng(1);
  const auto out = Aggregate(deltas, cfg, op, rng);
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(out[i], 0.7 / 4 * ref[i], 1e-14);
}

TEST(AggregateTest, CommutesWithScaling) {
  FedConfig cfg = NonPrivate();
  cfg.denoiser = LaplacianSmoothingDenoiser{3.0};
  const SmoothingOperator op(3.0, 20);
  std::vector<std::vector<double>> deltas, scaled;
  for (int j = 0; j < 3; ++j) {
    deltas.push_back(RandomVector(20, 10 + j));
    scaled.push_back(deltas.back());
    for (double& x : scaled.back()) x *= -2.5;
  }
  Rng rng(1);
  const auto a = Aggregate(deltas, cfg, op, rng);
  const auto b = Aggregate(scaled, cfg, op, rng);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(b[i], -2.5 * a[i], 1e-13);
}

TEST(AggregateTest, NoiseIsAddedBeforeSmoothingAndScaling) {
  // Zero deltas isolate the noise: per-coordinate variance of the update is
  // (eta_g / K)^2 nu^2 d_tilde / d.
  const int64_t d = 4096;
  for (double sigma : {0.0, 1.0}) {
    FedConfig cfg;
    cfg.nu = 2.0;
    cfg.eta_g = 0.5;
    cfg.denoiser = LaplacianSmoothingDenoiser{sigma};
    const SmoothingOperator op(sigma, d);
    double second = 0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
      Rng rng = Substream(1, r, kServerStream);
      const auto out = Aggregate({std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)},
                                 cfg, op, rng);
      for (double x : out) second += x * x;
    }
    second /= static_cast<double>(reps * d);
    const double expected =
        std::pow(0.5 / 2, 2) * 4.0 * EffectiveDimensions(op).d_tilde_sigma / d;
    EXPECT_NEAR(second / expected, 1.0, 0.02) << sigma;
  }
}

TEST(AggregateTest, Errors) {
  FedConfig cfg = NonPrivate();
  Rng rng(1);
  EXPECT_THROW(Aggregate({}, cfg, SmoothingOperator(0, 2), rng), std::invalid_argument);
  EXPECT_THROW(Aggregate({{1, 2}, {1}}, cfg, SmoothingOperator(0, 2), rng),
               std::invalid_argument);
}

// --- sensitivity ---

TEST(SensitivityTest, ReplacingOneShardMovesSumByAtMostTwoL) {
  const Dataset a = SynthClassification(300, 10, 4, 4, 1);
  const Dataset b = SynthClassification(300, 10, 4, 4, 2);
  Partition pa = PartitionIid(a, 6, 50, 3);
  Partition pb = pa;
  pb.shards[2].data = Subset(b, std::vector<int64_t>(pb.shard_rows[2].begin(), pb.shard_rows[2].end()));
  LogisticProblem prob_a(LogisticModel{4, 10}, pa.shards, Dataset{});
  LogisticProblem prob_b(LogisticModel{4, 10}, pb.shards, Dataset{});
  FedConfig cfg = NonPrivate();
  cfg.clip = 0.3;
  cfg.local_epochs = 2;
  cfg.eta_l = 0.5;
  for (int round = 0; round < 10; ++round) {
    const auto w = RandomVector(40, 100 + round, 0.2);
    std::vector<double> sa(40, 0.0), sb(40, 0.0);
    for (int64_t j = 0; j < 6; ++j) {
      Rng ra = Substream(7, round, j), rb = Substream(7, round, j);
      const auto da = ClientUpdate(prob_a, j, w, cfg, cfg.eta_l, ra);
      const auto db = ClientUpdate(prob_b, j, w, cfg, cfg.eta_l, rb);
      for (int i = 0; i < 40; ++i) {
        sa[i] += da[i];
        sb[i] += db[i];
      }
    }
    std::vector<double> diff(40);
    for (int i = 0; i < 40; ++i) diff[i] = sa[i] - sb[i];
    EXPECT_GT(Norm(diff), 0.0);
    EXPECT_LE(Norm(diff), 2 * cfg.clip * (1 + 1e-12));
  }
}

// --- run ---

QuadraticProblem SmallQuadratic(int64_t n = 6, int64_t d = 8, double hetero = 1.0) {
  return QuadraticProblem(QuadMake(n, d, 0.1, 1.0, hetero, 4), RandomVector(d, 5));
}

TEST(RunTest, ZeroRoundsReturnInit) {
  const QuadraticProblem p = SmallQuadratic();
  FedConfig cfg = NonPrivate();
  cfg.rounds = 0;
  for (Averaging a : {Averaging::kLast, Averaging::kUniform}) {
    cfg.averaging = a;
    const RunResult r = fedsmooth::Run(cfg, p);
    EXPECT_EQ(r.w_out, p.Init());
    EXPECT_EQ(r.w_last, p.Init());
    EXPECT_TRUE(r.metrics.rounds.empty());
    EXPECT_EQ(r.metrics.ToCsv(),
              "round,train_loss,val_loss,train_acc,val_acc,grad_norm,k_selected\n");
  }
}

TEST(RunTest, ReducesToDistributedGradientDescent) {
  const QuadraticProblem p = SmallQuadratic();
  FedConfig cfg = NonPrivate();
  cfg.rounds = 1;
  cfg.local_steps = 1;
  cfg.eta_l = 0.3;
  cfg.clip = 1e6;
  const RunResult r = fedsmooth::Run(cfg, p);
  const QuadEvaluation e = QuadEval(p.family(), p.Init());
  for (std::size_t i = 0; i < e.grad.size(); ++i) {
    EXPECT_NEAR(r.w_last[i], p.Init()[i] - 0.3 * e.grad[i], 1e-13);
  }
}

TEST(RunTest, UniformAveragingOfOneRound) {
  const QuadraticProblem p = SmallQuadratic();
  FedConfig cfg = NonPrivate();
  cfg.rounds = 1;
  cfg.averaging = Averaging::kUniform;
  const RunResult r = fedsmooth::Run(cfg, p);
  for (std::size_t i = 0; i < r.w_out.size(); ++i) {
    EXPECT_NEAR(r.w_out[i], 0.5 * (p.Init()[i] + r.w_last[i]), 1e-15);
  }
}

TEST(RunTest, GeometricAveragingWeights) {
  const QuadraticProblem p = SmallQuadratic();
  FedConfig cfg = NonPrivate();
  cfg.rounds = 6;
  cfg.local_steps = 2;
  cfg.eta_l = 0.2;
  cfg.averaging = Averaging::kGeometric;
  cfg.geometric_mu = p.family().mu;
  std::vector<std::vector<double>> iterates = {p.Init()};
  const RunResult r = fedsmooth::Run(cfg, p, [&](const RoundMetrics&, std::span<const double> w) {
    iterates.emplace_back(w.begin(), w.end());
  });
  const double q = 1 - cfg.geometric_mu * 0.2 * 1.0 * 2 / 2;
  std::vector<double> expect(p.dim(), 0.0);
  double total = 0;
  for (int t = 0; t <= 6; ++t) {
    const double a = std::pow(q, -t);
    total += a;
    for (int64_t i = 0; i < p.dim(); ++i) expect[i] += a * iterates[t][i];
  }
  for (int64_t i = 0; i < p.dim(); ++i) EXPECT_NEAR(r.w_out[i], expect[i] / total, 1e-13);
  cfg.geometric_mu = 0;
  EXPECT_THROW(fedsmooth::Run(cfg, p), std::invalid_argument);
}

TEST(RunTest, LearningRateDecaysPerRound) {
  CallbackProblem p(2, 1, 1, ConstantGrad({1.0, -2.0}));
  FedConfig cfg = NonPrivate();
  cfg.rounds = 4;
  cfg.local_steps = 1;
  cfg.eta_l = 0.1;
  cfg.lr_decay = 0.5;
  cfg.clip = 100;
  std::vector<double> x0;
  fedsmooth::Run(cfg, p, [&](const RoundMetrics& m, std::span<const double> w) {
    // After t rounds: w0 = -0.1 * (1 + 0.5 + ... + 0.5^{t-1}).
    const double expect = -0.1 * (1 - std::pow(0.5, m.round)) / 0.5;
    EXPECT_NEAR(w[0], expect, 1e-15);
    EXPECT_NEAR(w[1], -2 * expect, 1e-15);
  });
}

TEST(RunTest, BitIdenticalAcrossThreadCounts) {
  const Dataset data = SynthClassification(1200, 30, 5, 2, 1);
  const Partition part = PartitionIid(data, 20, 50, 2);
  LogisticProblem p(LogisticModel{5, 30}, part.shards,
                    Subset(data, part.leftover_rows));
  FedConfig cfg;
  cfg.tau = 0.5;
  cfg.rounds = 5;
  cfg.nu = 0.3;
  cfg.clip = 0.5;
  cfg.denoiser = LaplacianSmoothingDenoiser{1.0};
  cfg.seed = 42;
  cfg.spectrum_rounds = {1, 5};
  cfg.threads = 1;
  const RunResult a = fedsmooth::Run(cfg, p);
  cfg.threads = 4;
  const RunResult b = fedsmooth::Run(cfg, p);
  EXPECT_EQ(a.w_out, b.w_out);
  EXPECT_EQ(a.metrics.ToCsv(), b.metrics.ToCsv());
  ASSERT_EQ(a.metrics.spectra.size(), 2u);
  EXPECT_EQ(a.metrics.spectra[1].dump.ToCsv(), b.metrics.spectra[1].dump.ToCsv());
  cfg.seed = 43;
  EXPECT_NE(fedsmooth::Run(cfg, p).w_out, a.w_out);
}

TEST(RunTest, MetricsRecordEveryRound) {
  const QuadraticProblem p = SmallQuadratic(10);
  FedConfig cfg = NonPrivate();
  cfg.rounds = 7;
  cfg.tau = 0.3;
  const RunResult r = fedsmooth::Run(cfg, p);
  ASSERT_EQ(r.metrics.rounds.size(), 7u);
  for (int t = 0; t < 7; ++t) {
    EXPECT_EQ(r.metrics.rounds[t].round, t + 1);
    EXPECT_EQ(r.metrics.rounds[t].k_selected, 3);
  }
  EXPECT_EQ(r.metrics.rounds.back().val_loss, QuadEval(p.family(), r.w_last).gap);
  const std::string csv = r.metrics.ToCsv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
  EXPECT_FALSE(r.metrics.diverged);
}

TEST(RunTest, PoissonEmptyRoundsAreNoOps) {
  CallbackProblem p(3, 4, 1, ConstantGrad({1.0, 1.0, 1.0}));
  FedConfig cfg = NonPrivate();
  cfg.subsampling = Subsampling::kPoisson;
  cfg.tau = 0.05;
  cfg.rounds = 40;
  cfg.local_steps = 1;
  int empty = 0;
  std::vector<double> prev(3, 0.0);
  const RunResult r = fedsmooth::Run(cfg, p, [&](const RoundMetrics& m, std::span<const double> w) {
    if (m.k_selected == 0) {
      ++empty;
      EXPECT_EQ(std::vector<double>(w.begin(), w.end()), prev);
    }
    prev.assign(w.begin(), w.end());
  });
  EXPECT_EQ(r.metrics.rounds.size(), 40u);
  EXPECT_GT(empty, 10);
}

TEST(RunTest, DivergenceFromNonFiniteGradient) {
  CallbackProblem p(2, 3, 1, ConstantGrad({std::nan(""), 0.0}));
  FedConfig cfg = NonPrivate();
  cfg.rounds = 5;
  const RunResult r = fedsmooth::Run(cfg, p);
  EXPECT_TRUE(r.metrics.diverged);
  EXPECT_TRUE(r.metrics.rounds.empty());
  EXPECT_NE(r.metrics.abort_reason.find("round 1"), std::string::npos);
}

TEST(RunTest, DivergenceFromExplodingLoss) {
  CallbackProblem p(2, 3, 1, ConstantGrad({0.0, 0.0}));
  p.loss_override_ = 1e13;
  FedConfig cfg = NonPrivate();
  cfg.rounds = 5;
  const RunResult r = fedsmooth::Run(cfg, p);
  EXPECT_TRUE(r.metrics.diverged);
  EXPECT_EQ(r.metrics.rounds.size(), 1u);
}

TEST(RunTest, TransposedFlattenSmoothsColumnMajor) {
  const std::vector<double> g = RandomVector(6, 9);
  CallbackProblem p(6, 1, 1, ConstantGrad(g));
  p.shape_ = {2, 3};
  FedConfig cfg = NonPrivate();
  cfg.rounds = 1;
  cfg.local_steps = 1;
  cfg.eta_l = 1.0;
  cfg.clip = 100;
  cfg.denoiser = LaplacianSmoothingDenoiser{1.0};
  cfg.flatten_order = FlattenOrder::kTransposed;
  const RunResult r = fedsmooth::Run(cfg, p);
  // Column-major flattening of the 2 x 3 row-major matrix.
  const std::vector<int> perm = {0, 3, 1, 4, 2, 5};
  std::vector<double> flat(6);
  for (int i = 0; i < 6; ++i) flat[i] = -g[perm[i]];
  const auto smooth = SmoothingOperator(1.0, 6).Apply(flat);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(r.w_last[perm[i]], smooth[i], 1e-14);
  cfg.flatten_order = FlattenOrder::kNative;
  const RunResult native = fedsmooth::Run(cfg, p);
  EXPECT_NE(native.w_last, r.w_last);
  p.shape_ = {4, 2};
  cfg.flatten_order = FlattenOrder::kTransposed;
  EXPECT_THROW(fedsmooth::Run(cfg, p), std::invalid_argument);
}

TEST(RunTest, ValidationRejectsBadConfigs) {
  const QuadraticProblem p = SmallQuadratic();
  FedConfig cfg;
  cfg.nu = 0.0;  // not marked non-private
  EXPECT_THROW(fedsmooth::Run(cfg, p), std::invalid_argument);
  cfg = NonPrivate();
  cfg.tau = 0;
  EXPECT_THROW(fedsmooth::Run(cfg, p), std::invalid_argument);
  cfg = NonPrivate();
  cfg.lr_decay = 1.5;
  EXPECT_THROW(fedsmooth::Run(cfg, p), std::invalid_argument);
  cfg = NonPrivate();
  cfg.denoiser = LaplacianSmoothingDenoiser{-1};
  EXPECT_THROW(fedsmooth::Run(cfg, p), std::invalid_argument);
  EXPECT_EQ(ParseAveraging(AveragingName(Averaging::kGeometric)), Averaging::kGeometric);
  EXPECT_EQ(ParseFlattenOrder("transposed"), FlattenOrder::kTransposed);
  EXPECT_THROW(ParseAveraging("median"), std::invalid_argument);
}

// --- subsampling variance ---

TEST(SubsamplingVarianceTest, MatchesMonteCarlo) {
  const int64_t n = 30;
  std::vector<std::vector<double>> xs;
  for (int64_t j = 0; j < n; ++j) xs.push_back(RandomVector(3, 50 + j));
  std::vector<double> mean(3, 0.0);
  for (const auto& x : xs)
    for (int i = 0; i < 3; ++i) mean[i] += x[i] / n;
  for (int64_t s : {1, 7, 30}) {
    FedConfig cfg = NonPrivate();
    cfg.tau = static_cast<double>(s) / n;
    double total = 0;
    const int reps = 40000;
    for (int r = 0; r < reps; ++r) {
      Rng rng = Substream(2, r, kServerStream);
      const auto sel = SelectClients(cfg, n, rng);
      for (int i = 0; i < 3; ++i) {
        double m = 0;
        for (int64_t j : sel) m += xs[j][i];
        m = m / s - mean[i];
        total += m * m;
      }
    }
    const double analytic = SubsampledMeanVariance(xs, s);
    if (s == n) {
      EXPECT_NEAR(analytic, 0.0, 1e-15);
      EXPECT_NEAR(total / reps, 0.0, 1e-20);
    } else {
      EXPECT_NEAR(total / reps / analytic, 1.0, 0.03) << s;
    }
  }
  EXPECT_THROW(SubsampledMeanVariance(xs, 31), std::invalid_argument);
}

// --- model files ---

TEST(ModelFileTest, LittleEndianLayout) {
  const fs::path path = fs::temp_directory_path() / "fedsmooth_model_test.bin";
  const std::vector<double> w = {1.0, -0.0, 3.5e-300, std::nan(""), 2.0};
  WriteModel(path.string(), w);
  EXPECT_EQ(fs::file_size(path), 8u + 8u * w.size());
  std::ifstream in(path, std::ios::binary);
  unsigned char head[16];
  in.read(reinterpret_cast<char*>(head), 16);
  EXPECT_EQ(head[0], 5);
  for (int i = 1; i < 8; ++i) EXPECT_EQ(head[i], 0);
  // 1.0 = 0x3FF0000000000000, least significant byte first.
  for (int i = 8; i < 14; ++i) EXPECT_EQ(head[i], 0);
  EXPECT_EQ(head[14], 0xF0);
  EXPECT_EQ(head[15], 0x3F);
  const auto back = ReadModel(path.string());
  ASSERT_EQ(back.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(std::bit_cast<uint64_t>(back[i]), std::bit_cast<uint64_t>(w[i]));
  }
  fs::resize_file(path, 20);
  EXPECT_THROW(ReadModel(path.string()), std::runtime_error);
  fs::remove(path);
  EXPECT_THROW(ReadModel(path.string()), std::runtime_error);
}

}  // namespace
}  // namespace fedsmooth
