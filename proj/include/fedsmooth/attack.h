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

#ifndef FEDSMOOTH_ATTACK_H_
#define FEDSMOOTH_ATTACK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fedsmooth/objectives.h"
#include "fedsmooth/types.h"

namespace fedsmooth {

// Loss-threshold membership inference: a sample is called a training member
// when its loss is at most a threshold t. Leakage is the ROC AUC over t.
struct AttackSet {
  std::vector<double> losses;
  std::vector<uint8_t> membership;  // 1 = training member

  int64_t members() const;
  int64_t nonmembers() const;
};

// Concatenates member and non-member losses, truncating the larger group so
// both have min(|members|, |nonmembers|) entries.
AttackSet BalancedAttackSet(const std::vector<double>& member_losses,
                            const std::vector<double>& nonmember_losses);

// AUC of the score -loss for membership, via the Mann-Whitney rank
// statistic with ties counted as 1/2. Throws std::invalid_argument when
// either class is empty or the lengths disagree.
double ThresholdAuc(const AttackSet& set);

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;

  // "fpr,tpr" header, one row per threshold, starting at (0, 0).
  std::string ToCsv() const;
};

// ROC points of the rule loss <= t, sweeping t over the distinct losses in
// increasing order.
RocCurve ThresholdRoc(const AttackSet& set);

// Trapezoidal area under a ROC curve.
double RocArea(const RocCurve& roc);

struct AttackReport {
  double auc = 0.5;
  int64_t n_members = 0;
  int64_t n_nonmembers = 0;
};

// Per-sample losses of `w` on both sets, balanced, then ThresholdAuc.
AttackReport RunThresholdAttack(const LogisticModel& model,
                                const std::vector<double>& w,
                                const Dataset& members,
                                const Dataset& nonmembers,
                                RocCurve* roc = nullptr);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_ATTACK_H_
