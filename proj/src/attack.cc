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

#include "fedsmooth/attack.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace fedsmooth {

int64_t AttackSet::members() const {
  return std::count(membership.begin(), membership.end(), uint8_t{1});
}

int64_t AttackSet::nonmembers() const {
  return static_cast<int64_t>(membership.size()) - members();
}

AttackSet BalancedAttackSet(const std::vector<double>& member_losses,
                            const std::vector<double>& nonmember_losses) {
  const std::size_t n =
      std::min(member_losses.size(), nonmember_losses.size());
  AttackSet set;
  set.losses.reserve(2 * n);
  set.losses.insert(set.losses.end(), member_losses.begin(),
                    member_losses.begin() + static_cast<std::ptrdiff_t>(n));
  set.losses.insert(set.losses.end(), nonmember_losses.begin(),
                    nonmember_losses.begin() + static_cast<std::ptrdiff_t>(n));
  set.membership.assign(n, 1);
  set.membership.resize(2 * n, 0);
  return set;
}

double ThresholdAuc(const AttackSet& set) {
  if (set.losses.size() != set.membership.size()) {
    throw std::invalid_argument("AttackSet: losses and membership differ");
  }
  const int64_t n_pos = set.members();
  const int64_t n_neg = set.nonmembers();
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("AUC needs both members and non-members");
  }
  // Rank by score = -loss ascending, i.e. by loss descending; tied blocks
  // share their average rank.
  std::vector<std::size_t> idx(set.losses.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return set.losses[a] > set.losses[b];
  });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && set.losses[idx[j + 1]] == set.losses[idx[i]])
      ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (set.membership[idx[k]]) rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(n_pos), n = static_cast<double>(n_neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

std::string RocCurve::ToCsv() const {
  std::string out = "fpr,tpr\n";
  char buf[64];
  for (std::size_t i = 0; i < fpr.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", fpr[i], tpr[i]);
    out += buf;
  }
  return out;
}

RocCurve ThresholdRoc(const AttackSet& set) {
  const int64_t n_pos = set.members();
  const int64_t n_neg = set.nonmembers();
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("ROC needs both members and non-members");
  }
  std::vector<std::size_t> idx(set.losses.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return set.losses[a] < set.losses[b];
  });
  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double t = set.losses[idx[i]];
    while (i < idx.size() && set.losses[idx[i]] == t) {
      set.membership[idx[i]] ? ++tp : ++fp;
      ++i;
    }
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
  }
  return roc;
}

double RocArea(const RocCurve& roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.fpr.size(); ++i) {
    area += (roc.fpr[i] - roc.fpr[i - 1]) * 0.5 * (roc.tpr[i] + roc.tpr[i - 1]);
  }
  return area;
}

AttackReport RunThresholdAttack(const LogisticModel& model,
                                const std::vector<double>& w,
                                const Dataset& members,
                                const Dataset& nonmembers, RocCurve* roc) {
  const AttackSet set =
      BalancedAttackSet(PerSampleLosses(model, w, members),
                        PerSampleLosses(model, w, nonmembers));
  AttackReport report;
  report.auc = ThresholdAuc(set);
  report.n_members = set.members();
  report.n_nonmembers = set.nonmembers();
  if (roc != nullptr) *roc = ThresholdRoc(set);
  return report;
}

}  // namespace fedsmooth
