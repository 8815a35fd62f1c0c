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

#ifndef FEDSMOOTH_TYPES_H_
#define FEDSMOOTH_TYPES_H_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace fedsmooth {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A labelled sample set: one row of `features` per entry of `labels`.
struct Dataset {
  RowMatrix features;
  std::vector<int32_t> labels;

  int64_t size() const { return static_cast<int64_t>(labels.size()); }
  int64_t num_features() const { return features.cols(); }
};

}  // namespace fedsmooth

#endif  // FEDSMOOTH_TYPES_H_
