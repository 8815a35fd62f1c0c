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

#ifndef FEDSMOOTH_DENOISE_H_
#define FEDSMOOTH_DENOISE_H_

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fedsmooth {

// Post-processors for a noisy aggregate v = x + N(0, nu^2 I).
struct IdentityDenoiser {};
struct LaplacianSmoothingDenoiser {
  double sigma = 0.0;
};
struct JamesSteinDenoiser {};
struct SoftThresholdDenoiser {};

using DenoiserKind = std::variant<IdentityDenoiser, LaplacianSmoothingDenoiser,
                                  JamesSteinDenoiser, SoftThresholdDenoiser>;

// Positive-part James-Stein shrinkage toward zero:
//   v * max(0, 1 - (d - 2) nu^2 / ||v||^2).
// Throws std::invalid_argument if d < 3 or nu <= 0.
std::vector<double> JamesSteinEstimate(std::span<const double> v, double nu);

// Coordinate-wise soft thresholding at the universal threshold
// nu * sqrt(2 ln d). Throws std::invalid_argument if nu <= 0.
std::vector<double> SoftThresholdEstimate(std::span<const double> v, double nu);

// Parses "none", "ls", "js", "th" (sigma is used only by "ls").
DenoiserKind ParseDenoiser(const std::string& name, double sigma);
std::string DenoiserName(const DenoiserKind& kind);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_DENOISE_H_
