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

#include "fedsmooth/denoise.h"

#include <cmath>
#include <stdexcept>

namespace fedsmooth {

std::vector<double> JamesSteinEstimate(std::span<const double> v, double nu) {
  if (v.size() < 3) {
    throw std::invalid_argument("JamesSteinEstimate: dimension must be >= 3");
  }
  if (!(nu > 0.0)) {
    throw std::invalid_argument("JamesSteinEstimate: nu must be positive");
  }
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double d = static_cast<double>(v.size());
  double factor = 0.0;
  if (sq > 0.0) factor = std::max(0.0, 1.0 - (d - 2.0) * nu * nu / sq);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = factor * v[i];
  return out;
}

std::vector<double> SoftThresholdEstimate(std::span<const double> v,
                                          double nu) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("SoftThresholdEstimate: nu must be positive");
  }
  const double d = static_cast<double>(v.size());
  const double t = d > 1.0 ? nu * std::sqrt(2.0 * std::log(d)) : 0.0;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mag = std::max(0.0, std::abs(v[i]) - t);
    out[i] = std::copysign(mag, v[i]);
    if (mag == 0.0) out[i] = 0.0;
  }
  return out;
}

DenoiserKind ParseDenoiser(const std::string& name, double sigma) {
  if (name == "none") return IdentityDenoiser{};
  if (name == "ls") {
    if (!(sigma >= 0.0)) {
      throw std::invalid_argument("laplacian smoothing needs sigma >= 0");
    }
    return LaplacianSmoothingDenoiser{sigma};
  }
  if (name == "js") return JamesSteinDenoiser{};
  if (name == "th") return SoftThresholdDenoiser{};
  throw std::invalid_argument("unknown denoiser '" + name + "'");
}

std::string DenoiserName(const DenoiserKind& kind) {
  struct Visitor {
    std::string operator()(const IdentityDenoiser&) const { return "none"; }
    std::string operator()(const LaplacianSmoothingDenoiser&) const {
      return "ls";
    }
    std::string operator()(const JamesSteinDenoiser&) const { return "js"; }
    std::string operator()(const SoftThresholdDenoiser&) const { return "th"; }
  };
  return std::visit(Visitor{}, kind);
}

}  // namespace fedsmooth
