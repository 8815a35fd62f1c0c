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

#ifndef FEDSMOOTH_LAPSMOOTH_H_
#define FEDSMOOTH_LAPSMOOTH_H_

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedsmooth {

// The circulant operator A = I + sigma * L, where L is the Laplacian of the
// cycle graph on `dim` vertices. Inverse application goes through the FFT:
// A is diagonal in the Fourier basis with symbol 1 + 2 sigma (1 - cos(2 pi k / d)).
//
// Immutable after construction; every method is safe to call concurrently.
class SmoothingOperator {
 public:
  // Throws std::invalid_argument if sigma < 0 (or is not finite) or dim == 0.
  SmoothingOperator(double sigma, std::size_t dim);

  double sigma() const { return sigma_; }
  std::size_t dim() const { return dim_; }

  // 1 - sigma * FFT(stencil), stencil = [-2, 1, 0, ..., 0, 1]. For d = 2 the
  // two neighbours coincide and the stencil is [-2, 2]; for d = 1 it is [0].
  const std::vector<std::complex<double>>& fourier_symbol() const {
    return symbol_;
  }

  // Eigenvalues of A^{-1}, Lambda_i = 1 / (1 + 2 sigma (1 - cos(2 pi i / d)))
  // for i = 1..d. Entry i-1 holds Lambda_i, so the last entry is the DC mode.
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

  // Returns u with A u = v. Throws std::invalid_argument on size mismatch.
  std::vector<double> Apply(std::span<const double> v) const;
  void ApplyInPlace(std::span<double> v) const;

  // Returns A u by direct stencil evaluation.
  std::vector<double> ApplyForward(std::span<const double> u) const;

 private:
  void CheckSize(std::size_t n) const;

  double sigma_;
  std::size_t dim_;
  std::vector<std::complex<double>> symbol_;
  std::vector<double> eigenvalues_;
};

struct EffectiveDims {
  double d_sigma = 0.0;        // sum of Lambda_i
  double d_tilde_sigma = 0.0;  // sum of Lambda_i^2
};

EffectiveDims EffectiveDimensions(const SmoothingOperator& op);

// Bias-variance split of E || A^{-1}(v + n) - v ||^2 with n ~ N(0, nu^2 I).
struct RiskReport {
  double bias = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

// Closed-form risk using the real orthonormal Fourier basis. Throws
// std::invalid_argument if nu <= 0 or the sizes disagree.
RiskReport LaplacianSmoothingRisk(const SmoothingOperator& op,
                                  std::span<const double> v_true, double nu);

// Empirical mean of || A^{-1}(v + n) - v ||^2 over `trials` Gaussian draws.
double RiskMonteCarlo(const SmoothingOperator& op,
                      std::span<const double> v_true, double nu,
                      int64_t trials, uint64_t seed);

// Real orthonormal Fourier basis of R^d: the constant vector, then cos/sin
// pairs for k = 1..ceil(d/2)-1, then the alternating vector when d is even.
// `laplacian_eigenvalues` receives 2 (1 - cos(2 pi k / d)) for each basis
// vector. Returned row-major, one basis vector per row.
std::vector<double> RealFourierBasis(std::size_t d,
                                     std::vector<double>* laplacian_eigenvalues);

// Magnitudes of the positive-frequency FFT coefficients 1..floor(d/2).
struct SpectrumDump {
  std::vector<int64_t> frequencies;
  std::vector<double> magnitudes;

  // "freq,magnitude" header, one row per frequency.
  std::string ToCsv() const;
};

// Throws std::invalid_argument if v.size() < 2.
SpectrumDump Spectrum(std::span<const double> v);

// Least-squares slope of log10(magnitude) against log10(frequency). Zero
// magnitudes are skipped. Returns NaN when fewer than two points remain.
double LogLogSlope(const SpectrumDump& dump);

// Forward/inverse complex DFT of arbitrary length (unnormalised forward,
// 1/n-normalised inverse).
std::vector<std::complex<double>> Fft(std::span<const std::complex<double>> x);
std::vector<std::complex<double>> InverseFft(
    std::span<const std::complex<double>> x);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_LAPSMOOTH_H_
