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

#include "fedsmooth/lapsmooth.h"

#include <cassert>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "fedsmooth/rng.h"

namespace fedsmooth {
namespace {

using Complex = std::complex<double>;

// Eigen's FFT caches twiddle tables per length and is not thread safe, so
// each thread keeps its own instance.
Eigen::FFT<double>& ThreadFft() {
  static thread_local Eigen::FFT<double> fft;
  return fft;
}

[[maybe_unused]] double Norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<Complex> Fft(std::span<const Complex> x) {
  std::vector<Complex> out(x.size());
  // kissfft does not handle a single point; its transform is the identity.
  if (x.size() <= 1) return {x.begin(), x.end()};
  ThreadFft().fwd(out.data(), x.data(), static_cast<Eigen::Index>(x.size()));
  return out;
}

std::vector<Complex> InverseFft(std::span<const Complex> x) {
  std::vector<Complex> out(x.size());
  // kissfft does not handle a single point; its transform is the identity.
  if (x.size() <= 1) return {x.begin(), x.end()};
  ThreadFft().inv(out.data(), x.data(), static_cast<Eigen::Index>(x.size()));
  return out;
}

SmoothingOperator::SmoothingOperator(double sigma, std::size_t dim)
    : sigma_(sigma), dim_(dim) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("SmoothingOperator: sigma must be >= 0");
  }
  if (dim == 0) {
    throw std::invalid_argument("SmoothingOperator: dim must be positive");
  }
  std::vector<Complex> stencil(dim, 0.0);
  if (dim == 2) {
    stencil[0] = -2.0;
    stencil[1] = 2.0;
  } else if (dim > 2) {
    stencil[0] = -2.0;
    stencil[1] = 1.0;
    stencil[dim - 1] = 1.0;
  }
  symbol_ = Fft(stencil);
  for (Complex& s : symbol_) s = 1.0 - sigma * s;

  eigenvalues_.resize(dim);
  const double d = static_cast<double>(dim);
  for (std::size_t i = 1; i <= dim; ++i) {
    const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / d);
    eigenvalues_[i - 1] = 1.0 / (1.0 + 2.0 * sigma * (1.0 - c));
  }
}

void SmoothingOperator::CheckSize(std::size_t n) const {
  if (n != dim_) {
    throw std::invalid_argument("SmoothingOperator: expected length " +
                                std::to_string(dim_) + ", got " +
                                std::to_string(n));
  }
}

std::vector<double> SmoothingOperator::Apply(std::span<const double> v) const {
  std::vector<double> out(v.begin(), v.end());
  ApplyInPlace(out);
  return out;
}

void SmoothingOperator::ApplyInPlace(std::span<double> v) const {
  CheckSize(v.size());
  if (sigma_ == 0.0 || dim_ == 1) return;
  std::vector<Complex> buf(v.begin(), v.end());
  auto& fft = ThreadFft();
  const auto n = static_cast<Eigen::Index>(dim_);
  std::vector<Complex> spec(dim_);
  fft.fwd(spec.data(), buf.data(), n);
  for (std::size_t k = 0; k < dim_; ++k) spec[k] /= symbol_[k];
  fft.inv(buf.data(), spec.data(), n);
#ifndef NDEBUG
  double max_imag = 0.0;
  for (const Complex& c : buf) max_imag = std::max(max_imag, std::abs(c.imag()));
  assert(max_imag <= 1e-9 * Norm2(v));
#endif
  for (std::size_t i = 0; i < dim_; ++i) v[i] = buf[i].real();
}

std::vector<double> SmoothingOperator::ApplyForward(
    std::span<const double> u) const {
  CheckSize(u.size());
  std::vector<double> out(u.begin(), u.end());
  if (dim_ == 1) return out;
  const std::size_t d = dim_;
  for (std::size_t i = 0; i < d; ++i) {
    const double left = u[(i + d - 1) % d];
    const double right = u[(i + 1) % d];
    out[i] = (1.0 + 2.0 * sigma_) * u[i] - sigma_ * (left + right);
  }
  return out;
}

EffectiveDims EffectiveDimensions(const SmoothingOperator& op) {
  EffectiveDims dims;
  for (double lam : op.eigenvalues()) {
    dims.d_sigma += lam;
    dims.d_tilde_sigma += lam * lam;
  }
  return dims;
}

std::vector<double> RealFourierBasis(std::size_t d,
                                     std::vector<double>* laplacian_eigenvalues) {
  std::vector<double> basis(d * d, 0.0);
  std::vector<double> eig;
  eig.reserve(d);
  const double dd = static_cast<double>(d);
  std::size_t row = 0;
  auto lap = [&](std::size_t k) {
    return 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / dd));
  };
  for (std::size_t j = 0; j < d; ++j) basis[j] = 1.0 / std::sqrt(dd);
  eig.push_back(0.0);
  ++row;
  const double scale = std::sqrt(2.0 / dd);
  for (std::size_t k = 1; 2 * k < d; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k * j) / dd;
      basis[row * d + j] = scale * std::cos(angle);
      basis[(row + 1) * d + j] = scale * std::sin(angle);
    }
    eig.push_back(lap(k));
    eig.push_back(lap(k));
    row += 2;
  }
  if (d % 2 == 0 && d >= 2) {
    for (std::size_t j = 0; j < d; ++j) {
      basis[row * d + j] = (j % 2 == 0 ? 1.0 : -1.0) / std::sqrt(dd);
    }
    eig.push_back(lap(d / 2));
    ++row;
  }
  assert(row == d);
  if (laplacian_eigenvalues != nullptr) *laplacian_eigenvalues = std::move(eig);
  return basis;
}

RiskReport LaplacianSmoothingRisk(const SmoothingOperator& op,
                                  std::span<const double> v_true, double nu) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("LaplacianSmoothingRisk: nu must be positive");
  }
  const std::size_t d = op.dim();
  if (v_true.size() != d) {
    throw std::invalid_argument("LaplacianSmoothingRisk: size mismatch");
  }
  std::vector<double> lap;
  const std::vector<double> basis = RealFourierBasis(d, &lap);
  const double sigma = op.sigma();
  RiskReport report;
  for (std::size_t i = 0; i < d; ++i) {
    double proj = 0.0;
    for (std::size_t j = 0; j < d; ++j) proj += basis[i * d + j] * v_true[j];
    const double shrink = 1.0 + sigma * lap[i];
    report.bias += sigma * sigma * lap[i] * lap[i] / (shrink * shrink) * proj * proj;
    report.variance += nu * nu / (shrink * shrink);
  }
  report.total = report.bias + report.variance;
  return report;
}

double RiskMonteCarlo(const SmoothingOperator& op,
                      std::span<const double> v_true, double nu,
                      int64_t trials, uint64_t seed) {
  if (trials < 1) {
    throw std::invalid_argument("RiskMonteCarlo: trials must be >= 1");
  }
  const std::size_t d = op.dim();
  if (v_true.size() != d) {
    throw std::invalid_argument("RiskMonteCarlo: size mismatch");
  }
  Rng rng(MixBits(seed));
  std::normal_distribution<double> gauss(0.0, nu);
  std::vector<double> noisy(d);
  double acc = 0.0;
  for (int64_t t = 0; t < trials; ++t) {
    for (std::size_t j = 0; j < d; ++j) noisy[j] = v_true[j] + gauss(rng);
    op.ApplyInPlace(noisy);
    double err = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double e = noisy[j] - v_true[j];
      err += e * e;
    }
    acc += err;
  }
  return acc / static_cast<double>(trials);
}

SpectrumDump Spectrum(std::span<const double> v) {
  if (v.size() < 2) {
    throw std::invalid_argument("Spectrum: need at least two entries");
  }
  std::vector<Complex> in(v.begin(), v.end());
  const std::vector<Complex> coeffs = Fft(in);
  SpectrumDump dump;
  const std::size_t half = v.size() / 2;
  dump.frequencies.reserve(half);
  dump.magnitudes.reserve(half);
  for (std::size_t k = 1; k <= half; ++k) {
    dump.frequencies.push_back(static_cast<int64_t>(k));
    dump.magnitudes.push_back(std::abs(coeffs[k]));
  }
  return dump;
}

std::string SpectrumDump::ToCsv() const {
  std::ostringstream out;
  out.precision(17);
  out << "freq,magnitude\n";
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    out << frequencies[i] << ',' << magnitudes[i] << '\n';
  }
  return out.str();
}

double LogLogSlope(const SpectrumDump& dump) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < dump.frequencies.size(); ++i) {
    if (!(dump.magnitudes[i] > 0.0)) continue;
    const double x = std::log10(static_cast<double>(dump.frequencies[i]));
    const double y = std::log10(dump.magnitudes[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::nan("");
  const double nn = static_cast<double>(n);
  const double denom = nn * sxx - sx * sx;
  if (denom == 0.0) return std::nan("");
  return (nn * sxy - sx * sy) / denom;
}

}  // namespace fedsmooth
