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

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fedsmooth/attack.h"
#include "fedsmooth/cli.h"
#include "fedsmooth/lapsmooth.h"
#include "fedsmooth/privacy.h"

namespace py = pybind11;

namespace fedsmooth {
namespace {

Mechanism MakeMechanism(const std::string& mech, double tau, double clip,
                        int64_t rounds) {
  Mechanism m;
  m.kind = ParseSubsampling(mech);
  m.tau = tau;
  m.clip = clip;
  m.rounds = rounds;
  m.Validate();
  return m;
}

// Runs the command-line entry point in process; returns (code, out, err).
py::tuple RunCliPy(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"fedsmooth"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace
}  // namespace fedsmooth

PYBIND11_MODULE(_core, m) {
  using namespace fedsmooth;
  m.doc() = "Private federated learning with Laplacian smoothing";

  py::class_<SmoothingOperator>(m, "SmoothingOperator")
      .def(py::init<double, std::size_t>(), py::arg("sigma"), py::arg("dim"))
      .def_property_readonly("sigma", &SmoothingOperator::sigma)
      .def_property_readonly("dim", &SmoothingOperator::dim)
      .def_property_readonly("eigenvalues", &SmoothingOperator::eigenvalues)
      .def("apply",
           [](const SmoothingOperator& op, const std::vector<double>& v) {
             return op.Apply(v);
           })
      .def("apply_forward",
           [](const SmoothingOperator& op, const std::vector<double>& u) {
             return op.ApplyForward(u);
           });

  m.def("effective_dimensions", [](double sigma, std::size_t dim) {
    const EffectiveDims e = EffectiveDimensions(SmoothingOperator(sigma, dim));
    return py::make_tuple(e.d_sigma, e.d_tilde_sigma);
  }, "(d_sigma, d_tilde_sigma) for the given operator.");

  m.def("ls_risk", [](double sigma, const std::vector<double>& v, double nu) {
    const RiskReport r =
        LaplacianSmoothingRisk(SmoothingOperator(sigma, v.size()), v, nu);
    return py::dict(py::arg("bias") = r.bias, py::arg("variance") = r.variance,
                    py::arg("total") = r.total);
  });

  m.def("rdp_closed",
        [](const std::string& mech, double alpha, double tau,
           double nu_over_sens) {
          return RdpClosed(ParseSubsampling(mech), alpha, tau, nu_over_sens);
        },
        py::arg("mech"), py::arg("alpha"), py::arg("tau"),
        py::arg("nu_over_sens"));
  m.def("rdp_uniform_numeric", &RdpUniformNumeric);
  m.def("rdp_poisson_numeric", &RdpPoissonNumeric);
  m.def("default_delta", &DefaultDelta, py::arg("n_clients"),
        py::arg("exponent") = 1.1);

  m.def("calibrate_noise",
        [](double epsilon, double delta, double tau, int64_t rounds,
           double clip, const std::string& mech, int grid) {
          const NoiseCalibration c = CalibrateNoise(
              MakeMechanism(mech, tau, clip, rounds), epsilon, delta, grid);
          return py::dict(py::arg("nu") = c.nu,
                          py::arg("lambda_star") = c.lambda_star,
                          py::arg("alpha") = c.alpha,
                          py::arg("feasible") = c.feasible);
        },
        py::arg("epsilon"), py::arg("delta"), py::arg("tau"),
        py::arg("rounds"), py::arg("clip"), py::arg("mech") = "uniform",
        py::arg("grid") = kDefaultLambdaGrid);

  m.def("budget_from_noise",
        [](double nu, double delta, double tau, int64_t rounds, double clip,
           const std::string& mech) {
          return BudgetFromNoise(MakeMechanism(mech, tau, clip, rounds), nu,
                                 delta);
        },
        py::arg("nu"), py::arg("delta"), py::arg("tau"), py::arg("rounds"),
        py::arg("clip"), py::arg("mech") = "uniform");

  m.def("max_rounds",
        [](double nu1, double tau, double epsilon, double delta,
           double lambda) {
          const MaxRoundsResult r = MaxRounds(nu1, tau, epsilon, delta, lambda);
          return py::dict(py::arg("rounds") = r.rounds,
                          py::arg("bound") = r.bound,
                          py::arg("alpha") = r.alpha,
                          py::arg("feasible") = r.feasible);
        },
        py::arg("nu1"), py::arg("tau"), py::arg("epsilon"), py::arg("delta"),
        py::arg("lam") = 0.5);

  m.def("threshold_auc",
        [](const std::vector<double>& member_losses,
           const std::vector<double>& nonmember_losses) {
          return ThresholdAuc(BalancedAttackSet(member_losses, nonmember_losses));
        });

  m.def("spectrum", [](const std::vector<double>& v) {
    const SpectrumDump d = Spectrum(v);
    return py::make_tuple(d.frequencies, d.magnitudes, LogLogSlope(d));
  });

  m.def("run_cli", &RunCliPy, py::arg("args"),
        "Runs the fedsmooth command line in process; returns (code, stdout, "
        "stderr).");
}
