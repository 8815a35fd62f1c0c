# Copyright 2026 The fedsmooth Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Private federated learning with Laplacian smoothing."""

from fedsmooth._core import (
    SmoothingOperator,
    budget_from_noise,
    calibrate_noise,
    default_delta,
    effective_dimensions,
    ls_risk,
    max_rounds,
    rdp_closed,
    rdp_poisson_numeric,
    rdp_uniform_numeric,
    run_cli,
    spectrum,
    threshold_auc,
)

__all__ = [
    "SmoothingOperator",
    "budget_from_noise",
    "calibrate_noise",
    "default_delta",
    "effective_dimensions",
    "ls_risk",
    "max_rounds",
    "rdp_closed",
    "rdp_poisson_numeric",
    "rdp_uniform_numeric",
    "run_cli",
    "spectrum",
    "threshold_auc",
]
