// Copyright 2026 The rlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "rlab/harness.hpp"

namespace rlab::harness
{
RunResult run_rate(const ExperimentSpec& spec);
RunResult run_transport_deriv(const ExperimentSpec& spec);
RunResult run_identity(const ExperimentSpec& spec);
RunResult run_fi(const ExperimentSpec& spec);
RunResult run_commutator_identities(const ExperimentSpec& spec);
RunResult run_commutator_ratio(const ExperimentSpec& spec);
RunResult run_meanfield(const ExperimentSpec& spec);
RunResult run_calibrate(const ExperimentSpec& spec);
}  // namespace rlab::harness
