// Copyright 2026 The AUNet-mini Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AUNET_GRAD_CHECK_H_
#define AUNET_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aunet/graph.h"

namespace aunet {

struct GradCheckOptions {
  Real step = 1e-5;        // central-difference half width
  Real tolerance = 1e-6;   // max normwise relative error per input
  // Lower bound on the relative-error denominator. Gradients this small are
  // at the rounding noise of the central difference.
  Real abs_floor = 1e-5;
  std::uint64_t seed = 7;  // seeds the random output projection
  // Entries probed per parameter; 0 probes all of them.
  std::size_t max_entries_per_param = 0;
};

enum class GradCheckStatus { kPassed, kToleranceExceeded, kNonFiniteForward };

struct ParamGradError {
  std::string name;
  std::size_t entries_checked = 0;
  Real max_abs_error = 0;
  // max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|, abs_floor)
  Real rel_error = 0;
};

struct GradCheckReport {
  std::string name;
  Real tolerance = 0;
  GradCheckStatus status = GradCheckStatus::kPassed;
  std::vector<ParamGradError> params;
  double seconds = 0;

  bool passed() const { return status == GradCheckStatus::kPassed; }
  Real max_rel_error() const;
};

// Builds the computation under test on a fresh graph. Inputs being checked
// must be pulled in through Graph::param().
using GradCheckForward = std::function<Var(Graph&)>;

// Compares the analytic gradient of sum(r * forward()) for a fixed random
// projection r against central finite differences for every Param listed.
GradCheckReport grad_check(std::string name, const GradCheckForward& forward,
                           std::span<Param* const> params,
                           const GradCheckOptions& options = {});

// Plain-text table, one row per checked input.
std::string format_grad_check_table(std::span<const GradCheckReport> reports);

}  // namespace aunet

#endif  // AUNET_GRAD_CHECK_H_
