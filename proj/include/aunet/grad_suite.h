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

#ifndef AUNET_GRAD_SUITE_H_
#define AUNET_GRAD_SUITE_H_

#include <cstdint>
#include <vector>

#include "aunet/grad_check.h"
#include "aunet/model.h"

namespace aunet {

struct GradSuiteOptions {
  std::uint64_t seed = 11;
  // Evaluation point of the full-model check; chosen so that no ReLU input
  // lies within one finite-difference step of its kink.
  std::uint64_t model_seed = 2;
  Real operator_tolerance = 1e-5;
  Real model_tolerance = 1e-4;
};

// Finite-difference checks of every differentiable operator plus the PAM and
// MAM chains.
std::vector<GradCheckReport> run_operator_grad_suite(const GradSuiteOptions& options = {});

// Narrow model sized for exhaustive checking on an 8x8 image.
ModelConfig tiny_model_config();

// Joint loss of tiny_model_config() on an 8x8 image with two RoIs, every
// parameter entry probed.
GradCheckReport run_model_grad_check(const GradSuiteOptions& options = {});

}  // namespace aunet

#endif  // AUNET_GRAD_SUITE_H_
