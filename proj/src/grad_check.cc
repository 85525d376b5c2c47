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

#include "aunet/grad_check.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace aunet {

Real GradCheckReport::max_rel_error() const {
  Real m = 0;
  for (const auto& p : params) m = std::max(m, p.rel_error);
  return m;
}

namespace {

Real project(const Tensor& out, const Tensor& r) {
  Real s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += r[i] * out[i];
  return s;
}

}  // namespace

GradCheckReport grad_check(std::string name, const GradCheckForward& forward,
                           std::span<Param* const> params,
                           const GradCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GradCheckReport report;
  report.name = std::move(name);
  report.tolerance = options.tolerance;

  for (Param* p : params) p->zero_grad();
  Graph graph;
  const Var out = forward(graph);
  const Tensor& out_value = graph.value(out);
  if (!out_value.all_finite()) {
    report.status = GradCheckStatus::kNonFiniteForward;
    return report;
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<Real> uniform(-1.0, 1.0);
  Tensor r(out_value.shape());
  for (Real& v : r.data()) v = uniform(rng);
  graph.backward(out, r);

  auto evaluate = [&]() -> std::pair<Real, bool> {
    Graph g;
    const Var o = forward(g);
    const Tensor& v = g.value(o);
    return {project(v, r), v.all_finite()};
  };

  for (Param* p : params) {
    const Tensor analytic = p->grad;
    std::vector<std::size_t> entries(p->value.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries_per_param > 0 && entries.size() > options.max_entries_per_param) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_param);
      std::sort(entries.begin(), entries.end());
    }
    ParamGradError err{p->name, entries.size(), 0, 0};
    Real scale = 0;
    for (std::size_t i : entries) {
      const Real saved = p->value[i];
      p->value[i] = saved + options.step;
      const auto [plus, plus_ok] = evaluate();
      p->value[i] = saved - options.step;
      const auto [minus, minus_ok] = evaluate();
      p->value[i] = saved;
      if (!plus_ok || !minus_ok) {
        report.status = GradCheckStatus::kNonFiniteForward;
        report.params.push_back(err);
        return report;
      }
      const Real numeric = (plus - minus) / (2 * options.step);
      err.max_abs_error = std::max(err.max_abs_error, std::abs(numeric - analytic[i]));
      scale = std::max({scale, std::abs(numeric), std::abs(analytic[i])});
    }
    err.rel_error = err.max_abs_error / std::max(scale, options.abs_floor);
    if (err.rel_error > options.tolerance) {
      report.status = GradCheckStatus::kToleranceExceeded;
    }
    report.params.push_back(err);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_grad_check_table(std::span<const GradCheckReport> reports) {
  std::string table = fmt::format("{:<28} {:<18} {:>8} {:>12} {:>12} {:>10}  {}\n",
                                  "check", "input", "entries", "abs err", "rel err",
                                  "tolerance", "status");
  for (const auto& r : reports) {
    const char* status = r.status == GradCheckStatus::kPassed              ? "ok"
                         : r.status == GradCheckStatus::kNonFiniteForward ? "NON-FINITE"
                                                                          : "FAIL";
    if (r.params.empty()) {
      table += fmt::format("{:<28} {:<18} {:>8} {:>12} {:>12} {:>10.0e}  {}\n", r.name, "-",
                           0, "-", "-", r.tolerance, status);
    }
    for (const auto& p : r.params) {
      table += fmt::format("{:<28} {:<18} {:>8} {:>12.3e} {:>12.3e} {:>10.0e}  {}\n", r.name,
                           p.name, p.entries_checked, p.max_abs_error, p.rel_error,
                           r.tolerance,
                           r.status == GradCheckStatus::kNonFiniteForward ? "NON-FINITE"
                           : p.rel_error > r.tolerance                    ? "FAIL"
                                                                          : "ok");
    }
  }
  return table;
}

}  // namespace aunet
