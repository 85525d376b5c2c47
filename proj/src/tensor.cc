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

#include "aunet/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <fmt/format.h>

namespace aunet {

std::string Shape::str() const { return fmt::format("[{},{},{},{}]", n, c, h, w); }

namespace {

void validate(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw std::invalid_argument(
        fmt::format("tensor dimensions must be >= 1, got {}", s.str()));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, Real fill) : shape_(shape) {
  validate(shape_);
  data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> values)
    : shape_(shape), data_(std::move(values)) {
  validate(shape_);
  if (data_.size() != shape_.numel()) {
    throw std::invalid_argument(fmt::format(
        "tensor of shape {} needs {} values, got {}", shape_.str(),
        shape_.numel(), data_.size()));
  }
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](Real v) { return std::isfinite(v); });
}

Real Tensor::sum() const {
  Real s = 0;
  for (Real v : data_) s += v;
  return s;
}

Real Tensor::max_abs() const {
  Real m = 0;
  for (Real v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw std::invalid_argument(fmt::format("cannot add tensor {} into {}",
                                            other.shape_.str(), shape_.str()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(Real s) {
  for (Real& v : data_) v *= s;
  return *this;
}

Tensor operator*(const Tensor& t, Real s) {
  Tensor out = t;
  out *= s;
  return out;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out += b;
  return out;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(),
                     a.size() * sizeof(Real)) == 0;
}

}  // namespace aunet
