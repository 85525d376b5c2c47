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

#ifndef AUNET_TENSOR_H_
#define AUNET_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace aunet {

using Real = double;

// Extents of a dense NCHW tensor. Every dimension is at least 1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

// Dense 4-D (batch, channel, height, width) array with contiguous storage.
class Tensor {
 public:
  Tensor() : Tensor(Shape{}) {}
  explicit Tensor(Shape shape, Real fill = 0);
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  const std::vector<Real>& values() const { return data_; }

  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w + w;
  }
  Real& operator()(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  Real operator()(int n, int c, int h, int w) const {
    return data_[index(n, c, h, w)];
  }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  // Pointer to the start of plane (n, c).
  Real* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const Real* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  void fill(Real v);
  bool all_finite() const;
  Real sum() const;
  Real max_abs() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(Real s);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

Tensor operator*(const Tensor& t, Real s);
Tensor operator+(const Tensor& a, const Tensor& b);

// Bitwise comparison, used for determinism checks.
bool bitwise_equal(const Tensor& a, const Tensor& b);

// Trainable tensor with an additive gradient accumulator of identical shape.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string param_name, Tensor initial)
      : name(std::move(param_name)),
        value(std::move(initial)),
        grad(Tensor::zeros_like(value)) {}

  void zero_grad() { grad.fill(0); }
  std::size_t size() const { return value.size(); }
};

}  // namespace aunet

#endif  // AUNET_TENSOR_H_
