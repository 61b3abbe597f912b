// diffcore/tensor.hpp

// Copyright 2026 The affectkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECTKIT_TENSOR_HPP
#define AFFECTKIT_TENSOR_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "affectkit/error.hpp"
#include "affectkit/rng.hpp"

namespace affectkit {

using EigenRowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<EigenRowMat>;
using ConstMatMap = Eigen::Map<const EigenRowMat>;
using StridedMap =
    Eigen::Map<EigenRowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap =
    Eigen::Map<const EigenRowMat, 0, Eigen::OuterStride<>>;

// Dense row-major value tensor.  Rank is small (<= 3 in this toolkit); the
// shape is carried explicitly so layer code can validate wiring.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)),
        data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                              std::multiplies<>()),
              0.0) {}
  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  // Metadata-only reshape; the element count must be preserved.
  void reshape(std::vector<std::size_t> shape) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(),
                                          std::size_t{1}, std::multiplies<>());
    check_input(n == data_.size(), "reshape changes element count");
    shape_ = std::move(shape);
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  // 2D Eigen view over the full buffer.
  MatMap mat(std::size_t rows, std::size_t cols) {
    check_input(rows * cols == data_.size(), "matrix view shape mismatch");
    return MatMap(data_.data(), static_cast<Eigen::Index>(rows),
                  static_cast<Eigen::Index>(cols));
  }
  ConstMatMap mat(std::size_t rows, std::size_t cols) const {
    check_input(rows * cols == data_.size(), "matrix view shape mismatch");
    return ConstMatMap(data_.data(), static_cast<Eigen::Index>(rows),
                       static_cast<Eigen::Index>(cols));
  }

  // View of time step t of a [batch, frames, width] tensor as [batch, width].
  StridedMap step(std::size_t t) {
    return StridedMap(data_.data() + t * shape_[2],
                      static_cast<Eigen::Index>(shape_[0]),
                      static_cast<Eigen::Index>(shape_[2]),
                      Eigen::OuterStride<>(
                          static_cast<Eigen::Index>(shape_[1] * shape_[2])));
  }
  ConstStridedMap step(std::size_t t) const {
    return ConstStridedMap(data_.data() + t * shape_[2],
                           static_cast<Eigen::Index>(shape_[0]),
                           static_cast<Eigen::Index>(shape_[2]),
                           Eigen::OuterStride<>(static_cast<Eigen::Index>(
                               shape_[1] * shape_[2])));
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                             std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

// Trainable value with its gradient accumulator; shapes always match.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string name_, Tensor value_)
      : name(std::move(name_)), value(std::move(value_)),
        grad(value.shape()) {}
};

inline void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->grad.zero();
}

}  // namespace affectkit

#endif  // AFFECTKIT_TENSOR_HPP
