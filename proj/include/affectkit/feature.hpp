// data/feature.hpp

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

#ifndef AFFECTKIT_FEATURE_HPP
#define AFFECTKIT_FEATURE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "affectkit/error.hpp"

namespace affectkit {

// frames x dim row-major matrix of real features (MFBF0, ingested
// embeddings, spectrogram rows, ...).
struct FeatureSequence {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // frames*dim, row-major

  FeatureSequence() = default;
  FeatureSequence(std::size_t frames_, std::size_t dim_)
      : frames(frames_), dim(dim_), data(frames_ * dim_, 0.0) {}

  double& at(std::size_t t, std::size_t j) { return data[t * dim + j]; }
  double at(std::size_t t, std::size_t j) const { return data[t * dim + j]; }

  std::span<double> row(std::size_t t) { return {data.data() + t * dim, dim}; }
  std::span<const double> row(std::size_t t) const {
    return {data.data() + t * dim, dim};
  }
};

}  // namespace affectkit

#endif  // AFFECTKIT_FEATURE_HPP
