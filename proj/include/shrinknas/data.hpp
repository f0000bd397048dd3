// Copyright 2026 The shrinknas Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shrinknas/random.hpp"
#include "shrinknas/tensor.hpp"

namespace shrinknas {

/// In-memory image classification set, NCHW row-major.
struct Dataset {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<double> images;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return channels * height * width; }
  Tensor batch(std::span<const std::size_t> indices) const;
  std::vector<int> batch_labels(std::span<const std::size_t> indices) const;
  /// Throws ConfigError if sizes disagree or a label is out of range.
  void validate() const;
};

struct DataSpec {
  std::string kind = "synthetic-blobs";  // synthetic-blobs | downsampled-digits | image-folder
  std::string path;                      // image-folder root
  std::size_t samples = 1200;
  std::size_t resolution = 8;
  std::size_t classes = 4;
  std::size_t channels = 3;
  double train_fraction = 0.9;
  bool augment = false;
};

/// Each class is a Gaussian blob at a class-specific position whose stripe
/// texture has a class-specific orientation. Colour is drawn per sample, so
/// the class is only visible through spatial structure.
Dataset make_synthetic_blobs(std::size_t samples, std::size_t classes, std::size_t channels,
                             std::size_t resolution, Rng& rng);
/// 5x7 bitmap digits 0..classes-1, randomly shifted and scaled into
/// resolution x resolution, replicated over `channels`.
Dataset make_downsampled_digits(std::size_t samples, std::size_t classes, std::size_t channels,
                                std::size_t resolution, Rng& rng);
/// root/<class>/<file>.pgm|.ppm (binary or ASCII netpbm). Classes are the
/// sorted subdirectory names; images are box-resampled to resolution.
Dataset load_image_folder(const std::string& root, std::size_t channels, std::size_t resolution);

Dataset make_dataset(const DataSpec& spec, std::uint64_t seed);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, first round(fraction * n) indices go to train.
Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

/// Per-channel standardization with statistics from `reference` indices.
void normalize_per_channel(Dataset& data, std::span<const std::size_t> reference);

/// Shuffled mini-batches over a subset. The final short batch is dropped
/// unless the subset is smaller than one batch.
class BatchLoader {
 public:
  BatchLoader(const Dataset& data, std::vector<std::size_t> indices, std::size_t batch_size, std::uint64_t seed,
              bool augment = false);

  std::size_t batches_per_epoch() const;
  void start_epoch();
  bool next(Tensor& images, std::vector<int>& labels);

 private:
  const Dataset* data_;
  std::vector<std::size_t> indices_;
  std::size_t batch_size_;
  bool augment_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

/// Random shift by up to `pad` pixels (zero fill) and horizontal flip with
/// probability 1/2, applied per image in place.
void augment_batch(Tensor& images, std::size_t pad, Rng& rng);

}  // namespace shrinknas
