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

#include "shrinknas/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "shrinknas/error.hpp"

namespace shrinknas {

namespace fs = std::filesystem;

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
  const std::size_t sz = image_size();
  std::vector<double> out(indices.size() * sz);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    if (indices[b] >= size()) throw ConfigError("dataset index out of range");
    std::copy_n(images.begin() + static_cast<std::ptrdiff_t>(indices[b] * sz), sz,
                out.begin() + static_cast<std::ptrdiff_t>(b * sz));
  }
  return Tensor({indices.size(), channels, height, width}, std::move(out));
}

std::vector<int> Dataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

void Dataset::validate() const {
  if (images.size() != labels.size() * image_size()) throw ConfigError("dataset: image buffer size mismatch");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) {
      throw ConfigError("dataset: label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

Dataset make_synthetic_blobs(std::size_t samples, std::size_t classes, std::size_t channels,
                             std::size_t resolution, Rng& rng) {
  if (samples == 0 || classes == 0 || channels == 0 || resolution < 4) {
    throw ConfigError("synthetic-blobs: samples, classes, channels must be positive and resolution >= 4");
  }
  struct Style {
    double cx, cy, angle;
  };
  const double r = static_cast<double>(resolution);
  std::vector<Style> styles;
  for (std::size_t c = 0; c < classes; ++c) {
    Style s;
    s.cx = uniform(rng, 0.3, 0.7) * r;
    s.cy = uniform(rng, 0.3, 0.7) * r;
    s.angle = std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
    styles.push_back(std::move(s));
  }
  Dataset d{channels, resolution, resolution, classes, {}, {}};
  d.images.resize(samples * d.image_size());
  const double sigma = 0.3 * r;
  for (std::size_t n = 0; n < samples; ++n) {
    const auto label = static_cast<int>(n % classes);
    const Style& s = styles[static_cast<std::size_t>(label)];
    std::vector<double> colour(channels);
    for (double& c : colour) c = uniform(rng, 0.3, 1.0);
    const double cx = s.cx + uniform(rng, -1.0, 1.0);
    const double cy = s.cy + uniform(rng, -1.0, 1.0);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double ca = std::cos(s.angle), sa = std::sin(s.angle);
    double* img = d.images.data() + n * d.image_size();
    for (std::size_t y = 0; y < resolution; ++y) {
      for (std::size_t x = 0; x < resolution; ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        const double blob = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
        const double stripe = 0.5 + 0.5 * std::cos(2.0 * (dx * ca + dy * sa) + phase);
        for (std::size_t ch = 0; ch < channels; ++ch) {
          img[(ch * resolution + y) * resolution + x] = colour[ch] * blob * stripe + 0.15 * normal(rng);
        }
      }
    }
    d.labels.push_back(label);
  }
  return d;
}

namespace {

// Rows of a 5x7 font, bit 4 is the leftmost column.
constexpr std::array<std::array<std::uint8_t, 7>, 10> kDigits{{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
}};

}  // namespace

Dataset make_downsampled_digits(std::size_t samples, std::size_t classes, std::size_t channels,
                                std::size_t resolution, Rng& rng) {
  if (classes == 0 || classes > 10) throw ConfigError("downsampled-digits supports 1..10 classes");
  if (samples == 0 || channels == 0 || resolution < 4) {
    throw ConfigError("downsampled-digits: samples and channels must be positive and resolution >= 4");
  }
  Dataset d{channels, resolution, resolution, classes, {}, {}};
  d.images.resize(samples * d.image_size());
  const double r = static_cast<double>(resolution);
  for (std::size_t n = 0; n < samples; ++n) {
    const auto label = static_cast<int>(n % classes);
    const auto& glyph = kDigits[static_cast<std::size_t>(label)];
    // Glyph box covers 60..90% of the image height.
    const double scale = uniform(rng, 0.6, 0.9) * r / 7.0;
    const double ox = uniform(rng, 0.0, std::max(0.0, r - 5.0 * scale));
    const double oy = uniform(rng, 0.0, std::max(0.0, r - 7.0 * scale));
    double* img = d.images.data() + n * d.image_size();
    for (std::size_t y = 0; y < resolution; ++y) {
      for (std::size_t x = 0; x < resolution; ++x) {
        const double gx = (static_cast<double>(x) + 0.5 - ox) / scale;
        const double gy = (static_cast<double>(y) + 0.5 - oy) / scale;
        double v = 0.0;
        if (gx >= 0 && gy >= 0 && gx < 5 && gy < 7) {
          const auto row = glyph[static_cast<std::size_t>(gy)];
          v = (row >> (4 - static_cast<int>(gx))) & 1 ? 1.0 : 0.0;
        }
        const double noise = 0.1 * normal(rng);
        for (std::size_t ch = 0; ch < channels; ++ch) img[(ch * resolution + y) * resolution + x] = v + noise;
      }
    }
    d.labels.push_back(label);
  }
  return d;
}

namespace {

struct Netpbm {
  std::size_t channels = 0, width = 0, height = 0;
  std::vector<double> pixels;  // HWC in [0, 1]
};

std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok += c;
  }
  return tok;
}

Netpbm read_netpbm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  const std::string magic = next_token(in);
  Netpbm img;
  bool binary = false;
  if (magic == "P5" || magic == "P2") img.channels = 1;
  else if (magic == "P6" || magic == "P3") img.channels = 3;
  else throw IoError(path.string() + ": unsupported netpbm magic '" + magic + "'");
  binary = magic == "P5" || magic == "P6";
  try {
    img.width = std::stoul(next_token(in));
    img.height = std::stoul(next_token(in));
    const double maxval = std::stod(next_token(in));
    if (maxval <= 0 || maxval > 65535 || img.width == 0 || img.height == 0) throw IoError("bad header");
    const std::size_t n = img.width * img.height * img.channels;
    img.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      if (!binary) {
        v = std::stod(next_token(in));
      } else if (maxval < 256) {
        v = static_cast<unsigned char>(in.get());
      } else {
        const int hi = in.get();
        const int lo = in.get();
        v = hi * 256 + lo;
      }
      if (!in) throw IoError("truncated pixel data");
      img.pixels[i] = v / maxval;
    }
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": malformed netpbm file (" + e.what() + ")");
  }
  return img;
}

}  // namespace

Dataset load_image_folder(const std::string& root, std::size_t channels, std::size_t resolution) {
  if (!fs::is_directory(root)) throw IoError("image folder '" + root + "' does not exist");
  if (channels != 1 && channels != 3) throw ConfigError("image-folder supports 1 or 3 channels");
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::ranges::sort(class_dirs);
  if (class_dirs.empty()) throw IoError("image folder '" + root + "' has no class subdirectories");

  Dataset d{channels, resolution, resolution, class_dirs.size(), {}, {}};
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[c])) {
      const auto ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) files.push_back(entry.path());
    }
    std::ranges::sort(files);
    for (const auto& file : files) {
      const Netpbm img = read_netpbm(file);
      // Box resampling: average the source pixels that fall in each target cell.
      for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t y = 0; y < resolution; ++y) {
          const std::size_t y0 = y * img.height / resolution;
          const std::size_t y1 = std::max(y0 + 1, (y + 1) * img.height / resolution);
          for (std::size_t x = 0; x < resolution; ++x) {
            const std::size_t x0 = x * img.width / resolution;
            const std::size_t x1 = std::max(x0 + 1, (x + 1) * img.width / resolution);
            double acc = 0.0;
            for (std::size_t sy = y0; sy < y1; ++sy) {
              for (std::size_t sx = x0; sx < x1; ++sx) {
                const std::size_t base = (sy * img.width + sx) * img.channels;
                if (img.channels == channels) {
                  acc += img.pixels[base + ch];
                } else if (img.channels == 1) {
                  acc += img.pixels[base];
                } else {
                  acc += (img.pixels[base] + img.pixels[base + 1] + img.pixels[base + 2]) / 3.0;
                }
              }
            }
            d.images.push_back(acc / static_cast<double>((y1 - y0) * (x1 - x0)));
          }
        }
      }
      d.labels.push_back(static_cast<int>(c));
    }
  }
  if (d.labels.empty()) throw IoError("image folder '" + root + "' contains no .pgm/.ppm images");
  return d;
}

Dataset make_dataset(const DataSpec& spec, std::uint64_t seed) {
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  Dataset d;
  if (spec.kind == "synthetic-blobs") {
    d = make_synthetic_blobs(spec.samples, spec.classes, spec.channels, spec.resolution, rng);
  } else if (spec.kind == "downsampled-digits") {
    d = make_downsampled_digits(spec.samples, spec.classes, spec.channels, spec.resolution, rng);
  } else if (spec.kind == "image-folder") {
    d = load_image_folder(spec.path, spec.channels, spec.resolution);
  } else {
    throw ConfigError("unknown dataset kind '" + spec.kind +
                      "' (expected synthetic-blobs, downsampled-digits or image-folder)");
  }
  d.validate();
  return d;
}

Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1], got " + std::to_string(train_fraction));
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(train_fraction * n)));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, n)));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, n)), idx.end());
  return s;
}

void normalize_per_channel(Dataset& data, std::span<const std::size_t> reference) {
  if (reference.empty()) throw ConfigError("normalize_per_channel: empty reference set");
  const std::size_t plane = data.height * data.width;
  for (std::size_t ch = 0; ch < data.channels; ++ch) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i : reference) {
      const double* p = data.images.data() + i * data.image_size() + ch * plane;
      for (std::size_t q = 0; q < plane; ++q) {
        sum += p[q];
        sq += p[q] * p[q];
      }
    }
    const double count = static_cast<double>(reference.size() * plane);
    const double mean = sum / count;
    const double sd = std::sqrt(std::max(sq / count - mean * mean, 0.0));
    const double inv = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
      double* p = data.images.data() + n * data.image_size() + ch * plane;
      for (std::size_t q = 0; q < plane; ++q) p[q] = (p[q] - mean) * inv;
    }
  }
}

BatchLoader::BatchLoader(const Dataset& data, std::vector<std::size_t> indices, std::size_t batch_size,
                         std::uint64_t seed, bool augment)
    : data_(&data), indices_(std::move(indices)), batch_size_(batch_size), augment_(augment), rng_(seed) {
  if (batch_size_ == 0) throw ConfigError("batch size must be positive");
  if (indices_.empty()) throw ConfigError("batch loader: empty index set");
}

std::size_t BatchLoader::batches_per_epoch() const {
  return std::max<std::size_t>(1, indices_.size() / batch_size_);
}

void BatchLoader::start_epoch() {
  shuffle(indices_.begin(), indices_.end(), rng_);
  cursor_ = 0;
}

bool BatchLoader::next(Tensor& images, std::vector<int>& labels) {
  if (cursor_ >= batches_per_epoch()) return false;
  const std::size_t begin = cursor_ * batch_size_;
  const std::size_t end = std::min(begin + batch_size_, indices_.size());
  ++cursor_;
  std::span<const std::size_t> idx(indices_.data() + begin, end - begin);
  images = data_->batch(idx);
  labels = data_->batch_labels(idx);
  if (augment_) augment_batch(images, 1, rng_);
  return true;
}

void augment_batch(Tensor& images, std::size_t pad, Rng& rng) {
  const std::size_t n = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  auto data = images.data();
  std::vector<double> tmp(c * h * w);
  const auto span = static_cast<std::int64_t>(2 * pad + 1);
  for (std::size_t b = 0; b < n; ++b) {
    const std::int64_t sy = static_cast<std::int64_t>(uniform_index(rng, span)) - static_cast<std::int64_t>(pad);
    const std::int64_t sx = static_cast<std::int64_t>(uniform_index(rng, span)) - static_cast<std::int64_t>(pad);
    const bool flip = uniform01(rng) < 0.5;
    double* img = data.data() + b * c * h * w;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const std::int64_t src_y = static_cast<std::int64_t>(y) + sy;
          std::int64_t src_x = static_cast<std::int64_t>(x) + sx;
          if (flip) src_x = static_cast<std::int64_t>(w) - 1 - src_x;
          double v = 0.0;
          if (src_y >= 0 && src_x >= 0 && src_y < static_cast<std::int64_t>(h) && src_x < static_cast<std::int64_t>(w)) {
            v = img[(ch * h + static_cast<std::size_t>(src_y)) * w + static_cast<std::size_t>(src_x)];
          }
          tmp[(ch * h + y) * w + x] = v;
        }
      }
    }
    std::ranges::copy(tmp, img);
  }
}

}  // namespace shrinknas
