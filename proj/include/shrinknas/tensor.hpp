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
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace shrinknas {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major double tensor. Copies share storage (handle semantics), so
/// an op's output can be referenced from both the caller and the tape; use
/// clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<double> data();
  std::span<const double> data() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  /// Gradient view; empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  /// Mutable gradient, allocated as zeros on first access. Gradients are
  /// bookkeeping shared through the handle, so this is available on const.
  std::span<double> grad_mut() const;
  void clear_grad();

  Tensor clone() const;
  /// Copy of the values with gradient tracking off.
  Tensor detach() const;

  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }
  const void* id() const { return impl_.get(); }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

/// A trainable tensor with a unique, path-like identifier ("cell2.e1_3.sep3.pw").
struct Parameter {
  std::string id;
  Tensor tensor;
};

}  // namespace shrinknas
