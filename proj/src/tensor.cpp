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

#include "shrinknas/tensor.hpp"

#include <sstream>

#include "shrinknas/error.hpp"

namespace shrinknas {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor shape " + shape_str(shape) + " holds " +
                     std::to_string(shape_numel(shape)) + " elements but " +
                     std::to_string(data.size()) + " were given");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<double>{value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return impl_ ? impl_->data.size() : 0; }

std::span<double> Tensor::data() {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->data;
}

std::span<const double> Tensor::data() const {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->data;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() requires a single-element tensor, got " + shape_str(shape()));
  }
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (!impl_) throw Error("use of undefined tensor");
  impl_->requires_grad = value;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!impl_) return {};
  return impl_->grad;
}

std::span<double> Tensor::grad_mut() const {
  if (!impl_) throw Error("use of undefined tensor");
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::clear_grad() {
  if (impl_) {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
  }
}

Tensor Tensor::clone() const {
  Tensor t(shape(), impl_->data, impl_->requires_grad);
  t.impl_->grad = impl_->grad;
  return t;
}

Tensor Tensor::detach() const { return Tensor(shape(), impl_->data, false); }

}  // namespace shrinknas
