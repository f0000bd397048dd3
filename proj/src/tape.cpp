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

#include "shrinknas/tape.hpp"

#include <unordered_set>

#include "shrinknas/error.hpp"

namespace shrinknas {

namespace {
thread_local Tape* t_current = nullptr;
}

Tape* Tape::current() { return t_current; }

void Tape::record(std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::backward(Tensor root) {
  if (!root.defined() || root.numel() != 1) {
    throw ShapeError("backward() needs a scalar root, got " +
                     (root.defined() ? shape_str(root.shape()) : std::string("undefined")));
  }
  if (!root.requires_grad()) {
    throw Error("backward() root is not connected to any tensor that requires grad");
  }
  root.grad_mut()[0] += 1.0;

  std::unordered_set<const void*> live{root.id()};
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!live.contains(it->output.id())) continue;
    it->fn();
    for (const Tensor& in : it->inputs) {
      if (in.requires_grad()) live.insert(in.id());
    }
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(t_current) { t_current = &tape; }

TapeScope::~TapeScope() { t_current = previous_; }

NoGradScope::NoGradScope() : previous_(t_current) { t_current = nullptr; }

NoGradScope::~NoGradScope() { t_current = previous_; }

}  // namespace shrinknas
