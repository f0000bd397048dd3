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
#include <functional>
#include <vector>

#include "shrinknas/tensor.hpp"

namespace shrinknas {

/// Define-by-run record of differentiable operations.
///
/// Ops record themselves on the tape that is active on the calling thread (see
/// TapeScope); with no active tape they run in inference mode and nothing is
/// recorded. A tape is built fresh for each forward pass, so the graph may
/// change between passes as operators are pruned.
class Tape {
 public:
  /// Reads the output gradient and accumulates into input gradients.
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

  /// Seeds d(root)/d(root) = 1 and runs every recorded op that the root depends
  /// on, in reverse order, exactly once. Gradients accumulate; tensors the
  /// root does not depend on are left untouched.
  void backward(Tensor root);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Tape active on this thread, or nullptr.
  static Tape* current();

 private:
  friend class TapeScope;
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn fn;
  };
  std::vector<Node> nodes_;
};

/// Activates a tape for the current thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording on this thread (inference or optimizer updates).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace shrinknas
