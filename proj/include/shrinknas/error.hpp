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

#include <stdexcept>
#include <string>

namespace shrinknas {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or layout arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered where a finite value is required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computing node has no alive incoming operator.
class DeadNodeError : public Error {
 public:
  using Error::Error;
};

/// File could not be read/written or is malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace shrinknas
