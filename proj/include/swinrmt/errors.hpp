/*
 * Copyright (c) 2026, The SwinRMT Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace swinrmt {

/// Operand extents do not agree with what an operation expects.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration value is outside the domain an operation accepts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Misuse of the gradient tape (non-scalar loss, detached loss, double backward).
class AutogradError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A NaN or Inf showed up in an op result while finite checks were enabled.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& op, const std::string& what)
      : std::runtime_error(what), op_(op) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

/// Checkpoint / config file problems.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swinrmt
