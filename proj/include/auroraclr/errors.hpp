// Copyright 2026 The auroraclr Authors.
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

namespace auroraclr {

// Base of every error thrown by the library. The CLI maps NumericError to
// exit code 3 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or rank disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input outside an operation's mathematical domain (log of x <= 0, division by zero).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Violated precondition on call structure (non-scalar loss, i == j, bad involution).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite value encountered during a numeric computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A row whose Euclidean norm is too small to normalize.
class DegenerateEmbeddingError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or mismatched on-disk artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable user input (files, directories, label tables).
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace auroraclr
