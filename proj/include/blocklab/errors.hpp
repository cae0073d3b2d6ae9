// Copyright 2026 The blocklab Authors.
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace blocklab {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A model parameter or config value violates its constraint. The message
/// names the violated constraint.
class ParamError : public Error {
 public:
  using Error::Error;
};

/// A node id (or similar key) does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A size budget was exceeded (tree node cap, enumeration bound).
/// Carries the size reached when the budget tripped so the caller can
/// retry with a smaller depth or a larger cap.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, std::uint64_t partial_size)
      : Error(what), partial_size(partial_size) {}
  std::uint64_t partial_size;
};

/// An operation that requires a tree was handed a structure with a cycle.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// A closed-form bound was requested outside the regime where it is defined.
class BoundDomainError : public Error {
 public:
  using Error::Error;
};

/// File / serialization failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace blocklab
