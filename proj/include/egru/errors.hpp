// Copyright 2026 The egru authors
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

namespace egru {

// Base class for recoverable egru errors. The CLI maps each subclass to a
// distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad command line or option combination (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Bad or inconsistent input data: audio, datasets, manifests (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad model or checkpoint bytes, or a model/data mismatch (exit code 4).
class ModelError : public Error {
 public:
  enum class Kind {
    kBadMagic,
    kBadVersion,
    kBadLength,
    kBadCrc,
    kBadCode,
    kMismatch,
    kUnsupported,
  };

  ModelError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Training aborted (non-finite loss or invalid partition).
class TrainError : public Error {
 public:
  using Error::Error;
};

}  // namespace egru
