// Copyright 2026 The latentsplit Authors
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

namespace latentsplit {

/// Broad failure classes; the CLI maps each to a distinct exit code.
enum class ErrorKind {
  kValidation,
  kInfeasible,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& message) {
  throw Error(ErrorKind::kValidation, message);
}

[[noreturn]] inline void fail_io(const std::string& message) {
  throw Error(ErrorKind::kIo, message);
}

[[noreturn]] inline void fail_infeasible(const std::string& message) {
  throw Error(ErrorKind::kInfeasible, message);
}

}  // namespace latentsplit
