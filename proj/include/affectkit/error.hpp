// util/error.hpp

// Copyright 2026 The affectkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECTKIT_ERROR_HPP
#define AFFECTKIT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace affectkit {

// All toolkit errors carry a machine-readable class tag; the CLI prints
// "<class>: <message>" on one line and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string& msg)
      : std::runtime_error(error_class + ": " + msg),
        error_class_(std::move(error_class)) {}

  const std::string& error_class() const { return error_class_; }

 private:
  std::string error_class_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error("invalid_input", msg) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error("format_error", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io_error", msg) {}
};

struct ContractViolation : Error {
  explicit ContractViolation(const std::string& msg)
      : Error("contract_violation", msg) {}
};

inline void check_input(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInput(msg);
}

}  // namespace affectkit

#endif  // AFFECTKIT_ERROR_HPP
