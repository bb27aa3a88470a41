// Copyright 2026 The zsner Authors. All Rights Reserved.
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

#ifndef ZSNER_ERROR_H_
#define ZSNER_ERROR_H_

#include <stdexcept>
#include <string>

namespace zsner {

// Error categories double as process exit codes for the command-line tool.
enum class ErrorKind {
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
  kIo = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message)
      : Error(ErrorKind::kUsage, message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message)
      : Error(ErrorKind::kData, message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message)
      : Error(ErrorKind::kNumeric, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorKind::kIo, message) {}
};

}  // namespace zsner

#endif  // ZSNER_ERROR_H_
