/*
 * Copyright 2026 The Uplift Eval Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UPLIFT_ERRORS_H_
#define UPLIFT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace uplift {

// Category of a library failure. The CLI maps these onto exit codes.
enum class ErrorKind {
  kParse,
  kOverlapViolation,
  kDomain,
  kDimension,
  kBounds,
  kValidation,
  kDegenerateWindow,
  kUndefined,
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

class UpliftError : public std::runtime_error {
 public:
  UpliftError(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw UpliftError(kind, message);
}

}  // namespace uplift

#endif  // UPLIFT_ERRORS_H_
