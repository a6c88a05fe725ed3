/*
 * Copyright 2026 The rsde Authors.
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

#ifndef RSDE_ERROR_H_
#define RSDE_ERROR_H_

#include <stdexcept>
#include <string>

namespace rsde {

// Error categories surfaced by the library. All derive from rsde::Error so
// callers can catch broadly and still dispatch on the concrete kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

#define RSDE_THROW_IF_NOT(cond, ExceptionType, msg) \
  do {                                              \
    if (!(cond)) {                                  \
      throw ::rsde::ExceptionType(msg);             \
    }                                               \
  } while (false)

}  // namespace rsde

#endif  // RSDE_ERROR_H_
