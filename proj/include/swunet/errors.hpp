/* Copyright 2026 The swunet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <stdexcept>
#include <string>

namespace swunet {

// Error kinds map one-to-one onto the status codes of the C API.
enum class ErrorKind {
  kArgument = 1,
  kShape,
  kConfig,
  kCheckpoint,
  kData,
  kNotFound,
  kIo,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SWUNET_DEFINE_ERROR(Name, Kind)                       \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what)                    \
        : Error(ErrorKind::Kind, what) {}                     \
  };

SWUNET_DEFINE_ERROR(ArgumentError, kArgument)
SWUNET_DEFINE_ERROR(ShapeError, kShape)
SWUNET_DEFINE_ERROR(ConfigError, kConfig)
SWUNET_DEFINE_ERROR(CheckpointError, kCheckpoint)
SWUNET_DEFINE_ERROR(DataError, kData)
SWUNET_DEFINE_ERROR(NotFoundError, kNotFound)
SWUNET_DEFINE_ERROR(IoError, kIo)
SWUNET_DEFINE_ERROR(NumericError, kNumeric)

#undef SWUNET_DEFINE_ERROR

}  // namespace swunet
