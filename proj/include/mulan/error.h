// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_ERROR_H_
#define MULAN_ERROR_H_

#include <stdexcept>
#include <string>

namespace mulan {

// Root of every error raised by the library. Subclasses name the failing
// contract so callers (and the CLI) can report it precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MULAN_DEFINE_ERROR(Name)      \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  };

MULAN_DEFINE_ERROR(ConfigError)
MULAN_DEFINE_ERROR(LengthError)
MULAN_DEFINE_ERROR(RangeError)
MULAN_DEFINE_ERROR(GraphError)
MULAN_DEFINE_ERROR(NumericError)
MULAN_DEFINE_ERROR(StateError)
MULAN_DEFINE_ERROR(LoadError)
MULAN_DEFINE_ERROR(ParseError)
MULAN_DEFINE_ERROR(IntegrityError)
MULAN_DEFINE_ERROR(SamplingError)
MULAN_DEFINE_ERROR(BatchError)
MULAN_DEFINE_ERROR(TrainingError)
MULAN_DEFINE_ERROR(VocabError)
MULAN_DEFINE_ERROR(SizeError)
MULAN_DEFINE_ERROR(ArgumentError)
MULAN_DEFINE_ERROR(IoError)

#undef MULAN_DEFINE_ERROR

}  // namespace mulan

#endif  // MULAN_ERROR_H_
