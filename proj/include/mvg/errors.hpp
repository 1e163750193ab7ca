#pragma once

#include <stdexcept>
#include <string>

namespace mvg {

// Base for every error the library raises. category() is the stable,
// machine-readable tag the CLI prints in its error prefix.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "error"; }
};

#define MVG_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    using Error::Error;                                               \
    const char* category() const noexcept override { return tag; }    \
  }

MVG_DEFINE_ERROR(DimensionError, "dimension");
MVG_DEFINE_ERROR(StateError, "state");
MVG_DEFINE_ERROR(NumericError, "numeric");
MVG_DEFINE_ERROR(ValidationError, "validation");
MVG_DEFINE_ERROR(BuildError, "build");
MVG_DEFINE_ERROR(IoError, "io");
MVG_DEFINE_ERROR(CheckpointError, "checkpoint");
MVG_DEFINE_ERROR(UsageError, "usage");

#undef MVG_DEFINE_ERROR

}  // namespace mvg
