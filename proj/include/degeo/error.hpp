#pragma once

#include <stdexcept>
#include <string>

namespace degeo {

// Base of every error the pipeline raises. The CLI maps these onto
// structured diagnostics and a nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define DEGEO_ERROR_KIND(Name, Tag)                        \
  class Name : public Error {                              \
   public:                                                 \
    using Error::Error;                                    \
    const char* kind() const noexcept override { return Tag; } \
  };

DEGEO_ERROR_KIND(FormatError, "format")
DEGEO_ERROR_KIND(LookupError, "lookup")
DEGEO_ERROR_KIND(ArgumentError, "argument")
DEGEO_ERROR_KIND(NumericalError, "numerical")
DEGEO_ERROR_KIND(DetectionError, "detection")
DEGEO_ERROR_KIND(RefinementError, "refinement")
DEGEO_ERROR_KIND(TrainingError, "training")

#undef DEGEO_ERROR_KIND

}  // namespace degeo
