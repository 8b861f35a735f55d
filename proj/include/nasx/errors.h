#pragma once

#include <stdexcept>
#include <string>

namespace nasx {

// Root of every error the library raises. Callers that only care about
// "something in the pipeline rejected this input" catch Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define NASX_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// Search-space language.
NASX_DEFINE_ERROR(SyntaxError);
NASX_DEFINE_ERROR(SchemaError);
NASX_DEFINE_ERROR(ReferenceError);
NASX_DEFINE_ERROR(ParamError);
NASX_DEFINE_ERROR(UnboundedError);
NASX_DEFINE_ERROR(LimitError);

// Registry and graph construction.
NASX_DEFINE_ERROR(DuplicateError);
NASX_DEFINE_ERROR(NoTransitionError);
NASX_DEFINE_ERROR(ShapeError);
NASX_DEFINE_ERROR(CapabilityError);
NASX_DEFINE_ERROR(ResolutionError);

// Runtime and pre-processing.
NASX_DEFINE_ERROR(ShapeMismatch);
NASX_DEFINE_ERROR(GeometryError);

// Evaluation and search.
NASX_DEFINE_ERROR(EstimatorFailure);
NASX_DEFINE_ERROR(WeightError);
NASX_DEFINE_ERROR(NoCompleteTrialError);

// Backends.
NASX_DEFINE_ERROR(VersionError);
NASX_DEFINE_ERROR(CapacityError);

#undef NASX_DEFINE_ERROR

}  // namespace nasx
