#pragma once

#include <stdexcept>
#include <string>

namespace cova {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad input data or configuration. The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
  using Error::Error;
};

#define COVA_DEFINE_ERROR(Name, Base) \
  class Name : public Base {          \
  public:                             \
    using Base::Base;                 \
  };

COVA_DEFINE_ERROR(SchemaError, ValidationError)
COVA_DEFINE_ERROR(CycleError, ValidationError)
COVA_DEFINE_ERROR(BoundsError, ValidationError)
COVA_DEFINE_ERROR(EmptyPageError, ValidationError)
COVA_DEFINE_ERROR(DuplicateLabelError, ValidationError)
COVA_DEFINE_ERROR(MissingElementError, ValidationError)
COVA_DEFINE_ERROR(ConfigError, ValidationError)
COVA_DEFINE_ERROR(SpecError, ValidationError)
COVA_DEFINE_ERROR(UnknownElementError, ValidationError)
COVA_DEFINE_ERROR(MissingTruthError, ValidationError)
COVA_DEFINE_ERROR(TooFewDomainsError, ValidationError)
COVA_DEFINE_ERROR(EmptyDatasetError, ValidationError)

COVA_DEFINE_ERROR(ShapeError, Error)
COVA_DEFINE_ERROR(EmptyNeighborhoodError, Error)
COVA_DEFINE_ERROR(DivergenceError, Error)
COVA_DEFINE_ERROR(IoError, Error)

#undef COVA_DEFINE_ERROR

}  // namespace cova
