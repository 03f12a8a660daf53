#pragma once

#include <stdexcept>
#include <string>

namespace spavg {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularMatrix : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct NotPsd : Error {
  using Error::Error;
};
struct TooFewPoints : Error {
  using Error::Error;
};
struct RangeTooLarge : Error {
  using Error::Error;
};
struct NonpositiveR : Error {
  using Error::Error;
};
struct EmptyPattern : Error {
  using Error::Error;
};
struct UnknownPreset : Error {
  using Error::Error;
};
struct UnboundedIntensity : Error {
  using Error::Error;
};
struct ExistenceViolated : Error {
  using Error::Error;
};
struct TruncationTooCoarse : Error {
  using Error::Error;
};
struct GridMismatch : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  using Error::Error;
};
struct NoPairs : Error {
  using Error::Error;
};
struct DegenerateLikelihood : Error {
  using Error::Error;
};
struct Saturated : Error {
  using Error::Error;
};
struct InvalidConfig : Error {
  using Error::Error;
};

/// A fit inside the bootstrap loop failed repeatedly.
struct EstimatorFailure : Error {
  int sample_index;
  std::string estimator_name;
  EstimatorFailure(int b, std::string name, const std::string& what)
      : Error("estimator '" + name + "' failed on bootstrap sample " +
              std::to_string(b) + ": " + what),
        sample_index(b),
        estimator_name(std::move(name)) {}
};

}  // namespace spavg
