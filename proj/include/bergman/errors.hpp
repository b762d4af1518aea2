#pragma once

#include <stdexcept>
#include <string>

namespace bergman {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PerturbationTooLarge : Error { using Error::Error; };
struct CalibrationFailed : Error { using Error::Error; };
struct NoAdmissibleDelta : Error { using Error::Error; };
struct SingularKernel : Error { using Error::Error; };
struct DegenerateGeneratingForm : Error { using Error::Error; };
struct UnsupportedDomain : Error { using Error::Error; };
struct NonIntegrable : Error { using Error::Error; };
struct IllConditionedGram : Error { using Error::Error; };
struct NotInLp : Error { using Error::Error; };

/// Bad user configuration; carries the offending key.
struct ConfigError : Error {
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key(std::move(key)) {}
  std::string key;
};

}  // namespace bergman
