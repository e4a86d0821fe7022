#pragma once

#include <stdexcept>
#include <string>

namespace mfcm {

// Coarse failure classes; the CLI maps each one to an exit code.
enum class ErrorCategory {
  Input,    // unreadable or malformed input files
  Numeric,  // DSP/tensor contract violations and non-finite values
  Config,   // invalid configuration or incompatible checkpoint
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

template <ErrorCategory C>
class CategorizedError : public Error {
 public:
  explicit CategorizedError(const std::string& message) : Error(C, message) {}
};

using InputError = CategorizedError<ErrorCategory::Input>;
using NumericError = CategorizedError<ErrorCategory::Numeric>;
using ConfigError = CategorizedError<ErrorCategory::Config>;

// wav-io
struct MalformedHeader : InputError { using InputError::InputError; };
struct UnsupportedEncoding : InputError { using InputError::InputError; };
struct TruncatedData : InputError { using InputError::InputError; };
struct IoError : InputError { using InputError::InputError; };
// binary tensor / checkpoint containers
struct FormatError : InputError { using InputError::InputError; };
// dataset
struct MissingSplit : InputError { using InputError::InputError; };
struct EmptyClass : InputError { using InputError::InputError; };
struct LengthMismatch : InputError { using InputError::InputError; };
struct EmptyInput : InputError { using InputError::InputError; };

// dsp
struct SignalTooShort : NumericError { using NumericError::NumericError; };
struct NonPowerOfTwoLength : NumericError { using NumericError::NumericError; };
struct InvalidFrequencyRange : NumericError { using NumericError::NumericError; };
struct DegenerateInput : NumericError { using NumericError::NumericError; };
// tensors / model
struct ShapeMismatch : NumericError { using NumericError::NumericError; };
struct NumericalFault : NumericError { using NumericError::NumericError; };
struct BandTooThin : NumericError { using NumericError::NumericError; };

struct ConfigInvalid : ConfigError { using ConfigError::ConfigError; };
struct CheckpointMismatch : ConfigError { using ConfigError::ConfigError; };

}  // namespace mfcm
