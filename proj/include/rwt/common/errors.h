#pragma once

#include <stdexcept>
#include <string>

namespace rwt {

// Failure classes for on-disk containers. Values are stable; the CLI maps
// them to exit codes.
enum class FormatErrorCode {
  kIo = 1,
  kBadMagic,
  kVersion,
  kTruncated,
  kChecksum,
  kCorrupt,
};

const char* FormatErrorName(FormatErrorCode code);

class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrorCode code, const std::string& what)
      : std::runtime_error(std::string(FormatErrorName(code)) + ": " + what), code_(code) {}
  FormatErrorCode code() const { return code_; }

 private:
  FormatErrorCode code_;
};

// Non-finite gradients or a diverging loss during training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rwt
