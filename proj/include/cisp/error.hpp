#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cisp {

enum class Errc {
  kParameterDomain,      // non-positive / non-finite scalar parameter
  kConstraintViolation,  // CCM rows not normalized
  kDegenerateConstraint, // CCM row sum too close to zero to project
  kShape,                // dimension or layer-shape mismatch
  kWeights,              // non-finite decoder weights
  kParse,                // malformed document
  kArgument,             // invalid argument (n < 2, empty list, ...)
  kNumeric,              // non-finite objective value
  kFileNotFound,
  kMalformedHeader,
  kMalformedPayload,
  kUnsupportedFormat,
  kUnsupportedBitDepth,
  kIo,                   // unwritable path, short write
};

std::string_view errc_name(Errc code) noexcept;

/// Single exception type for the library; `code()` distinguishes the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// True for file-system and image-container failures.
  bool is_io() const noexcept;

 private:
  Errc code_;
};

}  // namespace cisp
