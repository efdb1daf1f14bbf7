#include "cisp/error.hpp"

namespace cisp {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kParameterDomain: return "parameter-domain";
    case Errc::kConstraintViolation: return "constraint-violation";
    case Errc::kDegenerateConstraint: return "degenerate-constraint";
    case Errc::kShape: return "shape";
    case Errc::kWeights: return "weights";
    case Errc::kParse: return "parse";
    case Errc::kArgument: return "argument";
    case Errc::kNumeric: return "numeric";
    case Errc::kFileNotFound: return "file-not-found";
    case Errc::kMalformedHeader: return "malformed-header";
    case Errc::kMalformedPayload: return "malformed-payload";
    case Errc::kUnsupportedFormat: return "unsupported-format";
    case Errc::kUnsupportedBitDepth: return "unsupported-bit-depth";
    case Errc::kIo: return "io";
  }
  return "unknown";
}

bool Error::is_io() const noexcept {
  switch (code_) {
    case Errc::kFileNotFound:
    case Errc::kMalformedHeader:
    case Errc::kMalformedPayload:
    case Errc::kUnsupportedFormat:
    case Errc::kUnsupportedBitDepth:
    case Errc::kIo:
      return true;
    default:
      return false;
  }
}

}  // namespace cisp
