#ifndef VSG_ERROR_H_
#define VSG_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace vsg {

enum class ErrorKind {
  kMalformedHeader,
  kUnsupportedDatatype,
  kTruncatedData,
  kUnsupportedDimensionality,
  kNonCanonicalOrientation,
  kIoFailure,
  kSchemaViolation,
  kDanglingRelation,
  kMissingMask,
  kShapeMismatch,
  kEmptyDataset,
  kInfeasibleConfig,
  kInvalidConfig,
  kInvalidArgument,
};

std::string_view ErrorKindName(ErrorKind kind);

// All recoverable failures in the toolkit are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind),
        message_(message) {}

  ErrorKind kind() const { return kind_; }
  // The message without the kind prefix.
  const std::string& message() const { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace vsg

#endif  // VSG_ERROR_H_
