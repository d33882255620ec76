#include "vsg/error.h"

namespace vsg {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedHeader: return "malformed-header";
    case ErrorKind::kUnsupportedDatatype: return "unsupported-datatype";
    case ErrorKind::kTruncatedData: return "truncated-data";
    case ErrorKind::kUnsupportedDimensionality: return "unsupported-dimensionality";
    case ErrorKind::kNonCanonicalOrientation: return "non-canonical-orientation";
    case ErrorKind::kIoFailure: return "io-failure";
    case ErrorKind::kSchemaViolation: return "schema-violation";
    case ErrorKind::kDanglingRelation: return "dangling-relation";
    case ErrorKind::kMissingMask: return "missing-mask";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kEmptyDataset: return "empty-dataset";
    case ErrorKind::kInfeasibleConfig: return "infeasible-config";
    case ErrorKind::kInvalidConfig: return "invalid-config";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

}  // namespace vsg
