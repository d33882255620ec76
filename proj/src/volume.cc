#include "vsg/volume.h"

#include <cmath>
#include <cstring>
#include <string>

#include "vsg/error.h"

namespace vsg {

size_t ValueKindSize(ValueKind kind) {
  switch (kind) {
    case ValueKind::kUint8: return 1;
    case ValueKind::kInt16: return 2;
    case ValueKind::kUint16: return 2;
    case ValueKind::kFloat32: return 4;
  }
  return 0;
}

Volume::Volume(Shape3 shape, Spacing3 spacing, Storage values)
    : shape_(shape), spacing_(spacing), values_(std::move(values)) {
  if (shape_.nz < 1 || shape_.ny < 1 || shape_.nx < 1) {
    throw Error(ErrorKind::kInvalidArgument, "volume shape components must be >= 1");
  }
  for (double s : {spacing_.sz, spacing_.sy, spacing_.sx}) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorKind::kInvalidArgument, "volume spacing must be positive and finite");
    }
  }
  const size_t n = std::visit([](const auto& v) { return v.size(); }, values_);
  if (n != static_cast<size_t>(shape_.size())) {
    throw Error(ErrorKind::kShapeMismatch,
                "value count " + std::to_string(n) + " != " + std::to_string(shape_.size()));
  }
}

double Volume::value(int64_t flat) const {
  return std::visit([flat](const auto& v) { return static_cast<double>(v[flat]); }, values_);
}

std::vector<float> Volume::AsFloat() const {
  return std::visit(
      [](const auto& v) {
        std::vector<float> out(v.size());
        for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
        return out;
      },
      values_);
}

bool Volume::operator==(const Volume& other) const {
  if (shape_ != other.shape_ || spacing_ != other.spacing_ || kind() != other.kind()) return false;
  // Bitwise comparison so that NaN payloads in float volumes compare equal.
  return std::visit(
      [&other](const auto& v) {
        using Vec = std::decay_t<decltype(v)>;
        const auto& w = std::get<Vec>(other.values_);
        return v.size() == w.size() &&
               (v.empty() || std::memcmp(v.data(), w.data(), v.size() * sizeof(v[0])) == 0);
      },
      values_);
}

LabelMap LabelMap::FromVolume(const Volume& volume) {
  LabelMap map;
  map.spacing = volume.spacing();
  map.labels = Grid<uint8_t>(volume.shape());
  const int64_t n = volume.shape().size();
  for (int64_t i = 0; i < n; ++i) {
    const double v = volume.value(i);
    if (!(v == 0.0 || v == 1.0 || v == 2.0 || v == 3.0)) {
      throw Error(ErrorKind::kSchemaViolation,
                  "label map voxel " + std::to_string(i) + " has value " + std::to_string(v) +
                      " outside {0,1,2,3}");
    }
    map.labels.data[static_cast<size_t>(i)] = static_cast<uint8_t>(v);
  }
  return map;
}

Volume LabelMap::ToVolume() const { return Volume::FromGrid(labels, spacing); }

}  // namespace vsg
