#ifndef VSG_VOLUME_H_
#define VSG_VOLUME_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

namespace vsg {

// Voxel counts in (z, y, x) order. z is the axial axis, superior first.
struct Shape3 {
  int64_t nz = 1;
  int64_t ny = 1;
  int64_t nx = 1;

  int64_t size() const { return nz * ny * nx; }
  int64_t operator[](int axis) const { return axis == 0 ? nz : axis == 1 ? ny : nx; }
  int64_t index(int64_t z, int64_t y, int64_t x) const { return (z * ny + y) * nx + x; }
  bool contains(int64_t z, int64_t y, int64_t x) const {
    return z >= 0 && y >= 0 && x >= 0 && z < nz && y < ny && x < nx;
  }
  bool operator==(const Shape3&) const = default;
};

// Millimeters per voxel, (z, y, x).
struct Spacing3 {
  double sz = 1.0;
  double sy = 1.0;
  double sx = 1.0;

  double voxel_volume_mm3() const { return sz * sy * sx; }
  bool operator==(const Spacing3&) const = default;
};

// Dense z-major grid.
template <typename T>
struct Grid {
  Shape3 shape;
  std::vector<T> data;

  Grid() = default;
  explicit Grid(Shape3 s, T fill = T{}) : shape(s), data(static_cast<size_t>(s.size()), fill) {}

  T& at(int64_t z, int64_t y, int64_t x) { return data[static_cast<size_t>(shape.index(z, y, x))]; }
  const T& at(int64_t z, int64_t y, int64_t x) const {
    return data[static_cast<size_t>(shape.index(z, y, x))];
  }
  bool operator==(const Grid&) const = default;
};

using BinaryGrid = Grid<uint8_t>;

enum class ValueKind { kUint8, kInt16, kUint16, kFloat32 };

// Scalar volume as stored on disk. The value storage keeps the on-disk type
// so that write/read round trips are bit exact.
class Volume {
 public:
  using Storage = std::variant<std::vector<uint8_t>, std::vector<int16_t>,
                               std::vector<uint16_t>, std::vector<float>>;

  Volume() = default;
  Volume(Shape3 shape, Spacing3 spacing, Storage values);

  template <typename T>
  static Volume FromGrid(const Grid<T>& grid, Spacing3 spacing) {
    return Volume(grid.shape, spacing, Storage(grid.data));
  }

  const Shape3& shape() const { return shape_; }
  const Spacing3& spacing() const { return spacing_; }
  ValueKind kind() const { return static_cast<ValueKind>(values_.index()); }
  const Storage& storage() const { return values_; }

  // Value at flat z-major index, widened to double (exact for all kinds).
  double value(int64_t flat) const;
  std::vector<float> AsFloat() const;

  template <typename T>
  const std::vector<T>& values() const { return std::get<std::vector<T>>(values_); }

  bool operator==(const Volume& other) const;

 private:
  Shape3 shape_;
  Spacing3 spacing_;
  Storage values_;
};

// Category ids carried by label maps and scene objects.
enum class Category : uint8_t { kBackground = 0, kBleeding = 1, kVentricle = 2, kMidline = 3 };

// Semantic segmentation with values in {0, 1, 2, 3}.
struct LabelMap {
  Grid<uint8_t> labels;
  Spacing3 spacing;

  const Shape3& shape() const { return labels.shape; }

  // Throws kSchemaViolation if any voxel is outside {0..3} or not integral.
  static LabelMap FromVolume(const Volume& volume);
  Volume ToVolume() const;
  bool operator==(const LabelMap&) const = default;
};

size_t ValueKindSize(ValueKind kind);

}  // namespace vsg

#endif  // VSG_VOLUME_H_
