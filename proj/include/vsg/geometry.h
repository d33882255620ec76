#ifndef VSG_GEOMETRY_H_
#define VSG_GEOMETRY_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vsg/volume.h"

namespace vsg {

// Axis-aligned box in voxel index space, half-open: voxel v is inside iff
// lo[a] <= v[a] < hi[a] on every axis. Axis order is (z, y, x).
struct Box3 {
  std::array<int64_t, 3> lo{0, 0, 0};
  std::array<int64_t, 3> hi{1, 1, 1};

  bool valid() const { return lo[0] < hi[0] && lo[1] < hi[1] && lo[2] < hi[2]; }
  bool within(const Shape3& shape) const;
  int64_t extent(int axis) const { return hi[axis] - lo[axis]; }
  int64_t volume() const { return extent(0) * extent(1) * extent(2); }
  double center(int axis) const { return 0.5 * static_cast<double>(lo[axis] + hi[axis]); }
  bool contains(int64_t z, int64_t y, int64_t x) const {
    return z >= lo[0] && z < hi[0] && y >= lo[1] && y < hi[1] && x >= lo[2] && x < hi[2];
  }
  bool operator==(const Box3&) const = default;
};

// Number of voxels shared by two boxes.
int64_t IntersectionVolume(const Box3& a, const Box3& b);

double Iou3(const Box3& a, const Box3& b);

std::optional<Box3> BboxOfLabel(const Grid<uint8_t>& labels, uint8_t category);

enum class Connectivity { k6 = 6, k26 = 26 };

struct Components {
  Grid<int32_t> labels;  // 0 = background, 1..count
  int32_t count = 0;
};

// Foreground is any nonzero voxel. Component labels follow the z-major scan
// order of each component's first voxel.
Components ConnectedComponents(const Grid<uint8_t>& mask, Connectivity connectivity);

struct MatchPair {
  int prediction = 0;
  int gt = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<int> unmatched_predictions;
  std::vector<int> unmatched_gt;
};

// Greedy one-to-one matching. Predictions are visited by descending score
// (ties by input index); each takes the unmatched gt of highest IoU (ties by
// gt index) provided IoU >= threshold.
MatchResult MatchDetections(std::span<const Box3> predictions, std::span<const double> scores,
                            std::span<const Box3> gts, double iou_threshold);

}  // namespace vsg

#endif  // VSG_GEOMETRY_H_
