#include "vsg/geometry.h"

#include <algorithm>
#include <numeric>

#include "vsg/error.h"

namespace vsg {

bool Box3::within(const Shape3& shape) const {
  for (int a = 0; a < 3; ++a) {
    if (lo[a] < 0 || hi[a] > shape[a]) return false;
  }
  return true;
}

int64_t IntersectionVolume(const Box3& a, const Box3& b) {
  int64_t volume = 1;
  for (int axis = 0; axis < 3; ++axis) {
    const int64_t overlap = std::min(a.hi[axis], b.hi[axis]) - std::max(a.lo[axis], b.lo[axis]);
    if (overlap <= 0) return 0;
    volume *= overlap;
  }
  return volume;
}

double Iou3(const Box3& a, const Box3& b) {
  const int64_t inter = IntersectionVolume(a, b);
  if (inter == 0) return 0.0;
  const int64_t uni = a.volume() + b.volume() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<Box3> BboxOfLabel(const Grid<uint8_t>& labels, uint8_t category) {
  const Shape3& s = labels.shape;
  Box3 box{{s.nz, s.ny, s.nx}, {0, 0, 0}};
  bool found = false;
  for (int64_t z = 0; z < s.nz; ++z) {
    for (int64_t y = 0; y < s.ny; ++y) {
      const uint8_t* row = &labels.data[static_cast<size_t>(s.index(z, y, 0))];
      for (int64_t x = 0; x < s.nx; ++x) {
        if (row[x] != category) continue;
        found = true;
        box.lo = {std::min(box.lo[0], z), std::min(box.lo[1], y), std::min(box.lo[2], x)};
        box.hi = {std::max(box.hi[0], z + 1), std::max(box.hi[1], y + 1), std::max(box.hi[2], x + 1)};
      }
    }
  }
  if (!found) return std::nullopt;
  return box;
}

Components ConnectedComponents(const Grid<uint8_t>& mask, Connectivity connectivity) {
  const Shape3& s = mask.shape;
  Components out{Grid<int32_t>(s, 0), 0};

  std::vector<std::array<int, 3>> offsets;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dz) + std::abs(dy) + std::abs(dx);
        if (manhattan == 0) continue;
        if (connectivity == Connectivity::k6 && manhattan != 1) continue;
        offsets.push_back({dz, dy, dx});
      }
    }
  }

  std::vector<int64_t> stack;
  for (int64_t z = 0; z < s.nz; ++z) {
    for (int64_t y = 0; y < s.ny; ++y) {
      for (int64_t x = 0; x < s.nx; ++x) {
        const int64_t seed = s.index(z, y, x);
        if (mask.data[seed] == 0 || out.labels.data[seed] != 0) continue;
        const int32_t label = ++out.count;
        out.labels.data[seed] = label;
        stack.push_back(seed);
        while (!stack.empty()) {
          const int64_t flat = stack.back();
          stack.pop_back();
          const int64_t cz = flat / (s.ny * s.nx);
          const int64_t cy = (flat / s.nx) % s.ny;
          const int64_t cx = flat % s.nx;
          for (const auto& o : offsets) {
            const int64_t nz = cz + o[0], ny = cy + o[1], nx = cx + o[2];
            if (!s.contains(nz, ny, nx)) continue;
            const int64_t n = s.index(nz, ny, nx);
            if (mask.data[n] != 0 && out.labels.data[n] == 0) {
              out.labels.data[n] = label;
              stack.push_back(n);
            }
          }
        }
      }
    }
  }
  return out;
}

MatchResult MatchDetections(std::span<const Box3> predictions, std::span<const double> scores,
                            std::span<const Box3> gts, double iou_threshold) {
  if (scores.size() != predictions.size()) {
    throw Error(ErrorKind::kShapeMismatch, "one score per prediction required");
  }
  std::vector<int> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });

  MatchResult result;
  std::vector<bool> gt_taken(gts.size(), false);
  for (int p : order) {
    int best = -1;
    double best_iou = -1.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double iou = Iou3(predictions[p], gts[g]);
      if (iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= iou_threshold) {
      gt_taken[best] = true;
      result.pairs.push_back({p, best, best_iou});
    } else {
      result.unmatched_predictions.push_back(p);
    }
  }
  std::sort(result.unmatched_predictions.begin(), result.unmatched_predictions.end());
  for (size_t g = 0; g < gts.size(); ++g) {
    if (!gt_taken[g]) result.unmatched_gt.push_back(static_cast<int>(g));
  }
  return result;
}

}  // namespace vsg
