#include "vsg/features.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "vsg/error.h"
#include "vsg/instancing.h"

namespace vsg {
namespace {

std::pair<int64_t, int64_t> CellRange(int cell, int64_t n) {
  const int64_t begin = cell * n / kOccupancyGrid;
  const int64_t end = std::max(begin + 1, (cell + 1) * n / kOccupancyGrid);
  return {std::min(begin, n - 1), std::min(end, n)};
}

}  // namespace

std::vector<double> PoolOccupancy(const BinaryGrid& crop) {
  const Shape3& s = crop.shape;
  std::vector<double> out(kOccupancyGrid * kOccupancyGrid * kOccupancyGrid, 0.0);
  for (int cz = 0; cz < kOccupancyGrid; ++cz) {
    const auto [z0, z1] = CellRange(cz, s.nz);
    for (int cy = 0; cy < kOccupancyGrid; ++cy) {
      const auto [y0, y1] = CellRange(cy, s.ny);
      for (int cx = 0; cx < kOccupancyGrid; ++cx) {
        const auto [x0, x1] = CellRange(cx, s.nx);
        bool hit = false;
        for (int64_t z = z0; z < z1 && !hit; ++z) {
          for (int64_t y = y0; y < y1 && !hit; ++y) {
            for (int64_t x = x0; x < x1 && !hit; ++x) hit = crop.at(z, y, x) != 0;
          }
        }
        out[(cz * kOccupancyGrid + cy) * kOccupancyGrid + cx] = hit ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

std::vector<double> EdgeFeature(const Box3& subject, const Box3& object, const Shape3& shape) {
  std::vector<double> e(kEdgeFeatureSize, 0.0);
  double dist2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double delta = object.center(a) - subject.center(a);
    e[a] = delta / static_cast<double>(shape[a]);
    dist2 += delta * delta;
  }
  const auto overlap = static_cast<double>(IntersectionVolume(subject, object));
  e[3] = Iou3(subject, object);
  e[4] = overlap / static_cast<double>(subject.volume());
  e[5] = overlap / static_cast<double>(object.volume());
  const double diagonal = std::sqrt(static_cast<double>(shape.nz * shape.nz + shape.ny * shape.ny + shape.nx * shape.nx));
  e[6] = std::sqrt(dist2) / diagonal;
  return e;
}

CaseFeatures Featurize(std::span<const SceneObject> objects, const Grid<uint8_t>* labels, Shape3 shape,
                       bool grounding) {
  if (labels != nullptr && labels->shape != shape) {
    throw Error(ErrorKind::kShapeMismatch, "label map shape differs from the graph shape");
  }
  CaseFeatures f;
  f.shape = shape;
  const double grid_volume = static_cast<double>(shape.size());
  std::map<int, int> index_of;
  for (const auto& o : objects) {
    if (!o.box.valid() || !o.box.within(shape)) {
      throw Error(ErrorKind::kShapeMismatch, "object " + std::to_string(o.id) + " box lies outside the volume");
    }
    index_of[o.id] = static_cast<int>(f.ids.size());
    f.ids.push_back(o.id);
    f.categories.push_back(o.category);
    f.boxes.push_back(o.box);

    std::vector<double> v(kObjectFeatureSize, 0.0);
    const int cat = static_cast<int>(o.category);
    if (cat >= 1 && cat <= 3) v[cat - 1] = 1.0;
    for (int a = 0; a < 3; ++a) {
      v[3 + a] = o.box.center(a) / static_cast<double>(shape[a]);
      v[6 + a] = static_cast<double>(o.box.extent(a)) / static_cast<double>(shape[a]);
    }
    v[9] = std::log10(static_cast<double>(o.box.volume()) / grid_volume);
    if (grounding) {
      std::vector<double> occupancy;
      if (labels != nullptr) {
        occupancy = PoolOccupancy(CropCategory(*labels, o.box, static_cast<uint8_t>(o.category)));
      } else if (o.mask) {
        occupancy = PoolOccupancy(*o.mask);
      } else {
        throw Error(ErrorKind::kMissingMask,
                    "segmentation grounding needs a label map or a mask for object " + std::to_string(o.id));
      }
      std::copy(occupancy.begin(), occupancy.end(), v.begin() + kObjectGeometryFeatures);
    }
    f.objects.push_back(std::move(v));
  }
  for (const auto& [s, o] : CandidatePairs(objects)) {
    const int si = index_of.at(s), oi = index_of.at(o);
    f.pairs.emplace_back(si, oi);
    f.edges.push_back(EdgeFeature(f.boxes[si], f.boxes[oi], shape));
  }
  return f;
}

}  // namespace vsg
