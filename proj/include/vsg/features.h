#ifndef VSG_FEATURES_H_
#define VSG_FEATURES_H_

#include <span>
#include <utility>
#include <vector>

#include "vsg/geometry.h"
#include "vsg/scene_graph.h"

namespace vsg {

constexpr int kOccupancyGrid = 8;
constexpr int kObjectGeometryFeatures = 10;
constexpr int kObjectFeatureSize = kObjectGeometryFeatures + kOccupancyGrid * kOccupancyGrid * kOccupancyGrid;
constexpr int kEdgeFeatureSize = 7;

// Object feature layout:
//   [0,3)   one-hot category (bleeding, ventricle, midline)
//   [3,6)   box center / shape
//   [6,9)   box extent / shape
//   [9]     log10(box volume / volume of the grid)
//   [10,..) 8x8x8 occupancy of the binarized crop, zero without grounding
//
// Edge feature layout (subject s, object o):
//   [0,3) (center_o - center_s) / shape, [3] box IoU,
//   [4] overlap / |s|, [5] overlap / |o|, [6] center distance / grid diagonal
struct CaseFeatures {
  Shape3 shape;
  std::vector<int> ids;
  std::vector<Category> categories;
  std::vector<Box3> boxes;
  std::vector<std::vector<double>> objects;
  // Candidate pairs as indices into the object arrays, in CandidatePairs order.
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<double>> edges;
};

// Grounding crops `labels` to each object's box and binarizes it by the
// object's category; objects fall back to their attached mask when no label
// map is given. Throws kMissingMask when grounding has neither source.
CaseFeatures Featurize(std::span<const SceneObject> objects, const Grid<uint8_t>* labels, Shape3 shape,
                       bool grounding);

// Max-pools a binary grid onto kOccupancyGrid^3 cells; every cell covers at
// least one voxel even when an axis is shorter than the grid.
std::vector<double> PoolOccupancy(const BinaryGrid& crop);

std::vector<double> EdgeFeature(const Box3& subject, const Box3& object, const Shape3& shape);

}  // namespace vsg

#endif  // VSG_FEATURES_H_
