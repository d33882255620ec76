#ifndef VSG_INSTANCING_H_
#define VSG_INSTANCING_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vsg/geometry.h"
#include "vsg/scene_graph.h"
#include "vsg/volume.h"

namespace vsg {

struct InstancingConfig {
  double min_bleeding_volume_cm3 = 0.05;
  Connectivity connectivity = Connectivity::k26;
  int64_t min_anatomy_voxels = 10;

  void check() const;
};

// Per-category probability volumes (background, bleeding, ventricle, midline).
using ProbabilityMaps = std::array<Grid<float>, 4>;

// Hard labels by argmax; ties go to the lower category id.
LabelMap ArgmaxLabels(const ProbabilityMaps& probabilities, Spacing3 spacing);

// One object spanning every voxel of `category` (fragments included), or
// nothing when fewer than min_anatomy_voxels carry it. Score 1, mask attached.
std::optional<SceneObject> ExtractSingleton(const LabelMap& map, Category category,
                                            const InstancingConfig& config = {}, int id = 0);

// One object per connected bleeding component of sufficient physical volume,
// ids first_id, first_id + 1, ... in component order. Scores are 1, or the
// mean bleeding probability over the component when `bleeding_probability`
// is supplied.
std::vector<SceneObject> ExtractBleedings(const LabelMap& map, const InstancingConfig& config = {},
                                          const Grid<float>* bleeding_probability = nullptr,
                                          int first_id = 1);

// Bleedings (ids 1..n), then the ventricle system, then the midline.
std::vector<SceneObject> ExtractObjects(const LabelMap& map, const InstancingConfig& config = {},
                                        const Grid<float>* bleeding_probability = nullptr);

// Binary crop of `labels == category` inside `box`.
BinaryGrid CropCategory(const Grid<uint8_t>& labels, const Box3& box, uint8_t category);

struct DegradeConfig {
  // Per category, erosion and dilation are each chosen with this probability.
  double morph_probability = 0.2;
  int morph_radius = 1;
  // Components (26-connected, per category) smaller than drop_max_voxels are
  // removed with drop_probability.
  double drop_probability = 0.5;
  int64_t drop_max_voxels = 10;
  // Chance that a voxel on a category boundary takes a neighbour's label.
  double flip_probability = 0.02;

  void check() const;
};

// Simulates an imperfect predicted segmentation. Deterministic per seed.
LabelMap DegradeLabelMap(const LabelMap& map, uint64_t seed, const DegradeConfig& config = {});

}  // namespace vsg

#endif  // VSG_INSTANCING_H_
