#ifndef VSG_PHANTOM_H_
#define VSG_PHANTOM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "vsg/instancing.h"
#include "vsg/scene_graph.h"
#include "vsg/volume.h"

namespace vsg {

struct PhantomConfig {
  Shape3 shape{64, 96, 96};
  Spacing3 spacing{2.5, 2.0, 2.0};
  int min_bleedings = 1;
  int max_bleedings = 7;
  // P(n bleedings) proportional to decay^(n - min_bleedings).
  double bleeding_count_decay = 0.9;
  // Volume ranges refer to the default grid and scale with the physical
  // volume of the configured grid.
  double min_volume_cm3 = 0.1;
  double max_volume_cm3 = 100.0;
  double related_min_volume_cm3 = 2.0;
  double related_max_volume_cm3 = 40.0;
  // Per-bleeding planting probabilities.
  double p_blood_flow = 0.35;
  double p_asymmetry = 0.3;
  double p_midline_shift = 0.3;
  // Per lobe: a detached inferior horn.
  double p_fragmented_ventricle = 0.3;
  int max_attempts = 50;
  // Segmentation noise for the sggen benchmark.
  DegradeConfig noise;

  void check() const;
};

nlohmann::json PhantomConfigToJson(const PhantomConfig& config);
PhantomConfig PhantomConfigFromJson(const nlohmann::json& doc);

// Box separation thresholds shared by the generator and the rule classifier.
// Gaps are Chebyshev distances between half-open boxes (negative = overlap).
constexpr int64_t kAsymmetryGapMin = 2;
constexpr int64_t kAsymmetryGapMax = 3;
constexpr int64_t kVentricleClearGap = 7;
constexpr int64_t kShiftGapMax = 3;
constexpr int64_t kMidlineClearGap = 8;
constexpr int64_t kBleedingSeparation = 3;

int64_t BoxGap(const Box3& a, const Box3& b);

struct Phantom {
  LabelMap labels;
  SceneGraph graph;
  // Ventricle voxels before bleedings were painted over them.
  BinaryGrid ventricle_anatomy;
  // Painting instance per voxel: 0 background, 1 ventricle system,
  // 2 midline, 3 + k bleeding k.
  Grid<uint16_t> instances;
  int attempts = 0;
};

// Deterministic per (config, seed). Throws kInfeasibleConfig when no
// consistent layout is found within max_attempts.
Phantom GeneratePhantom(const PhantomConfig& config, uint64_t seed);

struct RuleOutcome {
  std::vector<Relation> relations;
  // Bleeding/anatomy pairs whose gap falls between the decision bands.
  std::vector<std::pair<int, int>> ambiguous;
};

// Fixed box-gap rules: overlap -> blood-flow, gap 2-3 to the ventricle
// system -> asymmetry, gap 0-3 to the midline -> midline-shift.
RuleOutcome ClassifyByGeometry(std::span<const SceneObject> objects);

}  // namespace vsg

#endif  // VSG_PHANTOM_H_
