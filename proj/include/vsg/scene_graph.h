#ifndef VSG_SCENE_GRAPH_H_
#define VSG_SCENE_GRAPH_H_

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vsg/geometry.h"
#include "vsg/volume.h"

namespace vsg {

enum class Predicate : uint8_t { kNone = 0, kMidlineShift = 1, kBloodFlow = 2, kAsymmetry = 3 };

constexpr int kNumPredicates = 3;
// Label space of the relation classifier: none + the three predicates.
constexpr int kNumPredicateLabels = 4;

std::string_view CategoryName(Category category);
std::string_view PredicateName(Predicate predicate);

// Object category a predicate requires on the object side of a relation.
Category RequiredObjectCategory(Predicate predicate);
bool IsCompatible(Category subject, Category object, Predicate predicate);

struct SceneObject {
  int id = 0;
  Category category = Category::kBleeding;
  Box3 box;
  double score = 1.0;
  // Binary sub-volume cropped to `box`; not serialized.
  std::shared_ptr<const BinaryGrid> mask;

  bool operator==(const SceneObject& o) const {
    return id == o.id && category == o.category && box == o.box && score == o.score;
  }
};

struct Relation {
  int subject = 0;
  int object = 0;
  Predicate predicate = Predicate::kMidlineShift;
  double score = 1.0;

  bool operator==(const Relation&) const = default;
};

struct SceneGraph {
  std::string case_id;
  Shape3 shape;
  Spacing3 spacing;
  std::vector<SceneObject> objects;
  std::vector<Relation> relations;

  const SceneObject* find(int id) const;
  bool operator==(const SceneGraph&) const = default;
};

enum class Rule {
  kInvalidCategory,
  kScoreOutOfRange,
  kInvalidBox,
  kDuplicateObjectId,
  kSelfRelation,
  kDanglingRelation,
  kInvalidPredicate,
  kSubjectNotBleeding,
  kPredicateCategoryMismatch,
  kDuplicateSingleton,
  kDuplicateRelation,
};

std::string_view RuleName(Rule rule);

struct Violation {
  Rule rule;
  std::vector<int> ids;
  std::string message;
};

std::vector<Violation> Validate(const SceneGraph& graph);

// Ordered (subject id, object id) pairs a relation may connect: bleeding
// subjects against ventricle-system and midline objects, sorted by subject id
// then object id.
std::vector<std::pair<int, int>> CandidatePairs(std::span<const SceneObject> objects);

struct DatasetStats {
  int num_graphs = 0;
  std::map<int, int> bleedings_per_image;
  std::vector<double> bleeding_volumes_cm3;
  // Decade bins keyed by lower edge in cm3 (0 collects everything below 0.1).
  std::map<double, int> bleeding_volume_histogram;
  std::map<int, int> relations_per_image;
  std::map<Predicate, int> relation_counts;
};

// Bleeding volume from the mask voxel count when a mask is attached, else the
// box volume, scaled by the graph spacing.
double BleedingVolumeCm3(const SceneObject& object, const Spacing3& spacing);
DatasetStats ComputeStats(std::span<const SceneGraph> graphs);

}  // namespace vsg

#endif  // VSG_SCENE_GRAPH_H_
