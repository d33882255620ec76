#include "vsg/scene_graph.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace vsg {

std::string_view CategoryName(Category category) {
  switch (category) {
    case Category::kBackground: return "background";
    case Category::kBleeding: return "bleeding";
    case Category::kVentricle: return "ventricle-system";
    case Category::kMidline: return "midline";
  }
  return "invalid";
}

std::string_view PredicateName(Predicate predicate) {
  switch (predicate) {
    case Predicate::kNone: return "none";
    case Predicate::kMidlineShift: return "midline-shift";
    case Predicate::kBloodFlow: return "blood-flow";
    case Predicate::kAsymmetry: return "ventricle-asymmetry";
  }
  return "invalid";
}

Category RequiredObjectCategory(Predicate predicate) {
  return predicate == Predicate::kMidlineShift ? Category::kMidline : Category::kVentricle;
}

bool IsCompatible(Category subject, Category object, Predicate predicate) {
  if (predicate == Predicate::kNone) return true;
  return subject == Category::kBleeding && object == RequiredObjectCategory(predicate);
}

const SceneObject* SceneGraph::find(int id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

std::string_view RuleName(Rule rule) {
  switch (rule) {
    case Rule::kInvalidCategory: return "invalid category";
    case Rule::kScoreOutOfRange: return "score out of range";
    case Rule::kInvalidBox: return "invalid box";
    case Rule::kDuplicateObjectId: return "duplicate object id";
    case Rule::kSelfRelation: return "self relation";
    case Rule::kDanglingRelation: return "dangling relation";
    case Rule::kInvalidPredicate: return "invalid predicate";
    case Rule::kSubjectNotBleeding: return "subject not bleeding";
    case Rule::kPredicateCategoryMismatch: return "predicate/object-category mismatch";
    case Rule::kDuplicateSingleton: return "duplicate singleton category";
    case Rule::kDuplicateRelation: return "duplicate relation";
  }
  return "unknown";
}

namespace {

bool ValidCategory(Category c) {
  return c == Category::kBleeding || c == Category::kVentricle || c == Category::kMidline;
}

bool ValidScore(double s) { return std::isfinite(s) && s >= 0.0 && s <= 1.0; }

}  // namespace

std::vector<Violation> Validate(const SceneGraph& graph) {
  std::vector<Violation> out;
  auto add = [&out](Rule rule, std::vector<int> ids, std::string detail) {
    out.push_back({rule, std::move(ids), std::string(RuleName(rule)) + ": " + detail});
  };

  std::map<int, int> id_count;
  std::map<Category, std::vector<int>> by_category;
  for (const auto& o : graph.objects) {
    ++id_count[o.id];
    if (!ValidCategory(o.category)) {
      add(Rule::kInvalidCategory, {o.id},
          "object " + std::to_string(o.id) + " has category " + std::to_string(static_cast<int>(o.category)));
    } else {
      by_category[o.category].push_back(o.id);
    }
    if (!ValidScore(o.score)) {
      add(Rule::kScoreOutOfRange, {o.id}, "object " + std::to_string(o.id) + " score outside [0,1]");
    }
    if (!o.box.valid() || !o.box.within(graph.shape)) {
      add(Rule::kInvalidBox, {o.id}, "object " + std::to_string(o.id) + " box is empty or outside the volume");
    }
  }
  for (const auto& [id, count] : id_count) {
    if (count > 1) add(Rule::kDuplicateObjectId, {id}, "id " + std::to_string(id) + " used " + std::to_string(count) + " times");
  }
  for (Category singleton : {Category::kVentricle, Category::kMidline}) {
    const auto it = by_category.find(singleton);
    if (it != by_category.end() && it->second.size() > 1) {
      add(Rule::kDuplicateSingleton, it->second,
          std::to_string(it->second.size()) + " objects of category " + std::string(CategoryName(singleton)));
    }
  }

  std::set<std::tuple<int, int, int>> seen;
  for (const auto& r : graph.relations) {
    const std::string label = std::to_string(r.subject) + "->" + std::to_string(r.object);
    if (!ValidScore(r.score)) add(Rule::kScoreOutOfRange, {r.subject, r.object}, "relation " + label + " score outside [0,1]");
    if (r.subject == r.object) {
      add(Rule::kSelfRelation, {r.subject}, "relation " + label + " links an object to itself");
      continue;
    }
    const SceneObject* subject = graph.find(r.subject);
    const SceneObject* object = graph.find(r.object);
    if (subject == nullptr || object == nullptr) {
      add(Rule::kDanglingRelation, {r.subject, r.object}, "relation " + label + " references a missing object");
      continue;
    }
    const int p = static_cast<int>(r.predicate);
    if (p < 1 || p > kNumPredicates) {
      add(Rule::kInvalidPredicate, {r.subject, r.object}, "relation " + label + " has predicate " + std::to_string(p));
      continue;
    }
    if (!seen.insert({r.subject, r.object, p}).second) {
      add(Rule::kDuplicateRelation, {r.subject, r.object}, "relation " + label + " with predicate " + std::string(PredicateName(r.predicate)) + " repeated");
    }
    if (ValidCategory(subject->category) && subject->category != Category::kBleeding) {
      add(Rule::kSubjectNotBleeding, {r.subject}, "relation " + label + " subject is " + std::string(CategoryName(subject->category)));
    }
    if (ValidCategory(object->category) && object->category != RequiredObjectCategory(r.predicate)) {
      add(Rule::kPredicateCategoryMismatch, {r.subject, r.object},
          "relation " + label + " predicate " + std::string(PredicateName(r.predicate)) + " cannot target " +
              std::string(CategoryName(object->category)));
    }
  }
  return out;
}

std::vector<std::pair<int, int>> CandidatePairs(std::span<const SceneObject> objects) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& s : objects) {
    if (s.category != Category::kBleeding) continue;
    for (const auto& o : objects) {
      if (o.category == Category::kVentricle || o.category == Category::kMidline) pairs.emplace_back(s.id, o.id);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

double BleedingVolumeCm3(const SceneObject& object, const Spacing3& spacing) {
  int64_t voxels = 0;
  if (object.mask) {
    for (uint8_t v : object.mask->data) voxels += v != 0;
  } else {
    voxels = object.box.volume();
  }
  return static_cast<double>(voxels) * spacing.voxel_volume_mm3() / 1000.0;
}

DatasetStats ComputeStats(std::span<const SceneGraph> graphs) {
  DatasetStats stats;
  stats.num_graphs = static_cast<int>(graphs.size());
  for (const auto& g : graphs) {
    int bleedings = 0;
    for (const auto& o : g.objects) {
      if (o.category != Category::kBleeding) continue;
      ++bleedings;
      const double cm3 = BleedingVolumeCm3(o, g.spacing);
      stats.bleeding_volumes_cm3.push_back(cm3);
      double edge = 0.0;
      for (double e : {0.1, 1.0, 10.0, 100.0}) {
        if (cm3 >= e) edge = e;
      }
      ++stats.bleeding_volume_histogram[edge];
    }
    ++stats.bleedings_per_image[bleedings];
    ++stats.relations_per_image[static_cast<int>(g.relations.size())];
    for (const auto& r : g.relations) ++stats.relation_counts[r.predicate];
  }
  return stats;
}

}  // namespace vsg
