#ifndef VSG_METRICS_H_
#define VSG_METRICS_H_

#include <array>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vsg/scene_graph.h"

namespace vsg {

enum class Task { kPredCls, kSgGen };

std::string_view TaskName(Task task);
Task ParseTask(std::string_view name);

struct TripletMatchSpec {
  double iou_threshold = 0.3;
  int k = 8;
  Task task = Task::kPredCls;

  void check() const;
};

// Area under the all-point interpolated precision/recall curve. `hits` are
// the true-positive flags of a ranking, best first.
double AveragePrecision(std::span<const bool> hits, int num_positives);

struct DetectionMetrics {
  // Indexed by category - 1 (bleeding, ventricle, midline).
  std::array<double, 3> ar{};
  std::array<double, 3> ap{};
  std::array<int, 3> num_gt{};
  // Means over categories with at least one gt object.
  double mean_ar = 0.0;
  double mean_ap = 0.0;
};

// Per category: greedy matching per case, AR = matched gt fraction over the
// dataset, AP over the dataset-wide score ranking. Tied scores form a single
// operating point.
DetectionMetrics ComputeDetectionMetrics(std::span<const std::vector<SceneObject>> predictions,
                                         std::span<const std::vector<SceneObject>> gts, double iou_threshold);

struct TripletMatch {
  // Indices into the predicted relation list of the top-K, best first.
  std::vector<int> ranked;
  // matched[i] refers to ranked[i].
  std::vector<bool> matched;
  // Gt relation index consumed by ranked[i], or -1.
  std::vector<int> gt_index;
};

// A prediction may match a gt relation with the same predicate whose subject
// and object it localizes: by object id in predcls, by category and IoU at
// the threshold in sggen. Predictions are admitted in rank order; a new
// prediction is matched whenever the gt relations can be re-assigned so that
// it and every earlier matched prediction each hold a distinct gt.
TripletMatch MatchTriplets(const SceneGraph& predicted, const SceneGraph& gt, const TripletMatchSpec& spec);

struct RecallReport {
  double recall = 0.0;
  double mean_recall = 0.0;
  double mean_ap = 0.0;
  // Indexed by predicate - 1; NaN-free: predicates never seen report 0 and
  // are flagged by present[p] == false.
  std::array<double, 3> predicate_recall{};
  std::array<double, 3> predicate_ap{};
  std::array<bool, 3> present{};
  int num_cases = 0;
};

struct EvalCase {
  SceneGraph predicted;
  SceneGraph gt;
};

// R@K, mR@K and mAP@K over cases holding at least one gt relation.
RecallReport ComputeRecall(std::span<const EvalCase> cases, const TripletMatchSpec& spec);

struct UpperBound {
  double recall = 0.0;
  double mean_recall = 0.0;
};

// A gt relation is recallable when both endpoints are localized by a
// detection of the same category at IoU >= threshold.
UpperBound ComputeUpperBound(std::span<const std::vector<SceneObject>> detections, std::span<const SceneGraph> gts,
                             const TripletMatchSpec& spec);

// Flat named metrics of one run, values in [0,1].
using MetricReport = std::map<std::string, double>;

struct AggregateEntry {
  double mean = 0.0;
  double std = 0.0;
};
using AggregateReport = std::map<std::string, AggregateEntry>;

// Mean and population standard deviation per key over all reports.
AggregateReport AggregateSeeds(std::span<const MetricReport> reports);

nlohmann::json AggregateToJson(const AggregateReport& report, int runs);
// Aligned table, values x100 as "mean ± std", one row per label.
std::string FormatTable(const std::vector<std::pair<std::string, AggregateReport>>& rows,
                        const std::vector<std::string>& columns);
std::string FormatCsv(const std::vector<std::pair<std::string, AggregateReport>>& rows,
                      const std::vector<std::string>& columns);

}  // namespace vsg

#endif  // VSG_METRICS_H_
