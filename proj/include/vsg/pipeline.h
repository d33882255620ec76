#ifndef VSG_PIPELINE_H_
#define VSG_PIPELINE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vsg/instancing.h"
#include "vsg/metrics.h"
#include "vsg/relation_model.h"
#include "vsg/trainer.h"

namespace vsg {

// Reads and featurizes dataset cases; errors carry the case id.
std::vector<PreparedCase> LoadPreparedCases(const std::string& root, const std::vector<std::string>& ids,
                                            bool grounding);

// Segmentation noise seed of one case, stable across runs and platforms.
uint64_t CaseDegradeSeed(uint64_t degrade_seed, const std::string& case_id);

struct PredictSettings {
  Task task = Task::kPredCls;
  bool unconstrained = false;
  uint64_t degrade_seed = 1;
  DegradeConfig noise;
  InstancingConfig instancing;
};

// predcls: gt objects with the clean label map. sggen: objects instanced from
// the degraded label map, relation scores weighted by object scores.
SceneGraph PredictCase(const RelationModel& model, const SceneGraph& gt, const LabelMap& labels,
                       const PredictSettings& settings);

// Named metrics of one evaluated run: R@K, mR@K, mAP@K, the upper bound and
// per-predicate recall.
MetricReport SggMetricReport(const RecallReport& recall, const UpperBound& bound, int k);
std::vector<std::string> SggTableColumns(int k);

}  // namespace vsg

#endif  // VSG_PIPELINE_H_
