#include "vsg/pipeline.h"

#include "vsg/dataset.h"
#include "vsg/error.h"
#include "vsg/rng.h"

namespace vsg {

std::vector<PreparedCase> LoadPreparedCases(const std::string& root, const std::vector<std::string>& ids,
                                            bool grounding) {
  std::vector<PreparedCase> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    try {
      const LabelMap labels = ReadCaseLabels(root, id);
      SceneGraph graph = ReadCaseGraph(root, id);
      if (graph.shape != labels.shape()) throw Error(ErrorKind::kShapeMismatch, "graph and label map differ in shape");
      out.push_back(PrepareCase(std::move(graph), &labels, grounding));
    } catch (const Error& e) {
      throw Error(e.kind(), id + ": " + e.message());
    }
  }
  return out;
}

uint64_t CaseDegradeSeed(uint64_t degrade_seed, const std::string& case_id) {
  return DeriveSeed(degrade_seed, StableHash(case_id));
}

SceneGraph PredictCase(const RelationModel& model, const SceneGraph& gt, const LabelMap& labels,
                       const PredictSettings& settings) {
  SceneGraph out;
  out.case_id = gt.case_id;
  out.shape = gt.shape;
  out.spacing = gt.spacing;
  PredictOptions options;
  options.unconstrained = settings.unconstrained;
  if (settings.task == Task::kPredCls) {
    out.objects = gt.objects;
    const CaseFeatures features = Featurize(out.objects, &labels.labels, gt.shape, model.config.grounding);
    out.relations = Predict(model, out.objects, features, options).relations;
  } else {
    const LabelMap degraded = DegradeLabelMap(labels, CaseDegradeSeed(settings.degrade_seed, gt.case_id), settings.noise);
    out.objects = ExtractObjects(degraded, settings.instancing);
    const CaseFeatures features = Featurize(out.objects, &degraded.labels, gt.shape, model.config.grounding);
    options.weight_by_object_scores = true;
    out.relations = Predict(model, out.objects, features, options).relations;
  }
  return out;
}

std::vector<std::string> SggTableColumns(int k) {
  const std::string at = "@" + std::to_string(k);
  return {"R" + at, "mR" + at, "mAP" + at, "UB-R", "UB-mR"};
}

MetricReport SggMetricReport(const RecallReport& recall, const UpperBound& bound, int k) {
  const auto columns = SggTableColumns(k);
  MetricReport out{{columns[0], recall.recall},
                   {columns[1], recall.mean_recall},
                   {columns[2], recall.mean_ap},
                   {columns[3], bound.recall},
                   {columns[4], bound.mean_recall}};
  for (int p = 0; p < kNumPredicates; ++p) {
    if (!recall.present[p]) continue;
    const std::string name(PredicateName(static_cast<Predicate>(p + 1)));
    out["R@" + std::to_string(k) + "/" + name] = recall.predicate_recall[p];
    out["AP@" + std::to_string(k) + "/" + name] = recall.predicate_ap[p];
  }
  return out;
}

}  // namespace vsg
