#ifndef VSG_TRAINER_H_
#define VSG_TRAINER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vsg/metrics.h"
#include "vsg/relation_model.h"
#include "vsg/volume.h"

namespace vsg {

// Ground-truth graph with its features and pair labels.
struct PreparedCase {
  SceneGraph graph;
  TrainingCase training;
};

// `labels` may be null; grounding then falls back to the attached masks.
PreparedCase PrepareCase(SceneGraph gt, const LabelMap* labels, bool grounding);

struct TrainConfig {
  int max_epochs = 150;
  int patience = 30;
  int batch_size = 8;
  double learning_rate = 0.02;
  double momentum = 0.9;
  // Global L2 norm bound on each batch gradient; 0 disables clipping.
  double clip_norm = 5.0;
  // K of the validation R@K driving early stopping.
  int k = 8;

  void check() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_recall = 0.0;
  double val_mean_recall = 0.0;
};

struct TrainResult {
  // Parameters of the best validation epoch.
  RelationModel model;
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  ClassWeights weights{};
};

// Mini-batch SGD with momentum. Cases without relations are skipped. The
// best epoch maximizes validation R@K, then mR@K, then minimizes validation
// loss; training stops after `patience` epochs without improvement. With an
// empty validation set the training cases are used for selection.
TrainResult Train(const ModelConfig& model_config, const TrainConfig& config, std::span<const PreparedCase> train,
                  std::span<const PreparedCase> val, uint64_t seed);

// Graph-constrained predicate classification on gt objects.
RecallReport EvaluatePredCls(const RelationModel& model, std::span<const PreparedCase> cases,
                             const TripletMatchSpec& spec);

nlohmann::json TrainLogToJson(const TrainResult& result);

// Checkpoint container: {"format": "vsg-relation-model", "version": 1,
// "architecture", "hidden", "iterations", "grounding", "ordering",
// "feature_size", "params": [{"name", "rows", "cols", "data"}]}.
nlohmann::json ModelToJson(const RelationModel& model);
// Throws kSchemaViolation on a wrong layout or non-finite values.
RelationModel ModelFromJson(const nlohmann::json& doc);
void SaveModel(const RelationModel& model, const std::string& path);
RelationModel LoadModel(const std::string& path);

}  // namespace vsg

#endif  // VSG_TRAINER_H_
