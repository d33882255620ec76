#include "vsg/trainer.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "vsg/error.h"
#include "vsg/graph_json.h"
#include "vsg/rng.h"

namespace vsg {

PreparedCase PrepareCase(SceneGraph gt, const LabelMap* labels, bool grounding) {
  PreparedCase out;
  out.training.features = Featurize(gt.objects, labels != nullptr ? &labels->labels : nullptr, gt.shape, grounding);
  out.training.labels = PairLabels(gt, out.training.features);
  out.graph = std::move(gt);
  return out;
}

void TrainConfig::check() const {
  if (max_epochs < 1) throw Error(ErrorKind::kInvalidConfig, "max_epochs must be >= 1");
  if (patience < 1) throw Error(ErrorKind::kInvalidConfig, "patience must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::kInvalidConfig, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kInvalidConfig, "learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorKind::kInvalidConfig, "momentum must lie in [0,1)");
  if (!(clip_norm >= 0.0)) throw Error(ErrorKind::kInvalidConfig, "clip_norm must be >= 0");
  if (k < 1) throw Error(ErrorKind::kInvalidConfig, "k must be >= 1");
}

RecallReport EvaluatePredCls(const RelationModel& model, std::span<const PreparedCase> cases,
                             const TripletMatchSpec& spec) {
  std::vector<EvalCase> evals;
  evals.reserve(cases.size());
  for (const auto& c : cases) {
    EvalCase e{c.graph, c.graph};
    e.predicted.relations = Predict(model, c.graph.objects, c.training.features).relations;
    evals.push_back(std::move(e));
  }
  return ComputeRecall(evals, spec);
}

namespace {

struct Selection {
  double recall = -1.0;
  double mean_recall = -1.0;
  double loss = 0.0;

  bool better_than(const Selection& o) const {
    if (recall != o.recall) return recall > o.recall;
    if (mean_recall != o.mean_recall) return mean_recall > o.mean_recall;
    return loss < o.loss;
  }
};

double GlobalNorm(const ParamSet& g) {
  double s = 0.0;
  for (const auto& t : g.tensors()) {
    for (double v : t.data) s += v * v;
  }
  return std::sqrt(s);
}

}  // namespace

TrainResult Train(const ModelConfig& model_config, const TrainConfig& config, std::span<const PreparedCase> train,
                  std::span<const PreparedCase> val, uint64_t seed) {
  model_config.check();
  config.check();
  std::vector<TrainingCase> cases;
  for (const auto& c : train) {
    if (c.graph.relations.empty()) continue;
    cases.push_back(c.training);
  }
  if (cases.empty()) throw Error(ErrorKind::kEmptyDataset, "no training case carries a relation");
  const std::span<const PreparedCase> selection = val.empty() ? train : val;
  std::vector<TrainingCase> selection_training;
  for (const auto& c : selection) selection_training.push_back(c.training);

  TrainResult result;
  result.weights = ComputeClassWeights(cases);
  RelationModel model = InitModel(model_config, DeriveSeed(seed, 0));
  Rng shuffle(DeriveSeed(seed, 1));
  ParamSet velocity = model.params.ZerosLike();
  ParamSet grad = model.params.ZerosLike();
  const TripletMatchSpec spec{0.3, config.k, Task::kPredCls};

  Selection best;
  int since_best = 0;
  result.model = model;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (size_t i = cases.size(); i > 1; --i) {
      const auto j = static_cast<size_t>(shuffle.uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(cases[i - 1], cases[j]);
    }
    double epoch_loss = 0.0;
    for (size_t start = 0; start < cases.size(); start += static_cast<size_t>(config.batch_size)) {
      const size_t n = std::min(static_cast<size_t>(config.batch_size), cases.size() - start);
      const std::span<const TrainingCase> batch(cases.data() + start, n);
      epoch_loss += LossAndGrad(model, batch, result.weights, &grad) * static_cast<double>(n);
      double scale = 1.0;
      if (config.clip_norm > 0.0) {
        const double norm = GlobalNorm(grad);
        if (norm > config.clip_norm) scale = config.clip_norm / norm;
      }
      for (int t = 0; t < model.params.count(); ++t) {
        auto& p = model.params[t].data;
        auto& v = velocity[t].data;
        const auto& g = grad[t].data;
        for (size_t k = 0; k < p.size(); ++k) {
          v[k] = config.momentum * v[k] - config.learning_rate * scale * g[k];
          p[k] += v[k];
        }
      }
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(cases.size());
    record.val_loss = LossAndGrad(model, selection_training, result.weights, nullptr);
    const RecallReport report = EvaluatePredCls(model, selection, spec);
    record.val_recall = report.recall;
    record.val_mean_recall = report.mean_recall;
    result.log.push_back(record);

    const Selection current{record.val_recall, record.val_mean_recall, record.val_loss};
    if (current.better_than(best)) {
      best = current;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

nlohmann::json TrainLogToJson(const TrainResult& result) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& r : result.log) {
    epochs.push_back({{"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"val_loss", r.val_loss},
                      {"val_recall", r.val_recall},
                      {"val_mean_recall", r.val_mean_recall}});
  }
  return {{"best_epoch", result.best_epoch},
          {"class_weights", result.weights},
          {"epochs", epochs}};
}

nlohmann::json ModelToJson(const RelationModel& model) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& t : model.params.tensors()) {
    params.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"data", t.data}});
  }
  const ModelConfig& c = model.config;
  return {{"format", "vsg-relation-model"},
          {"version", 1},
          {"architecture", ArchitectureName(c.arch)},
          {"hidden", c.hidden},
          {"iterations", c.iterations},
          {"grounding", c.grounding},
          {"ordering", c.ordering == ObjectOrdering::kTopToBottom ? "top-to-bottom" : "by-size"},
          {"feature_size", kObjectFeatureSize},
          {"params", params}};
}

RelationModel ModelFromJson(const nlohmann::json& doc) {
  auto fail = [](const std::string& what) { return Error(ErrorKind::kSchemaViolation, "checkpoint: " + what); };
  try {
    if (!doc.is_object() || doc.value("format", "") != "vsg-relation-model") throw fail("not a relation model");
    if (doc.at("version").get<int>() != 1) throw fail("unsupported version");
    if (doc.at("feature_size").get<int>() != kObjectFeatureSize) throw fail("feature size mismatch");
    ModelConfig c;
    c.arch = ParseArchitecture(doc.at("architecture").get<std::string>());
    c.hidden = doc.at("hidden").get<int>();
    c.iterations = doc.at("iterations").get<int>();
    c.grounding = doc.at("grounding").get<bool>();
    const auto ordering = doc.at("ordering").get<std::string>();
    if (ordering == "top-to-bottom") {
      c.ordering = ObjectOrdering::kTopToBottom;
    } else if (ordering == "by-size") {
      c.ordering = ObjectOrdering::kBySize;
    } else {
      throw fail("unknown ordering '" + ordering + "'");
    }
    c.check();
    RelationModel model = BuildModel(c);
    const auto& params = doc.at("params");
    if (!params.is_array() || params.size() != static_cast<size_t>(model.params.count())) {
      throw fail("parameter count mismatch");
    }
    for (int t = 0; t < model.params.count(); ++t) {
      Tensor& dst = model.params[t];
      const auto& src = params[static_cast<size_t>(t)];
      if (src.at("name").get<std::string>() != dst.name || src.at("rows").get<int>() != dst.rows ||
          src.at("cols").get<int>() != dst.cols) {
        throw fail("tensor " + dst.name + " has a different layout");
      }
      auto data = src.at("data").get<std::vector<double>>();
      if (data.size() != dst.data.size()) throw fail("tensor " + dst.name + " has the wrong size");
      for (double v : data) {
        if (!std::isfinite(v)) throw fail("tensor " + dst.name + " holds a non-finite value");
      }
      dst.data = std::move(data);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  } catch (const Error& e) {
    // Bad architecture names or hyperparameters are a broken checkpoint.
    if (e.kind() == ErrorKind::kSchemaViolation) throw;
    throw fail(e.what());
  }
}

void SaveModel(const RelationModel& model, const std::string& path) {
  WriteTextFileAtomic(path, ModelToJson(model).dump());
}

RelationModel LoadModel(const std::string& path) { return ModelFromJson(ReadJsonFile(path)); }

}  // namespace vsg
