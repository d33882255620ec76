#ifndef VSG_RELATION_MODEL_H_
#define VSG_RELATION_MODEL_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vsg/autodiff.h"
#include "vsg/features.h"
#include "vsg/scene_graph.h"

namespace vsg {

enum class Architecture { kVMotif, kVImp };
// Sequence order for the bidirectional context of V-MOTIF.
enum class ObjectOrdering { kTopToBottom, kBySize };

std::string_view ArchitectureName(Architecture arch);
Architecture ParseArchitecture(std::string_view name);

struct ModelConfig {
  Architecture arch = Architecture::kVMotif;
  int hidden = 32;
  // Message-passing rounds (V-IMP only).
  int iterations = 2;
  bool grounding = false;
  ObjectOrdering ordering = ObjectOrdering::kTopToBottom;

  void check() const;
  bool operator==(const ModelConfig&) const = default;
};

struct RelationModel {
  ModelConfig config;
  ParamSet params;
};

// Allocates every tensor of the configured architecture (all zeros).
RelationModel BuildModel(const ModelConfig& config);
// Weights and biases uniform in +-1/sqrt(fan_in).
RelationModel InitModel(const ModelConfig& config, uint64_t seed);

// Permutation of object indices: ascending box z-min (superior first), ties by
// descending box volume, then ascending id. kBySize sorts by descending volume
// first and uses z-min as the tie break.
std::vector<int> VMotifOrder(std::span<const Box3> boxes, std::span<const int> ids,
                             ObjectOrdering ordering = ObjectOrdering::kTopToBottom);

// Runs the forward and backward LSTMs over `inputs` (already in sequence
// order, each of size hidden). Output i is [forward_i ; backward_i].
std::vector<Tape::Var> VMotifContext(Tape& tape, const RelationModel& model, std::span<const Tape::Var> inputs);

struct ImpStates {
  std::vector<Tape::Var> nodes;  // feature order
  std::vector<Tape::Var> edges;  // pair order
};
ImpStates VImpPropagate(Tape& tape, const RelationModel& model, const CaseFeatures& features);

// One GRU step; shared by the node and edge cells ("imp.node_gru" / "imp.edge_gru").
Tape::Var GruStep(Tape& tape, const RelationModel& model, const std::string& cell, Tape::Var input, Tape::Var state);

// Per candidate pair, unmasked logits over (none, shift, flow, asymmetry).
std::vector<Tape::Var> PairLogits(Tape& tape, const RelationModel& model, const CaseFeatures& features);

// Labels the object category admits: none plus compatible predicates.
std::array<bool, kNumPredicateLabels> AllowedLabels(Category subject, Category object);

struct PairDistribution {
  int subject = 0;
  int object = 0;
  std::array<double, kNumPredicateLabels> probabilities{};
};

struct PredictOptions {
  // Relation score = predicate probability x subject score x object score.
  bool weight_by_object_scores = false;
  // Emit every compatible predicate of a pair instead of only its argmax.
  bool unconstrained = false;
  double min_score = 0.0;
};

struct Prediction {
  std::vector<PairDistribution> distributions;
  // Sorted by descending score, ties in candidate-pair order.
  std::vector<Relation> relations;
};

Prediction Predict(const RelationModel& model, std::span<const SceneObject> objects, const CaseFeatures& features,
                   const PredictOptions& options = {});

// A case prepared for training: features plus the label of each pair.
struct TrainingCase {
  CaseFeatures features;
  std::vector<int> labels;
};

// Gold label of each pair (0 when unrelated). A pair carrying several gold
// predicates takes the lowest predicate id.
std::vector<int> PairLabels(const SceneGraph& gt, const CaseFeatures& features);

using ClassWeights = std::array<double, kNumPredicateLabels>;

// none weight = related pairs / unrelated pairs; predicate weights 1.
ClassWeights ComputeClassWeights(std::span<const TrainingCase> cases);

// Weighted masked softmax cross-entropy summed over pairs, averaged over
// cases. When `grad` is non-null it receives the exact gradient (overwritten).
double LossAndGrad(const RelationModel& model, std::span<const TrainingCase> cases, const ClassWeights& weights,
                   ParamSet* grad);

}  // namespace vsg

#endif  // VSG_RELATION_MODEL_H_
