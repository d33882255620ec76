#include "vsg/relation_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vsg/error.h"
#include "vsg/rng.h"

namespace vsg {

std::string_view ArchitectureName(Architecture arch) {
  return arch == Architecture::kVMotif ? "v-motif" : "v-imp";
}

Architecture ParseArchitecture(std::string_view name) {
  if (name == "v-motif") return Architecture::kVMotif;
  if (name == "v-imp") return Architecture::kVImp;
  throw Error(ErrorKind::kInvalidArgument, "unknown architecture '" + std::string(name) + "'");
}

void ModelConfig::check() const {
  if (hidden < 1) throw Error(ErrorKind::kInvalidConfig, "hidden size must be >= 1");
  if (iterations < 0) throw Error(ErrorKind::kInvalidConfig, "iterations must be >= 0");
}

namespace {

struct TensorSpec {
  const char* name;
  int rows;
  int cols;
  int fan_in;
};

std::vector<TensorSpec> Layout(const ModelConfig& c) {
  const int h = c.hidden;
  const int d = kObjectFeatureSize;
  std::vector<TensorSpec> specs;
  int readout_in = 0;
  if (c.arch == Architecture::kVMotif) {
    specs = {{"motif.in.W", h, d, d},         {"motif.in.b", h, 1, d},
             {"motif.fwd.W", 4 * h, h, h},    {"motif.fwd.U", 4 * h, h, h},
             {"motif.fwd.b", 4 * h, 1, h},    {"motif.bwd.W", 4 * h, h, h},
             {"motif.bwd.U", 4 * h, h, h},    {"motif.bwd.b", 4 * h, 1, h}};
    readout_in = 4 * h + kEdgeFeatureSize;
  } else {
    specs = {{"imp.node_in.W", h, d, d},
             {"imp.node_in.b", h, 1, d},
             {"imp.edge_in.W", h, kEdgeFeatureSize, kEdgeFeatureSize},
             {"imp.edge_in.b", h, 1, kEdgeFeatureSize},
             {"imp.node_gru.W", 3 * h, h, h},
             {"imp.node_gru.Uzr", 2 * h, h, h},
             {"imp.node_gru.Un", h, h, h},
             {"imp.node_gru.b", 3 * h, 1, h},
             {"imp.edge_gru.W", 3 * h, h, h},
             {"imp.edge_gru.Uzr", 2 * h, h, h},
             {"imp.edge_gru.Un", h, h, h},
             {"imp.edge_gru.b", 3 * h, 1, h},
             {"imp.node_score.W", h, 2 * h, 2 * h},
             {"imp.node_score.b", h, 1, 2 * h},
             {"imp.node_score.v", h, 1, h},
             {"imp.edge_score.W", h, 2 * h, 2 * h},
             {"imp.edge_score.b", h, 1, 2 * h},
             {"imp.edge_score.v", h, 1, h},
             {"imp.edge_score.c", 1, 1, h}};
    readout_in = 3 * h + kEdgeFeatureSize;
  }
  specs.push_back({"readout.W1", h, readout_in, readout_in});
  specs.push_back({"readout.b1", h, 1, readout_in});
  specs.push_back({"readout.W2", kNumPredicateLabels, h, h});
  specs.push_back({"readout.b2", kNumPredicateLabels, 1, h});
  return specs;
}

// Parameter indices resolved once per call site.
struct Ids {
  explicit Ids(const ParamSet& p, const std::string& prefix) : params(p), prefix(prefix) {}
  int operator()(const char* suffix) const { return params.index(prefix + suffix); }
  const ParamSet& params;
  std::string prefix;
};

void CheckArch(const RelationModel& model, Architecture expected) {
  if (model.config.arch != expected) {
    throw Error(ErrorKind::kShapeMismatch, "model is " + std::string(ArchitectureName(model.config.arch)) +
                                               ", operation needs " + std::string(ArchitectureName(expected)));
  }
}

void CheckFeatures(const CaseFeatures& f) {
  for (const auto& v : f.objects) {
    if (v.size() != static_cast<size_t>(kObjectFeatureSize)) throw Error(ErrorKind::kShapeMismatch, "object feature size");
  }
  for (const auto& e : f.edges) {
    if (e.size() != static_cast<size_t>(kEdgeFeatureSize)) throw Error(ErrorKind::kShapeMismatch, "edge feature size");
  }
  if (f.edges.size() != f.pairs.size()) throw Error(ErrorKind::kShapeMismatch, "one edge feature per pair required");
}

Tape::Var LstmStep(Tape& tape, const Ids& id, Tape::Var x, Tape::Var& h, Tape::Var& c, int hidden) {
  const Tape::Var pre = tape.Add(tape.Affine(id("W"), x, id("b")), tape.MatVec(id("U"), h));
  const size_t n = static_cast<size_t>(hidden);
  const Tape::Var i = tape.Sigmoid(tape.Slice(pre, 0, n));
  const Tape::Var f = tape.Sigmoid(tape.Slice(pre, n, n));
  const Tape::Var g = tape.Tanh(tape.Slice(pre, 2 * n, n));
  const Tape::Var o = tape.Sigmoid(tape.Slice(pre, 3 * n, n));
  c = tape.Add(tape.Mul(f, c), tape.Mul(i, g));
  h = tape.Mul(o, tape.Tanh(c));
  return h;
}

// Two-layer attention scorer: v . tanh(W [a; b] + b1) (+ c when present).
Tape::Var Score(Tape& tape, const Ids& id, Tape::Var a, Tape::Var b, bool with_bias) {
  const std::array<Tape::Var, 2> parts = {a, b};
  const Tape::Var hidden = tape.Tanh(tape.Affine(id("W"), tape.Concat(parts), id("b")));
  Tape::Var s = tape.Dot(tape.Param(id("v")), hidden);
  if (with_bias) s = tape.Add(s, tape.Param(id("c")));
  return s;
}

Tape::Var Readout(Tape& tape, const ParamSet& params, Tape::Var input) {
  const Ids id(params, "readout.");
  const Tape::Var hidden = tape.Tanh(tape.Affine(id("W1"), input, id("b1")));
  return tape.Affine(id("W2"), hidden, id("b2"));
}

}  // namespace

RelationModel BuildModel(const ModelConfig& config) {
  config.check();
  RelationModel model{config, {}};
  for (const auto& s : Layout(config)) model.params.Add(s.name, s.rows, s.cols);
  return model;
}

RelationModel InitModel(const ModelConfig& config, uint64_t seed) {
  RelationModel model = BuildModel(config);
  Rng rng(seed);
  const auto specs = Layout(config);
  for (size_t t = 0; t < specs.size(); ++t) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(specs[t].fan_in));
    for (auto& v : model.params[static_cast<int>(t)].data) v = rng.uniform(-bound, bound);
  }
  return model;
}

std::vector<int> VMotifOrder(std::span<const Box3> boxes, std::span<const int> ids, ObjectOrdering ordering) {
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const int64_t za = boxes[a].lo[0], zb = boxes[b].lo[0];
    const int64_t va = boxes[a].volume(), vb = boxes[b].volume();
    if (ordering == ObjectOrdering::kBySize) {
      if (va != vb) return va > vb;
      if (za != zb) return za < zb;
    } else {
      if (za != zb) return za < zb;
      if (va != vb) return va > vb;
    }
    return ids[a] < ids[b];
  });
  return order;
}

std::vector<Tape::Var> VMotifContext(Tape& tape, const RelationModel& model, std::span<const Tape::Var> inputs) {
  CheckArch(model, Architecture::kVMotif);
  const int h = model.config.hidden;
  for (Tape::Var x : inputs) {
    if (tape.size(x) != static_cast<size_t>(h)) throw Error(ErrorKind::kShapeMismatch, "LSTM input size != hidden");
  }
  const size_t n = inputs.size();
  std::vector<Tape::Var> fwd(n), bwd(n);
  const Ids fid(model.params, "motif.fwd.");
  const Ids bid(model.params, "motif.bwd.");
  Tape::Var hs = tape.Constant(std::vector<double>(h, 0.0));
  Tape::Var cs = tape.Constant(std::vector<double>(h, 0.0));
  for (size_t t = 0; t < n; ++t) fwd[t] = LstmStep(tape, fid, inputs[t], hs, cs, h);
  hs = tape.Constant(std::vector<double>(h, 0.0));
  cs = tape.Constant(std::vector<double>(h, 0.0));
  for (size_t t = n; t-- > 0;) bwd[t] = LstmStep(tape, bid, inputs[t], hs, cs, h);
  std::vector<Tape::Var> out(n);
  for (size_t t = 0; t < n; ++t) {
    const std::array<Tape::Var, 2> parts = {fwd[t], bwd[t]};
    out[t] = tape.Concat(parts);
  }
  return out;
}

Tape::Var GruStep(Tape& tape, const RelationModel& model, const std::string& cell, Tape::Var input, Tape::Var state) {
  const Ids id(model.params, cell + ".");
  const size_t h = static_cast<size_t>(model.config.hidden);
  const Tape::Var xw = tape.Affine(id("W"), input, id("b"));
  const Tape::Var zr = tape.Add(tape.Slice(xw, 0, 2 * h), tape.MatVec(id("Uzr"), state));
  const Tape::Var z = tape.Sigmoid(tape.Slice(zr, 0, h));
  const Tape::Var r = tape.Sigmoid(tape.Slice(zr, h, h));
  const Tape::Var candidate = tape.Tanh(tape.Add(tape.Slice(xw, 2 * h, h), tape.MatVec(id("Un"), tape.Mul(r, state))));
  return tape.Add(tape.Mul(tape.OneMinus(z), state), tape.Mul(z, candidate));
}

ImpStates VImpPropagate(Tape& tape, const RelationModel& model, const CaseFeatures& features) {
  CheckArch(model, Architecture::kVImp);
  CheckFeatures(features);
  const int h = model.config.hidden;
  const ParamSet& p = model.params;
  ImpStates s;
  for (const auto& x : features.objects) {
    s.nodes.push_back(tape.Affine(p.index("imp.node_in.W"), tape.Constant(x), p.index("imp.node_in.b")));
  }
  for (const auto& e : features.edges) {
    s.edges.push_back(tape.Affine(p.index("imp.edge_in.W"), tape.Constant(e), p.index("imp.edge_in.b")));
  }

  std::vector<std::vector<int>> incident(features.objects.size());
  for (size_t e = 0; e < features.pairs.size(); ++e) {
    incident[features.pairs[e].first].push_back(static_cast<int>(e));
    incident[features.pairs[e].second].push_back(static_cast<int>(e));
  }

  const Ids node_score(p, "imp.node_score.");
  const Ids edge_score(p, "imp.edge_score.");
  for (int t = 0; t < model.config.iterations; ++t) {
    std::vector<Tape::Var> node_msg(s.nodes.size());
    for (size_t i = 0; i < s.nodes.size(); ++i) {
      if (incident[i].empty()) {
        node_msg[i] = tape.Constant(std::vector<double>(h, 0.0));
        continue;
      }
      std::vector<Tape::Var> scores, messages;
      for (int e : incident[i]) {
        scores.push_back(Score(tape, node_score, s.nodes[i], s.edges[e], false));
        messages.push_back(s.edges[e]);
      }
      node_msg[i] = tape.WeightedSum(messages, tape.Softmax(scores));
    }
    std::vector<Tape::Var> edge_msg(s.edges.size());
    for (size_t e = 0; e < s.edges.size(); ++e) {
      const auto [si, oi] = features.pairs[e];
      const Tape::Var ws = tape.Sigmoid(Score(tape, edge_score, s.edges[e], s.nodes[si], true));
      const Tape::Var wo = tape.Sigmoid(Score(tape, edge_score, s.edges[e], s.nodes[oi], true));
      edge_msg[e] = tape.Add(tape.Scale(s.nodes[si], ws), tape.Scale(s.nodes[oi], wo));
    }
    for (size_t i = 0; i < s.nodes.size(); ++i) s.nodes[i] = GruStep(tape, model, "imp.node_gru", node_msg[i], s.nodes[i]);
    for (size_t e = 0; e < s.edges.size(); ++e) s.edges[e] = GruStep(tape, model, "imp.edge_gru", edge_msg[e], s.edges[e]);
  }
  return s;
}

std::vector<Tape::Var> PairLogits(Tape& tape, const RelationModel& model, const CaseFeatures& features) {
  CheckFeatures(features);
  std::vector<Tape::Var> logits;
  if (features.pairs.empty()) return logits;
  if (model.config.arch == Architecture::kVMotif) {
    const ParamSet& p = model.params;
    const std::vector<int> order = VMotifOrder(features.boxes, features.ids, model.config.ordering);
    std::vector<Tape::Var> inputs;
    for (int idx : order) {
      inputs.push_back(tape.Affine(p.index("motif.in.W"), tape.Constant(features.objects[idx]), p.index("motif.in.b")));
    }
    const std::vector<Tape::Var> ordered = VMotifContext(tape, model, inputs);
    std::vector<Tape::Var> context(order.size());
    for (size_t k = 0; k < order.size(); ++k) context[order[k]] = ordered[k];
    for (size_t e = 0; e < features.pairs.size(); ++e) {
      const auto [si, oi] = features.pairs[e];
      const std::array<Tape::Var, 3> parts = {context[si], context[oi], tape.Constant(features.edges[e])};
      logits.push_back(Readout(tape, p, tape.Concat(parts)));
    }
  } else {
    const ImpStates s = VImpPropagate(tape, model, features);
    for (size_t e = 0; e < features.pairs.size(); ++e) {
      const auto [si, oi] = features.pairs[e];
      const std::array<Tape::Var, 4> parts = {s.nodes[si], s.nodes[oi], s.edges[e], tape.Constant(features.edges[e])};
      logits.push_back(Readout(tape, model.params, tape.Concat(parts)));
    }
  }
  return logits;
}

std::array<bool, kNumPredicateLabels> AllowedLabels(Category subject, Category object) {
  std::array<bool, kNumPredicateLabels> allowed{};
  allowed[0] = true;
  for (int p = 1; p <= kNumPredicates; ++p) allowed[p] = IsCompatible(subject, object, static_cast<Predicate>(p));
  return allowed;
}

Prediction Predict(const RelationModel& model, std::span<const SceneObject> objects, const CaseFeatures& features,
                   const PredictOptions& options) {
  if (objects.size() != features.ids.size()) {
    throw Error(ErrorKind::kShapeMismatch, "features were computed for a different object list");
  }
  Tape tape(model.params, nullptr);
  const std::vector<Tape::Var> logits = PairLogits(tape, model, features);
  Prediction out;
  struct Scored {
    Relation relation;
    size_t order;
  };
  std::vector<Scored> scored;
  for (size_t e = 0; e < features.pairs.size(); ++e) {
    const auto [si, oi] = features.pairs[e];
    const auto allowed = AllowedLabels(features.categories[si], features.categories[oi]);
    const std::vector<double> prob = MaskedSoftmax(tape.value(logits[e]), allowed);
    PairDistribution dist{features.ids[si], features.ids[oi], {}};
    std::copy(prob.begin(), prob.end(), dist.probabilities.begin());
    out.distributions.push_back(dist);

    const double object_weight =
        options.weight_by_object_scores ? objects[si].score * objects[oi].score : 1.0;
    int best = 0;
    for (int p = 1; p <= kNumPredicates; ++p) {
      if (!allowed[p]) continue;
      if (options.unconstrained) {
        const double score = prob[p] * object_weight;
        if (score >= options.min_score) {
          scored.push_back({{dist.subject, dist.object, static_cast<Predicate>(p), score}, scored.size()});
        }
      } else if (best == 0 || prob[p] > prob[best]) {
        best = p;
      }
    }
    if (!options.unconstrained && best != 0) {
      const double score = prob[best] * object_weight;
      if (score >= options.min_score) {
        scored.push_back({{dist.subject, dist.object, static_cast<Predicate>(best), score}, scored.size()});
      }
    }
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.relation.score > b.relation.score; });
  for (const auto& s : scored) out.relations.push_back(s.relation);
  return out;
}

std::vector<int> PairLabels(const SceneGraph& gt, const CaseFeatures& features) {
  std::vector<int> labels(features.pairs.size(), 0);
  for (size_t e = 0; e < features.pairs.size(); ++e) {
    const int s = features.ids[features.pairs[e].first];
    const int o = features.ids[features.pairs[e].second];
    for (const auto& r : gt.relations) {
      if (r.subject != s || r.object != o) continue;
      const int p = static_cast<int>(r.predicate);
      if (labels[e] == 0 || p < labels[e]) labels[e] = p;
    }
  }
  return labels;
}

ClassWeights ComputeClassWeights(std::span<const TrainingCase> cases) {
  int64_t related = 0, unrelated = 0;
  for (const auto& c : cases) {
    for (int l : c.labels) (l == 0 ? unrelated : related) += 1;
  }
  ClassWeights w = {1.0, 1.0, 1.0, 1.0};
  if (related > 0 && unrelated > 0) w[0] = static_cast<double>(related) / static_cast<double>(unrelated);
  return w;
}

double LossAndGrad(const RelationModel& model, std::span<const TrainingCase> cases, const ClassWeights& weights,
                   ParamSet* grad) {
  if (grad != nullptr) {
    if (!grad->SameLayout(model.params)) *grad = model.params.ZerosLike();
    grad->SetZero();
  }
  if (cases.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : cases) {
    if (c.labels.size() != c.features.pairs.size()) throw Error(ErrorKind::kShapeMismatch, "one label per pair required");
    if (c.features.pairs.empty()) continue;
    Tape tape(model.params, grad);
    const std::vector<Tape::Var> logits = PairLogits(tape, model, c.features);
    std::vector<Tape::Var> losses;
    for (size_t e = 0; e < logits.size(); ++e) {
      const auto [si, oi] = c.features.pairs[e];
      const auto allowed = AllowedLabels(c.features.categories[si], c.features.categories[oi]);
      losses.push_back(tape.MaskedCrossEntropy(logits[e], allowed, c.labels[e], weights[c.labels[e]]));
    }
    const Tape::Var loss = tape.Sum(losses);
    total += tape.value(loss)[0];
    if (grad != nullptr) tape.Backward(loss);
  }
  const double n = static_cast<double>(cases.size());
  if (grad != nullptr) {
    for (int t = 0; t < grad->count(); ++t) {
      for (auto& g : (*grad)[t].data) g /= n;
    }
  }
  return total / n;
}

}  // namespace vsg
