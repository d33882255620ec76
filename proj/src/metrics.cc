#include "vsg/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

#include "vsg/error.h"

namespace vsg {

std::string_view TaskName(Task task) { return task == Task::kPredCls ? "predcls" : "sggen"; }

Task ParseTask(std::string_view name) {
  if (name == "predcls") return Task::kPredCls;
  if (name == "sggen") return Task::kSgGen;
  throw Error(ErrorKind::kInvalidArgument, "unknown task '" + std::string(name) + "' (predcls|sggen)");
}

void TripletMatchSpec::check() const {
  if (k < 1) throw Error(ErrorKind::kInvalidConfig, "K must be >= 1");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw Error(ErrorKind::kInvalidConfig, "IoU threshold must lie in (0,1]");
}

namespace {

struct RankedHit {
  double score;
  bool hit;
};

// Stable ranking by descending score.
void SortByScore(std::vector<RankedHit>& hits) {
  std::stable_sort(hits.begin(), hits.end(), [](const RankedHit& a, const RankedHit& b) { return a.score > b.score; });
}

// Equal scores form one operating point, so the result does not depend on
// the order of tied entries.
double AveragePrecisionOfRanking(const std::vector<RankedHit>& ranked, int num_positives) {
  if (num_positives <= 0) return 0.0;
  std::vector<double> recall, precision;
  int tp = 0, fp = 0;
  for (size_t i = 0; i < ranked.size(); ++i) {
    (ranked[i].hit ? tp : fp) += 1;
    if (i + 1 < ranked.size() && ranked[i + 1].score == ranked[i].score) continue;
    recall.push_back(static_cast<double>(tp) / num_positives);
    precision.push_back(static_cast<double>(tp) / (tp + fp));
  }
  for (size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, previous_recall = 0.0;
  for (size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - previous_recall) * precision[i];
    previous_recall = recall[i];
  }
  return ap;
}

const SceneObject* FindObject(const SceneGraph& g, int id) { return g.find(id); }

}  // namespace

double AveragePrecision(std::span<const bool> hits, int num_positives) {
  std::vector<RankedHit> ranked;
  // Distinct descending scores: the ranking is taken as given.
  for (size_t i = 0; i < hits.size(); ++i) ranked.push_back({-static_cast<double>(i), hits[i]});
  return AveragePrecisionOfRanking(ranked, num_positives);
}

DetectionMetrics ComputeDetectionMetrics(std::span<const std::vector<SceneObject>> predictions,
                                         std::span<const std::vector<SceneObject>> gts, double iou_threshold) {
  if (predictions.size() != gts.size()) throw Error(ErrorKind::kShapeMismatch, "one prediction list per gt case required");
  DetectionMetrics out;
  int categories_present = 0;
  for (int c = 1; c <= 3; ++c) {
    const auto category = static_cast<Category>(c);
    std::vector<RankedHit> ranked;
    int matched = 0, total = 0;
    for (size_t k = 0; k < gts.size(); ++k) {
      std::vector<Box3> pred_boxes, gt_boxes;
      std::vector<double> scores;
      for (const auto& o : predictions[k]) {
        if (o.category != category) continue;
        pred_boxes.push_back(o.box);
        scores.push_back(o.score);
      }
      for (const auto& o : gts[k]) {
        if (o.category == category) gt_boxes.push_back(o.box);
      }
      const MatchResult m = MatchDetections(pred_boxes, scores, gt_boxes, iou_threshold);
      std::vector<bool> hit(pred_boxes.size(), false);
      for (const auto& p : m.pairs) hit[p.prediction] = true;
      for (size_t i = 0; i < pred_boxes.size(); ++i) ranked.push_back({scores[i], hit[i]});
      matched += static_cast<int>(m.pairs.size());
      total += static_cast<int>(gt_boxes.size());
    }
    SortByScore(ranked);
    out.num_gt[c - 1] = total;
    out.ar[c - 1] = total > 0 ? static_cast<double>(matched) / total : 0.0;
    out.ap[c - 1] = AveragePrecisionOfRanking(ranked, total);
    if (total > 0) {
      ++categories_present;
      out.mean_ar += out.ar[c - 1];
      out.mean_ap += out.ap[c - 1];
    }
  }
  if (categories_present > 0) {
    out.mean_ar /= categories_present;
    out.mean_ap /= categories_present;
  }
  return out;
}

TripletMatch MatchTriplets(const SceneGraph& predicted, const SceneGraph& gt, const TripletMatchSpec& spec) {
  spec.check();
  TripletMatch out;
  std::vector<int> order(predicted.relations.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return predicted.relations[a].score > predicted.relations[b].score;
  });
  if (order.size() > static_cast<size_t>(spec.k)) order.resize(static_cast<size_t>(spec.k));
  out.ranked = order;

  auto localizes = [&](int pred_id, int gt_id) {
    if (spec.task == Task::kPredCls) return pred_id == gt_id;
    const SceneObject* p = FindObject(predicted, pred_id);
    const SceneObject* g = FindObject(gt, gt_id);
    return p != nullptr && g != nullptr && p->category == g->category && Iou3(p->box, g->box) >= spec.iou_threshold;
  };

  std::vector<std::vector<int>> candidates(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    const Relation& r = predicted.relations[order[i]];
    for (size_t g = 0; g < gt.relations.size(); ++g) {
      const Relation& t = gt.relations[g];
      if (r.predicate == t.predicate && localizes(r.subject, t.subject) && localizes(r.object, t.object)) {
        candidates[i].push_back(static_cast<int>(g));
      }
    }
  }

  // Incremental augmenting paths: admitted predictions never lose their match.
  std::vector<int> owner(gt.relations.size(), -1);
  std::vector<char> visited;
  std::function<bool(int)> augment = [&](int i) {
    for (int g : candidates[i]) {
      if (visited[g]) continue;
      visited[g] = 1;
      if (owner[g] < 0 || augment(owner[g])) {
        owner[g] = i;
        return true;
      }
    }
    return false;
  };
  for (size_t i = 0; i < order.size(); ++i) {
    visited.assign(gt.relations.size(), 0);
    augment(static_cast<int>(i));
  }
  out.matched.assign(order.size(), false);
  out.gt_index.assign(order.size(), -1);
  for (size_t g = 0; g < owner.size(); ++g) {
    if (owner[g] >= 0) {
      out.matched[owner[g]] = true;
      out.gt_index[owner[g]] = static_cast<int>(g);
    }
  }
  return out;
}

RecallReport ComputeRecall(std::span<const EvalCase> cases, const TripletMatchSpec& spec) {
  spec.check();
  RecallReport out;
  double recall_sum = 0.0;
  std::array<double, 3> predicate_sum{};
  std::array<int, 3> predicate_cases{};
  std::array<int, 3> positives{};
  std::array<std::vector<RankedHit>, 3> hits;

  for (const auto& c : cases) {
    if (c.gt.relations.empty()) continue;
    ++out.num_cases;
    const TripletMatch m = MatchTriplets(c.predicted, c.gt, spec);
    std::array<int, 3> total{}, matched{};
    for (const auto& r : c.gt.relations) ++total[static_cast<int>(r.predicate) - 1];
    int matched_all = 0;
    for (size_t i = 0; i < m.ranked.size(); ++i) {
      const Relation& r = c.predicted.relations[m.ranked[i]];
      const int p = static_cast<int>(r.predicate) - 1;
      if (p < 0 || p >= 3) continue;
      hits[p].push_back({r.score, m.matched[i]});
      if (m.matched[i]) {
        ++matched[p];
        ++matched_all;
      }
    }
    recall_sum += static_cast<double>(matched_all) / static_cast<double>(c.gt.relations.size());
    for (int p = 0; p < 3; ++p) {
      if (total[p] == 0) continue;
      predicate_sum[p] += static_cast<double>(matched[p]) / total[p];
      ++predicate_cases[p];
      positives[p] += total[p];
    }
  }
  if (out.num_cases == 0) return out;
  out.recall = recall_sum / out.num_cases;
  int present = 0;
  for (int p = 0; p < 3; ++p) {
    if (predicate_cases[p] == 0) continue;
    out.present[p] = true;
    ++present;
    out.predicate_recall[p] = predicate_sum[p] / predicate_cases[p];
    SortByScore(hits[p]);
    out.predicate_ap[p] = AveragePrecisionOfRanking(hits[p], positives[p]);
    out.mean_recall += out.predicate_recall[p];
    out.mean_ap += out.predicate_ap[p];
  }
  out.mean_recall /= present;
  out.mean_ap /= present;
  return out;
}

UpperBound ComputeUpperBound(std::span<const std::vector<SceneObject>> detections, std::span<const SceneGraph> gts,
                             const TripletMatchSpec& spec) {
  spec.check();
  if (detections.size() != gts.size()) throw Error(ErrorKind::kShapeMismatch, "one detection list per gt case required");
  UpperBound out;
  int cases = 0;
  double recall_sum = 0.0;
  std::array<double, 3> predicate_sum{};
  std::array<int, 3> predicate_cases{};
  for (size_t k = 0; k < gts.size(); ++k) {
    const SceneGraph& g = gts[k];
    if (g.relations.empty()) continue;
    ++cases;
    auto localized = [&](int gt_id) {
      const SceneObject* target = g.find(gt_id);
      if (target == nullptr) return false;
      for (const auto& d : detections[k]) {
        if (d.category == target->category && Iou3(d.box, target->box) >= spec.iou_threshold) return true;
      }
      return false;
    };
    std::array<int, 3> total{}, recallable{};
    int recallable_all = 0;
    for (const auto& r : g.relations) {
      const int p = static_cast<int>(r.predicate) - 1;
      ++total[p];
      if (localized(r.subject) && localized(r.object)) {
        ++recallable[p];
        ++recallable_all;
      }
    }
    recall_sum += static_cast<double>(recallable_all) / static_cast<double>(g.relations.size());
    for (int p = 0; p < 3; ++p) {
      if (total[p] == 0) continue;
      predicate_sum[p] += static_cast<double>(recallable[p]) / total[p];
      ++predicate_cases[p];
    }
  }
  if (cases == 0) return out;
  out.recall = recall_sum / cases;
  int present = 0;
  for (int p = 0; p < 3; ++p) {
    if (predicate_cases[p] == 0) continue;
    ++present;
    out.mean_recall += predicate_sum[p] / predicate_cases[p];
  }
  out.mean_recall /= present;
  return out;
}

AggregateReport AggregateSeeds(std::span<const MetricReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::kInvalidArgument, "aggregation needs at least one report");
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : reports) {
    for (const auto& [k, v] : r) values[k].push_back(v);
  }
  AggregateReport out;
  for (const auto& [k, v] : values) {
    // Identical runs report their value exactly, with no rounding spread.
    if (std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end()) {
      out[k] = {v.front(), 0.0};
      continue;
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    out[k] = {mean, std::sqrt(var)};
  }
  return out;
}

nlohmann::json AggregateToJson(const AggregateReport& report, int runs) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, e] : report) metrics[k] = {{"mean", e.mean}, {"std", e.std}};
  return {{"runs", runs}, {"metrics", metrics}};
}

namespace {

std::string Cell(const AggregateReport& report, const std::string& key) {
  const auto it = report.find(key);
  if (it == report.end()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", 100.0 * it->second.mean, 100.0 * it->second.std);
  return buf;
}

// Display width, counting the two-byte "±" as one column.
size_t Width(const std::string& s) {
  size_t w = 0;
  for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
  return w;
}

}  // namespace

std::string FormatTable(const std::vector<std::pair<std::string, AggregateReport>>& rows,
                        const std::vector<std::string>& columns) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Method"});
  for (const auto& c : columns) cells.back().push_back(c);
  for (const auto& [label, report] : rows) {
    cells.push_back({label});
    for (const auto& c : columns) cells.back().push_back(Cell(report, c));
  }
  std::vector<size_t> width(columns.size() + 1, 0);
  for (const auto& row : cells) {
    for (size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], Width(row[i]));
  }
  std::ostringstream out;
  for (size_t r = 0; r < cells.size(); ++r) {
    for (size_t i = 0; i < cells[r].size(); ++i) {
      const std::string& s = cells[r][i];
      const std::string pad(width[i] - Width(s), ' ');
      out << (i == 0 ? s + pad : "  " + pad + s);
    }
    out << "\n";
    if (r == 0) {
      size_t total = width[0];
      for (size_t i = 1; i < width.size(); ++i) total += width[i] + 2;
      out << std::string(total, '-') << "\n";
    }
  }
  return out.str();
}

std::string FormatCsv(const std::vector<std::pair<std::string, AggregateReport>>& rows,
                      const std::vector<std::string>& columns) {
  std::ostringstream out;
  out << "method";
  for (const auto& c : columns) out << "," << c << "_mean," << c << "_std";
  out << "\n";
  for (const auto& [label, report] : rows) {
    out << label;
    for (const auto& c : columns) {
      const auto it = report.find(c);
      if (it == report.end()) {
        out << ",,";
      } else {
        out << "," << it->second.mean << "," << it->second.std;
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace vsg
