#ifndef VSG_TESTS_ORACLES_H_
#define VSG_TESTS_ORACLES_H_

// Reference implementations that share no code with the library. They are
// deliberately naive: rasterize, flood, enumerate.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "vsg/geometry.h"
#include "vsg/metrics.h"
#include "vsg/scene_graph.h"
#include "vsg/volume.h"

namespace vsg::oracle {

// IoU by painting both boxes into a grid and counting voxels.
inline double VoxelIou(const Box3& a, const Box3& b) {
  int64_t hi[3];
  for (int k = 0; k < 3; ++k) hi[k] = std::max(a.hi[k], b.hi[k]);
  Grid<uint8_t> paint(Shape3{hi[0], hi[1], hi[2]});
  auto stamp = [&](const Box3& box, uint8_t bit) {
    for (int64_t z = box.lo[0]; z < box.hi[0]; ++z)
      for (int64_t y = box.lo[1]; y < box.hi[1]; ++y)
        for (int64_t x = box.lo[2]; x < box.hi[2]; ++x) paint.at(z, y, x) |= bit;
  };
  stamp(a, 1);
  stamp(b, 2);
  int64_t inter = 0, uni = 0;
  for (uint8_t v : paint.data) {
    inter += v == 3;
    uni += v != 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Breadth-first flood fill with an explicit neighbour table. Labels follow
// the scan order of each component's first voxel.
inline Grid<int32_t> FloodFill(const Grid<uint8_t>& mask, int connectivity, int32_t* count) {
  std::vector<std::array<int, 3>> offsets;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dz) + std::abs(dy) + std::abs(dx);
        if (manhattan == 0) continue;
        if (connectivity == 6 && manhattan != 1) continue;
        offsets.push_back({dz, dy, dx});
      }
  const Shape3 s = mask.shape;
  Grid<int32_t> out(s, 0);
  int32_t next = 0;
  for (int64_t z = 0; z < s.nz; ++z)
    for (int64_t y = 0; y < s.ny; ++y)
      for (int64_t x = 0; x < s.nx; ++x) {
        if (mask.at(z, y, x) == 0 || out.at(z, y, x) != 0) continue;
        ++next;
        std::vector<std::array<int64_t, 3>> queue{{z, y, x}};
        out.at(z, y, x) = next;
        for (size_t head = 0; head < queue.size(); ++head) {
          const auto [cz, cy, cx] = queue[head];
          for (const auto& o : offsets) {
            const int64_t nz = cz + o[0], ny = cy + o[1], nx = cx + o[2];
            if (!s.contains(nz, ny, nx) || mask.at(nz, ny, nx) == 0 || out.at(nz, ny, nx) != 0) continue;
            out.at(nz, ny, nx) = next;
            queue.push_back({nz, ny, nx});
          }
        }
      }
  *count = next;
  return out;
}

// All-point interpolated AP over distinct ranks: for each recall level
// j / num_positives, the best precision reached at that recall or beyond.
inline double BruteAp(const std::vector<bool>& hits, int num_positives) {
  if (num_positives == 0) return 0.0;
  std::vector<double> recall_at, precision_at;
  int tp = 0;
  for (size_t i = 0; i < hits.size(); ++i) {
    tp += hits[i] ? 1 : 0;
    recall_at.push_back(static_cast<double>(tp));
    precision_at.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  double total = 0.0;
  for (int level = 1; level <= num_positives; ++level) {
    double best = 0.0;
    for (size_t i = 0; i < hits.size(); ++i) {
      if (recall_at[i] >= level) best = std::max(best, precision_at[i]);
    }
    total += best;
  }
  return total / num_positives;
}

// Rank-priority matching by enumeration: over every injective assignment of
// predictions to compatible gts, the lexicographically largest hit vector
// (earlier ranks dominate).
inline std::vector<bool> ExhaustiveHits(int num_pred, int num_gt, const std::function<bool(int, int)>& compatible) {
  std::vector<bool> best(num_pred, false), current(num_pred, false);
  std::vector<bool> used(num_gt, false);
  std::function<void(int)> recurse = [&](int i) {
    if (i == num_pred) {
      if (std::lexicographical_compare(best.begin(), best.end(), current.begin(), current.end())) best = current;
      return;
    }
    current[i] = false;
    recurse(i + 1);
    for (int g = 0; g < num_gt; ++g) {
      if (used[g] || !compatible(i, g)) continue;
      used[g] = true;
      current[i] = true;
      recurse(i + 1);
      current[i] = false;
      used[g] = false;
    }
  };
  recurse(0);
  return best;
}

struct SuiteResult {
  double recall = 0.0;
  double mean_recall = 0.0;
  double mean_ap = 0.0;
  int num_cases = 0;
};

// R@K, mR@K and mAP@K by enumeration. Scores within a case must be distinct
// for the ranking to be unambiguous.
inline SuiteResult RecallSuite(const std::vector<EvalCase>& cases, const TripletMatchSpec& spec) {
  SuiteResult out;
  double recall_sum = 0.0;
  std::array<double, 3> predicate_sum{};
  std::array<int, 3> predicate_cases{}, positives{};
  std::array<std::vector<std::pair<double, bool>>, 3> pool;
  for (const auto& c : cases) {
    if (c.gt.relations.empty()) continue;
    ++out.num_cases;
    std::vector<Relation> preds = c.predicted.relations;
    std::stable_sort(preds.begin(), preds.end(), [](const Relation& a, const Relation& b) { return a.score > b.score; });
    if (static_cast<int>(preds.size()) > spec.k) preds.resize(spec.k);
    const auto& gts = c.gt.relations;
    auto endpoint = [&](int pred_id, int gt_id) {
      if (spec.task == Task::kPredCls) return pred_id == gt_id;
      const SceneObject* p = c.predicted.find(pred_id);
      const SceneObject* g = c.gt.find(gt_id);
      return p != nullptr && g != nullptr && p->category == g->category && VoxelIou(p->box, g->box) >= spec.iou_threshold;
    };
    auto compatible = [&](int i, int g) {
      return preds[i].predicate == gts[g].predicate && endpoint(preds[i].subject, gts[g].subject) &&
             endpoint(preds[i].object, gts[g].object);
    };
    const std::vector<bool> hits = ExhaustiveHits(static_cast<int>(preds.size()), static_cast<int>(gts.size()), compatible);
    std::array<int, 3> total{}, matched{};
    for (const auto& g : gts) ++total[static_cast<int>(g.predicate) - 1];
    int matched_all = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
      const int p = static_cast<int>(preds[i].predicate) - 1;
      pool[p].push_back({preds[i].score, hits[i]});
      if (hits[i]) {
        ++matched[p];
        ++matched_all;
      }
    }
    recall_sum += static_cast<double>(matched_all) / static_cast<double>(gts.size());
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
    ++present;
    out.mean_recall += predicate_sum[p] / predicate_cases[p];
    std::stable_sort(pool[p].begin(), pool[p].end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<bool> ranked;
    for (const auto& [score, hit] : pool[p]) ranked.push_back(hit);
    out.mean_ap += BruteAp(ranked, positives[p]);
  }
  out.mean_recall /= present;
  out.mean_ap /= present;
  return out;
}

}  // namespace vsg::oracle

#endif  // VSG_TESTS_ORACLES_H_
