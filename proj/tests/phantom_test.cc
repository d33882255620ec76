#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "oracles.h"
#include "test_util.h"
#include "vsg/dataset.h"
#include "vsg/error.h"
#include "vsg/geometry.h"
#include "vsg/instancing.h"
#include "vsg/metrics.h"
#include "vsg/phantom.h"

namespace vsg {
namespace {

using testing::TempDir;

// Bounding box of one painting instance.
Box3 InstanceBox(const Grid<uint16_t>& instances, uint16_t id) {
  Grid<uint8_t> mask(instances.shape, 0);
  for (size_t i = 0; i < instances.data.size(); ++i) mask.data[i] = instances.data[i] == id;
  return *BboxOfLabel(mask, 1);
}

// Planted bleeding index of a graph object, found by its box.
int PlantedIndex(const Phantom& p, const SceneObject& o) {
  const uint16_t max_id = *std::max_element(p.instances.data.begin(), p.instances.data.end());
  for (uint16_t id = 3; id <= max_id; ++id) {
    if (InstanceBox(p.instances, id) == o.box) return id;
  }
  return -1;
}

TEST(Phantom, SameSeedSameOutput) {
  const PhantomConfig c;
  const Phantom a = GeneratePhantom(c, 17), b = GeneratePhantom(c, 17), d = GeneratePhantom(c, 18);
  EXPECT_EQ(a.labels.labels, b.labels.labels);
  EXPECT_EQ(a.instances, b.instances);
  EXPECT_EQ(a.graph.objects.size(), b.graph.objects.size());
  EXPECT_EQ(a.graph.relations, b.graph.relations);
  EXPECT_NE(a.labels.labels, d.labels.labels);
}

TEST(Phantom, GraphsAreValidAndAnatomiesAreSingletons) {
  const PhantomConfig c;
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    const Phantom p = GeneratePhantom(c, seed);
    EXPECT_TRUE(Validate(p.graph).empty()) << "seed " << seed;
    int ventricles = 0, midlines = 0, bleedings = 0;
    for (const auto& o : p.graph.objects) {
      ventricles += o.category == Category::kVentricle;
      midlines += o.category == Category::kMidline;
      bleedings += o.category == Category::kBleeding;
    }
    EXPECT_EQ(ventricles, 1);
    EXPECT_EQ(midlines, 1);
    EXPECT_GE(bleedings, c.min_bleedings);
    EXPECT_LE(bleedings, c.max_bleedings);
    EXPECT_EQ(p.graph.shape, c.shape);
  }
}

TEST(Phantom, PlantedRelationsMatchVoxelGeometry) {
  const PhantomConfig c;
  int flows = 0, asymmetries = 0, shifts = 0;
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    const Phantom p = GeneratePhantom(c, seed);
    for (const auto& r : p.graph.relations) {
      const SceneObject& s = *p.graph.find(r.subject);
      const SceneObject& o = *p.graph.find(r.object);
      const int k = PlantedIndex(p, s);
      ASSERT_GE(k, 3) << "seed " << seed;
      int64_t inside = 0;
      for (size_t i = 0; i < p.instances.data.size(); ++i) {
        inside += p.instances.data[i] == k && p.ventricle_anatomy.data[i];
      }
      switch (r.predicate) {
        case Predicate::kBloodFlow:
          ++flows;
          EXPECT_GT(inside, 0) << "seed " << seed;
          break;
        case Predicate::kAsymmetry:
          ++asymmetries;
          EXPECT_EQ(inside, 0) << "seed " << seed;
          EXPECT_GE(BoxGap(s.box, o.box), kAsymmetryGapMin);
          EXPECT_LE(BoxGap(s.box, o.box), kAsymmetryGapMax);
          break;
        case Predicate::kMidlineShift:
          ++shifts;
          EXPECT_LE(BoxGap(s.box, o.box), kShiftGapMax);
          break;
        default:
          ADD_FAILURE();
      }
    }
  }
  EXPECT_GT(flows, 0);
  EXPECT_GT(asymmetries, 0);
  EXPECT_GT(shifts, 0);
}

TEST(Phantom, ZeroProbabilitiesPlantNoRelations) {
  PhantomConfig c;
  c.p_blood_flow = c.p_asymmetry = c.p_midline_shift = 0.0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const Phantom p = GeneratePhantom(c, seed);
    EXPECT_TRUE(p.graph.relations.empty());
    EXPECT_GE(p.graph.objects.size(), 3u);
  }
}

TEST(Phantom, InstancingRecoversPlantedBoxes) {
  const PhantomConfig c;
  for (uint64_t seed = 100; seed < 120; ++seed) {
    const Phantom p = GeneratePhantom(c, seed);
    const std::vector<SceneObject> found = ExtractObjects(p.labels);
    const uint16_t max_id = *std::max_element(p.instances.data.begin(), p.instances.data.end());
    for (uint16_t id = 3; id <= max_id; ++id) {
      const Box3 planted = InstanceBox(p.instances, id);
      double best = 0.0;
      for (const auto& o : found) {
        if (o.category == Category::kBleeding) best = std::max(best, oracle::VoxelIou(planted, o.box));
      }
      EXPECT_GE(best, 0.99) << "seed " << seed << " bleeding " << id - 3;
    }
    EXPECT_EQ(found.size(), p.graph.objects.size());
  }
}

TEST(Phantom, RuleClassifierSeparatesRelations) {
  const PhantomConfig c;
  std::vector<EvalCase> cases;
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    Phantom p = GeneratePhantom(c, seed);
    EvalCase e;
    e.gt = p.graph;
    e.predicted = p.graph;
    e.predicted.relations = ClassifyByGeometry(p.graph.objects).relations;
    cases.push_back(std::move(e));
  }
  const RecallReport r = ComputeRecall(cases, {0.3, 8, Task::kPredCls});
  EXPECT_GE(r.recall, 0.95);
}

TEST(Phantom, MeanRelationCountIsModerate) {
  const PhantomConfig c;
  int relations = 0;
  const int n = 200;
  for (uint64_t seed = 1; seed <= n; ++seed) relations += static_cast<int>(GeneratePhantom(c, seed).graph.relations.size());
  const double mean = static_cast<double>(relations) / n;
  EXPECT_GE(mean, 1.0);
  EXPECT_LE(mean, 3.0);
}

TEST(Phantom, ConfigChecks) {
  PhantomConfig c;
  c.min_bleedings = 3;
  c.max_bleedings = 2;
  EXPECT_THROW(c.check(), Error);
  c = PhantomConfig{};
  c.p_blood_flow = 1.5;
  EXPECT_THROW(c.check(), Error);
  c = PhantomConfig{};
  const PhantomConfig back = PhantomConfigFromJson(PhantomConfigToJson(c));
  EXPECT_EQ(PhantomConfigToJson(back).dump(), PhantomConfigToJson(c).dump());
}

TEST(BoxGap, ChebyshevDistance) {
  using testing::MakeBox;
  EXPECT_EQ(BoxGap(MakeBox(0, 0, 0, 2, 2, 2), MakeBox(0, 0, 2, 2, 2, 4)), 0);
  EXPECT_EQ(BoxGap(MakeBox(0, 0, 0, 2, 2, 2), MakeBox(0, 0, 5, 2, 2, 7)), 3);
  EXPECT_EQ(BoxGap(MakeBox(0, 0, 0, 2, 2, 2), MakeBox(6, 4, 0, 8, 6, 2)), 4);
  EXPECT_LT(BoxGap(MakeBox(0, 0, 0, 4, 4, 4), MakeBox(1, 1, 1, 3, 3, 3)), 0);
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Dataset, SplitsFollowTheSixthRule) {
  const auto splits = AssignSplits(300, 1);
  EXPECT_EQ(std::count(splits.begin(), splits.end(), "test"), 50);
  EXPECT_EQ(std::count(splits.begin(), splits.end(), "val"), 50);
  EXPECT_EQ(std::count(splits.begin(), splits.end(), "train"), 200);
  EXPECT_EQ(AssignSplits(300, 1), splits);
  EXPECT_EQ(CaseId(7), "case_0007");
}

TEST(Dataset, WritesReadableCasesDeterministically) {
  TempDir a, b;
  PhantomConfig c;
  c.shape = {32, 48, 48};
  const DatasetManifest m = GenerateDataset(a.str(), c, 6, 5);
  GenerateDataset(b.str(), c, 6, 5);
  ASSERT_EQ(m.cases.size(), 6u);
  EXPECT_EQ(ListCases(a.str()).size(), 6u);
  const DatasetManifest back = ReadManifest(a.str());
  EXPECT_EQ(back.seed, 5u);
  ASSERT_EQ(back.cases.size(), 6u);
  for (size_t i = 0; i < m.cases.size(); ++i) {
    const std::string& id = m.cases[i].id;
    EXPECT_EQ(back.cases[i].id, id);
    EXPECT_EQ(back.cases[i].split, m.cases[i].split);
    const Phantom p = GeneratePhantom(c, m.cases[i].seed);
    EXPECT_EQ(ReadCaseLabels(a.str(), id).labels, p.labels.labels);
    const SceneGraph g = ReadCaseGraph(a.str(), id);
    EXPECT_EQ(g.relations, p.graph.relations);
    EXPECT_EQ(g.case_id, id);
    for (const char* f : {"labels.nii.gz", "graph.json"}) {
      EXPECT_EQ(Slurp(CaseDir(a.str(), id) + "/" + f), Slurp(CaseDir(b.str(), id) + "/" + f)) << f;
    }
  }
  EXPECT_EQ(Slurp(a.file("manifest.json")), Slurp(b.file("manifest.json")));
  EXPECT_TRUE(std::filesystem::exists(a.file("stats.json")));
}

TEST(Dataset, MissingManifestIsIoFailure) {
  TempDir empty;
  try {
    ReadManifest(empty.str());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIoFailure);
  }
}

}  // namespace
}  // namespace vsg
