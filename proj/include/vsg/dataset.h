#ifndef VSG_DATASET_H_
#define VSG_DATASET_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vsg/phantom.h"
#include "vsg/scene_graph.h"
#include "vsg/volume.h"

namespace vsg {

// Directory layout:
//   <root>/manifest.json            config, master seed, case seeds, splits
//   <root>/stats.json               dataset statistics
//   <root>/cases/<id>/labels.nii.gz
//   <root>/cases/<id>/graph.json
//   <root>/cases/<id>/image.nii.gz  optional intensity volume

struct CaseEntry {
  std::string id;
  uint64_t seed = 0;
  std::string split;  // "train", "val" or "test"
};

struct DatasetManifest {
  uint64_t seed = 0;
  PhantomConfig config;
  std::vector<CaseEntry> cases;

  std::vector<std::string> split(std::string_view name) const;
};

std::string CaseId(int index);
std::string CaseDir(const std::string& root, const std::string& id);

// One sixth of the cases (rounded) go to test; of the rest, 20% to val.
std::vector<std::string> AssignSplits(int n, uint64_t seed);

// Writes n phantoms with per-case seeds derived from `seed`.
DatasetManifest GenerateDataset(const std::string& root, const PhantomConfig& config, int n, uint64_t seed);

nlohmann::json ManifestToJson(const DatasetManifest& manifest);
DatasetManifest ReadManifest(const std::string& root);

// Manifest order when a manifest exists, else sorted case directories.
std::vector<std::string> ListCases(const std::string& root);

LabelMap ReadCaseLabels(const std::string& root, const std::string& id);
SceneGraph ReadCaseGraph(const std::string& root, const std::string& id);

}  // namespace vsg

#endif  // VSG_DATASET_H_
