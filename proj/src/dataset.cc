#include "vsg/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "vsg/error.h"
#include "vsg/graph_json.h"
#include "vsg/nifti.h"
#include "vsg/rng.h"

namespace fs = std::filesystem;

namespace vsg {

std::vector<std::string> DatasetManifest::split(std::string_view name) const {
  std::vector<std::string> out;
  for (const auto& c : cases) {
    if (c.split == name) out.push_back(c.id);
  }
  return out;
}

std::string CaseId(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "case_%04d", index);
  return buf;
}

std::string CaseDir(const std::string& root, const std::string& id) { return (fs::path(root) / "cases" / id).string(); }

std::vector<std::string> AssignSplits(int n, uint64_t seed) {
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(DeriveSeed(seed, 0x5b1175ULL));
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
  }
  const int n_test = static_cast<int>(std::lround(n / 6.0));
  const int n_val = static_cast<int>(std::lround((n - n_test) * 0.2));
  std::vector<std::string> splits(static_cast<size_t>(n), "train");
  for (int i = 0; i < n_test; ++i) splits[static_cast<size_t>(order[static_cast<size_t>(i)])] = "test";
  for (int i = n_test; i < n_test + n_val; ++i) splits[static_cast<size_t>(order[static_cast<size_t>(i)])] = "val";
  return splits;
}

nlohmann::json ManifestToJson(const DatasetManifest& m) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : m.cases) cases.push_back({{"id", c.id}, {"seed", c.seed}, {"split", c.split}});
  return {{"format", "vsg-dataset"},
          {"version", 1},
          {"seed", m.seed},
          {"config", PhantomConfigToJson(m.config)},
          {"cases", cases}};
}

DatasetManifest GenerateDataset(const std::string& root, const PhantomConfig& config, int n, uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "dataset needs at least one case");
  config.check();
  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.config = config;
  const std::vector<std::string> splits = AssignSplits(n, seed);
  std::vector<SceneGraph> graphs;
  std::error_code ec;
  for (int i = 0; i < n; ++i) {
    CaseEntry entry{CaseId(i), DeriveSeed(seed, static_cast<uint64_t>(i)), splits[static_cast<size_t>(i)]};
    Phantom p;
    try {
      p = GeneratePhantom(config, entry.seed);
    } catch (const Error& e) {
      throw Error(e.kind(), entry.id + ": " + e.message());
    }
    p.graph.case_id = entry.id;
    const std::string dir = CaseDir(root, entry.id);
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + dir + ": " + ec.message());
    WriteVolume(p.labels.ToVolume(), (fs::path(dir) / "labels.nii.gz").string());
    WriteSceneGraph(p.graph, (fs::path(dir) / "graph.json").string());
    graphs.push_back(std::move(p.graph));
    manifest.cases.push_back(std::move(entry));
  }
  WriteTextFileAtomic((fs::path(root) / "manifest.json").string(), ManifestToJson(manifest).dump(2) + "\n");
  WriteTextFileAtomic((fs::path(root) / "stats.json").string(), StatsToJson(ComputeStats(graphs)).dump(2) + "\n");
  return manifest;
}

DatasetManifest ReadManifest(const std::string& root) {
  const nlohmann::json doc = ReadJsonFile((fs::path(root) / "manifest.json").string());
  try {
    if (doc.value("format", "") != "vsg-dataset") throw Error(ErrorKind::kSchemaViolation, "manifest: not a dataset");
    DatasetManifest m;
    m.seed = doc.at("seed").get<uint64_t>();
    m.config = PhantomConfigFromJson(doc.at("config"));
    for (const auto& c : doc.at("cases")) {
      m.cases.push_back({c.at("id").get<std::string>(), c.at("seed").get<uint64_t>(), c.at("split").get<std::string>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("manifest: ") + e.what());
  }
}

std::vector<std::string> ListCases(const std::string& root) {
  std::vector<std::string> ids;
  if (fs::exists(fs::path(root) / "manifest.json")) {
    for (const auto& c : ReadManifest(root).cases) ids.push_back(c.id);
    return ids;
  }
  const fs::path cases = fs::path(root) / "cases";
  std::error_code ec;
  if (!fs::is_directory(cases, ec)) throw Error(ErrorKind::kIoFailure, "no cases directory under " + root);
  for (const auto& entry : fs::directory_iterator(cases)) {
    if (entry.is_directory() && fs::exists(entry.path() / "graph.json")) ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

LabelMap ReadCaseLabels(const std::string& root, const std::string& id) {
  return LabelMap::FromVolume(ReadVolume((fs::path(CaseDir(root, id)) / "labels.nii.gz").string()));
}

SceneGraph ReadCaseGraph(const std::string& root, const std::string& id) {
  return ReadSceneGraph((fs::path(CaseDir(root, id)) / "graph.json").string());
}

}  // namespace vsg
