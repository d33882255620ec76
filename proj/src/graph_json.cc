#include "vsg/graph_json.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vsg/error.h"

namespace vsg {
namespace {

using nlohmann::json;

[[noreturn]] void SchemaError(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kSchemaViolation, "field '" + field + "' " + what);
}

const json& Require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) SchemaError(path, "must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) SchemaError(path.empty() ? key : path + "." + key, "is missing");
  return *it;
}

int64_t GetInt(const json& v, const std::string& field) {
  if (!v.is_number_integer()) SchemaError(field, "must be an integer");
  return v.get<int64_t>();
}

double GetNumber(const json& v, const std::string& field) {
  if (!v.is_number()) SchemaError(field, "must be a number");
  return v.get<double>();
}

double GetScore(const json& v, const std::string& field) {
  const double s = GetNumber(v, field);
  if (!(s >= 0.0 && s <= 1.0)) SchemaError(field, "must lie in [0,1]");
  return s;
}

std::vector<double> GetNumberArray(const json& v, size_t n, const std::string& field) {
  if (!v.is_array() || v.size() != n) SchemaError(field, "must be an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (size_t i = 0; i < n; ++i) out.push_back(GetNumber(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int64_t> GetIntArray(const json& v, size_t n, const std::string& field) {
  if (!v.is_array() || v.size() != n) SchemaError(field, "must be an array of " + std::to_string(n) + " integers");
  std::vector<int64_t> out;
  for (size_t i = 0; i < n; ++i) out.push_back(GetInt(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

Relation RelationFromJson(const json& r, const std::string& path) {
  Relation rel;
  rel.subject = static_cast<int>(GetInt(Require(r, "subject", path), path + ".subject"));
  rel.object = static_cast<int>(GetInt(Require(r, "object", path), path + ".object"));
  const int64_t p = GetInt(Require(r, "predicate", path), path + ".predicate");
  if (p < 1 || p > kNumPredicates) SchemaError(path + ".predicate", "must be 1, 2 or 3");
  rel.predicate = static_cast<Predicate>(p);
  rel.score = GetScore(Require(r, "score", path), path + ".score");
  return rel;
}

}  // namespace

json RelationsToJson(const std::vector<Relation>& relations) {
  json out = json::array();
  for (const auto& r : relations) {
    out.push_back({{"subject", r.subject},
                   {"object", r.object},
                   {"predicate", static_cast<int>(r.predicate)},
                   {"score", r.score}});
  }
  return out;
}

std::vector<Relation> RelationsFromJson(const json& doc) {
  if (!doc.is_array()) SchemaError("relations", "must be an array");
  std::vector<Relation> out;
  for (size_t i = 0; i < doc.size(); ++i) out.push_back(RelationFromJson(doc[i], "relations[" + std::to_string(i) + "]"));
  return out;
}

json SceneGraphToJson(const SceneGraph& graph) {
  json objects = json::array();
  for (const auto& o : graph.objects) {
    objects.push_back({{"id", o.id},
                       {"category", static_cast<int>(o.category)},
                       {"box", {o.box.lo[0], o.box.lo[1], o.box.lo[2], o.box.hi[0], o.box.hi[1], o.box.hi[2]}},
                       {"score", o.score}});
  }
  return {{"case_id", graph.case_id},
          {"shape", {graph.shape.nz, graph.shape.ny, graph.shape.nx}},
          {"spacing_mm", {graph.spacing.sz, graph.spacing.sy, graph.spacing.sx}},
          {"objects", objects},
          {"relations", RelationsToJson(graph.relations)}};
}

SceneGraph SceneGraphFromJson(const json& doc) {
  if (!doc.is_object()) SchemaError("<root>", "must be an object");
  SceneGraph g;
  const json& case_id = Require(doc, "case_id", "");
  if (!case_id.is_string()) SchemaError("case_id", "must be a string");
  g.case_id = case_id.get<std::string>();

  const auto shape = GetIntArray(Require(doc, "shape", ""), 3, "shape");
  for (int a = 0; a < 3; ++a) {
    if (shape[a] < 1) SchemaError("shape[" + std::to_string(a) + "]", "must be >= 1");
  }
  g.shape = {shape[0], shape[1], shape[2]};
  const auto spacing = GetNumberArray(Require(doc, "spacing_mm", ""), 3, "spacing_mm");
  for (int a = 0; a < 3; ++a) {
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) SchemaError("spacing_mm[" + std::to_string(a) + "]", "must be positive");
  }
  g.spacing = {spacing[0], spacing[1], spacing[2]};

  const json& objects = Require(doc, "objects", "");
  if (!objects.is_array()) SchemaError("objects", "must be an array");
  for (size_t i = 0; i < objects.size(); ++i) {
    const std::string path = "objects[" + std::to_string(i) + "]";
    const json& o = objects[i];
    SceneObject obj;
    obj.id = static_cast<int>(GetInt(Require(o, "id", path), path + ".id"));
    const int64_t c = GetInt(Require(o, "category", path), path + ".category");
    if (c < 1 || c > 3) SchemaError(path + ".category", "must be 1, 2 or 3");
    obj.category = static_cast<Category>(c);
    const auto b = GetIntArray(Require(o, "box", path), 6, path + ".box");
    obj.box = Box3{{b[0], b[1], b[2]}, {b[3], b[4], b[5]}};
    if (!obj.box.valid()) SchemaError(path + ".box", "must satisfy min < max on every axis");
    obj.score = GetScore(Require(o, "score", path), path + ".score");
    g.objects.push_back(std::move(obj));
  }

  g.relations = RelationsFromJson(Require(doc, "relations", ""));
  for (const auto& r : g.relations) {
    for (int id : {r.subject, r.object}) {
      if (g.find(id) == nullptr) {
        throw Error(ErrorKind::kDanglingRelation, "relation " + std::to_string(r.subject) + "->" +
                                                      std::to_string(r.object) + " references missing object id " +
                                                      std::to_string(id));
      }
    }
  }
  return g;
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kSchemaViolation, path + ": " + e.what());
  }
}

void WriteTextFileAtomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIoFailure, "cannot open for writing: " + tmp);
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::kIoFailure, "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "rename " + tmp + " -> " + path + ": " + ec.message());
}

SceneGraph ReadSceneGraph(const std::string& path) { return SceneGraphFromJson(ReadJsonFile(path)); }

void WriteSceneGraph(const SceneGraph& graph, const std::string& path) {
  WriteTextFileAtomic(path, SceneGraphToJson(graph).dump(2) + "\n");
}

json StatsToJson(const DatasetStats& stats) {
  json bpi = json::object(), rpi = json::object(), vol = json::object(), rel = json::object();
  for (const auto& [k, v] : stats.bleedings_per_image) bpi[std::to_string(k)] = v;
  for (const auto& [k, v] : stats.relations_per_image) rpi[std::to_string(k)] = v;
  for (const auto& [k, v] : stats.bleeding_volume_histogram) {
    std::ostringstream key;
    key << ">=" << k;
    vol[key.str()] = v;
  }
  for (const auto& [k, v] : stats.relation_counts) rel[std::string(PredicateName(k))] = v;
  return {{"num_graphs", stats.num_graphs},
          {"bleedings_per_image", bpi},
          {"bleeding_volume_cm3_histogram", vol},
          {"bleeding_volumes_cm3", stats.bleeding_volumes_cm3},
          {"relations_per_image", rpi},
          {"relation_counts", rel}};
}

}  // namespace vsg
