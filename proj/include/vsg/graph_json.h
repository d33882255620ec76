#ifndef VSG_GRAPH_JSON_H_
#define VSG_GRAPH_JSON_H_

#include <string>

#include "json.hpp"
#include "vsg/scene_graph.h"

namespace vsg {

// Scene graph JSON schema v1:
// { "case_id": str, "shape": [nz,ny,nx], "spacing_mm": [sz,sy,sx],
//   "objects": [{"id", "category": 1|2|3, "box": [z0,y0,x0,z1,y1,x1], "score"}],
//   "relations": [{"subject", "object", "predicate": 1|2|3, "score"}] }
nlohmann::json SceneGraphToJson(const SceneGraph& graph);
// Throws kSchemaViolation naming the offending field, or kDanglingRelation.
SceneGraph SceneGraphFromJson(const nlohmann::json& doc);

nlohmann::json RelationsToJson(const std::vector<Relation>& relations);
std::vector<Relation> RelationsFromJson(const nlohmann::json& doc);

SceneGraph ReadSceneGraph(const std::string& path);
void WriteSceneGraph(const SceneGraph& graph, const std::string& path);

nlohmann::json StatsToJson(const DatasetStats& stats);

nlohmann::json ReadJsonFile(const std::string& path);
// Writes via a temporary sibling file and rename(2).
void WriteTextFileAtomic(const std::string& path, const std::string& text);

}  // namespace vsg

#endif  // VSG_GRAPH_JSON_H_
