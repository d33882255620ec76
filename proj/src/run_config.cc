#include "vsg/run_config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "vsg/error.h"

namespace vsg {

void RunConfig::check() const {
  if (seeds.empty()) throw Error(ErrorKind::kInvalidConfig, "seeds must not be empty");
  instancing.check();
  model.check();
  train.check();
  match.check();
  phantom.check();
}

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(Trim(item));
  return out;
}

template <typename T>
T ParseNumber(const std::string& s) {
  T value{};
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("'" + s + "' is not a valid number");
  return value;
}

bool ParseBool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("'" + s + "' is not a boolean");
}

// Shortest text that parses back to the same value.
template <typename T>
std::string Format(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
std::string Join(const std::vector<T>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + Format(values[i]);
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VSG_NUMBER_KEY(key, field, type)                                                   \
  Key {                                                                                    \
    key, [](RunConfig& c, const std::string& v) { c.field = ParseNumber<type>(v); },       \
        [](const RunConfig& c) { return Format(c.field); }            \
  }
#define VSG_BOOL_KEY(key, field)                                                           \
  Key {                                                                                    \
    key, [](RunConfig& c, const std::string& v) { c.field = ParseBool(v); },               \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }         \
  }

const std::vector<Key>& Keys() {
  static const std::vector<Key> keys = {
      {"data_dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; },
       [](const RunConfig& c) { return c.data_dir; }},
      {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
      {"seeds",
       [](RunConfig& c, const std::string& v) {
         c.seeds.clear();
         for (const auto& s : SplitList(v)) c.seeds.push_back(ParseNumber<uint64_t>(s));
       },
       [](const RunConfig& c) { return Join(c.seeds); }},
      VSG_NUMBER_KEY("degrade_seed", degrade_seed, uint64_t),

      VSG_NUMBER_KEY("instancing.min_bleeding_volume_cm3", instancing.min_bleeding_volume_cm3, double),
      {"instancing.connectivity",
       [](RunConfig& c, const std::string& v) {
         const int n = ParseNumber<int>(v);
         if (n != 6 && n != 26) throw std::invalid_argument("connectivity must be 6 or 26");
         c.instancing.connectivity = n == 6 ? Connectivity::k6 : Connectivity::k26;
       },
       [](const RunConfig& c) { return std::to_string(static_cast<int>(c.instancing.connectivity)); }},
      VSG_NUMBER_KEY("instancing.min_anatomy_voxels", instancing.min_anatomy_voxels, int64_t),

      {"model.architecture",
       [](RunConfig& c, const std::string& v) { c.model.arch = ParseArchitecture(v); },
       [](const RunConfig& c) { return std::string(ArchitectureName(c.model.arch)); }},
      VSG_NUMBER_KEY("model.hidden", model.hidden, int),
      VSG_NUMBER_KEY("model.iterations", model.iterations, int),
      VSG_BOOL_KEY("model.grounding", model.grounding),
      {"model.ordering",
       [](RunConfig& c, const std::string& v) {
         if (v == "top-to-bottom") {
           c.model.ordering = ObjectOrdering::kTopToBottom;
         } else if (v == "by-size") {
           c.model.ordering = ObjectOrdering::kBySize;
         } else {
           throw std::invalid_argument("ordering must be top-to-bottom or by-size");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.model.ordering == ObjectOrdering::kTopToBottom ? "top-to-bottom" : "by-size");
       }},

      VSG_NUMBER_KEY("train.max_epochs", train.max_epochs, int),
      VSG_NUMBER_KEY("train.patience", train.patience, int),
      VSG_NUMBER_KEY("train.batch_size", train.batch_size, int),
      VSG_NUMBER_KEY("train.learning_rate", train.learning_rate, double),
      VSG_NUMBER_KEY("train.momentum", train.momentum, double),
      VSG_NUMBER_KEY("train.clip_norm", train.clip_norm, double),
      VSG_NUMBER_KEY("train.k", train.k, int),

      {"eval.task", [](RunConfig& c, const std::string& v) { c.match.task = ParseTask(v); },
       [](const RunConfig& c) { return std::string(TaskName(c.match.task)); }},
      VSG_NUMBER_KEY("eval.k", match.k, int),
      VSG_NUMBER_KEY("eval.iou", match.iou_threshold, double),
      VSG_BOOL_KEY("eval.unconstrained", unconstrained),

      {"phantom.shape",
       [](RunConfig& c, const std::string& v) {
         const auto parts = SplitList(v);
         if (parts.size() != 3) throw std::invalid_argument("shape needs nz,ny,nx");
         c.phantom.shape = {ParseNumber<int64_t>(parts[0]), ParseNumber<int64_t>(parts[1]),
                            ParseNumber<int64_t>(parts[2])};
       },
       [](const RunConfig& c) {
         return Join(std::vector<int64_t>{c.phantom.shape.nz, c.phantom.shape.ny, c.phantom.shape.nx});
       }},
      {"phantom.spacing_mm",
       [](RunConfig& c, const std::string& v) {
         const auto parts = SplitList(v);
         if (parts.size() != 3) throw std::invalid_argument("spacing needs sz,sy,sx");
         c.phantom.spacing = {ParseNumber<double>(parts[0]), ParseNumber<double>(parts[1]),
                              ParseNumber<double>(parts[2])};
       },
       [](const RunConfig& c) {
         return Join(std::vector<double>{c.phantom.spacing.sz, c.phantom.spacing.sy, c.phantom.spacing.sx});
       }},
      VSG_NUMBER_KEY("phantom.min_bleedings", phantom.min_bleedings, int),
      VSG_NUMBER_KEY("phantom.max_bleedings", phantom.max_bleedings, int),
      VSG_NUMBER_KEY("phantom.bleeding_count_decay", phantom.bleeding_count_decay, double),
      VSG_NUMBER_KEY("phantom.min_volume_cm3", phantom.min_volume_cm3, double),
      VSG_NUMBER_KEY("phantom.max_volume_cm3", phantom.max_volume_cm3, double),
      VSG_NUMBER_KEY("phantom.related_min_volume_cm3", phantom.related_min_volume_cm3, double),
      VSG_NUMBER_KEY("phantom.related_max_volume_cm3", phantom.related_max_volume_cm3, double),
      VSG_NUMBER_KEY("phantom.p_blood_flow", phantom.p_blood_flow, double),
      VSG_NUMBER_KEY("phantom.p_asymmetry", phantom.p_asymmetry, double),
      VSG_NUMBER_KEY("phantom.p_midline_shift", phantom.p_midline_shift, double),
      VSG_NUMBER_KEY("phantom.p_fragmented_ventricle", phantom.p_fragmented_ventricle, double),
      VSG_NUMBER_KEY("phantom.max_attempts", phantom.max_attempts, int),

      VSG_NUMBER_KEY("noise.morph_probability", phantom.noise.morph_probability, double),
      VSG_NUMBER_KEY("noise.morph_radius", phantom.noise.morph_radius, int),
      VSG_NUMBER_KEY("noise.drop_probability", phantom.noise.drop_probability, double),
      VSG_NUMBER_KEY("noise.drop_max_voxels", phantom.noise.drop_max_voxels, int64_t),
      VSG_NUMBER_KEY("noise.flip_probability", phantom.noise.flip_probability, double),
  };
  return keys;
}

}  // namespace

RunConfig ParseRunConfig(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw Error(ErrorKind::kInvalidConfig, where + "expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    const auto& keys = Keys();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == key; });
    if (it == keys.end()) throw Error(ErrorKind::kInvalidConfig, where + "unknown key '" + key + "'");
    try {
      it->set(base, value);
    } catch (const std::invalid_argument& e) {
      throw Error(ErrorKind::kInvalidConfig, where + key + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kInvalidConfig, where + key + ": " + e.message());
    }
  }
  base.check();
  return base;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str());
}

std::string RunConfigToText(const RunConfig& config) {
  std::string out;
  for (const auto& k : Keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace vsg
