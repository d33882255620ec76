#include "vsg/cli.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "vsg/dataset.h"
#include "vsg/error.h"
#include "vsg/graph_json.h"
#include "vsg/nifti.h"
#include "vsg/pipeline.h"
#include "vsg/run_config.h"
#include "vsg/server.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vsg {

namespace {

// Usage problems detected after argument parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string data;
  std::string out;
  std::string labels;
  std::string case_id;
  std::string model;
  std::string arch;
  std::string task;
  std::string split = "test";
  std::string label;
  std::string json_path;
  std::string csv_path;
  std::string host = "127.0.0.1";
  std::vector<std::string> pred_dirs;
  int cases = 300;
  int seeds = 0;
  int jobs = 1;
  int k = 0;
  int port = 8080;
  double iou = 0.0;
  uint64_t seed = 1;
  uint64_t degrade_seed = 0;
  bool grounding = false;
  bool unconstrained = false;
};

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}
  int Run(const std::vector<std::string>& args);

 private:
  RunConfig Config(const CLI::App& sub) const;
  std::string DataDir(const RunConfig& c) const;
  std::string OutDir(const RunConfig& c) const;

  void Synth(const CLI::App& sub);
  void Extract(const CLI::App& sub);
  void Degrade(const CLI::App& sub);
  void Train(const CLI::App& sub);
  void PredictCmd(const CLI::App& sub);
  void EvalDet(const CLI::App& sub);
  void EvalSgg(const CLI::App& sub);
  void Stats(const CLI::App& sub);
  void Serve(const CLI::App& sub);
  void PrintConfig(const CLI::App& sub);

  void Emit(const json& doc) const;

  std::ostream& out_;
  std::ostream& err_;
  Options o_;
};

bool Given(const CLI::App& sub, const std::string& name) {
  const CLI::Option* opt = sub.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

RunConfig Cli::Config(const CLI::App& sub) const {
  RunConfig c = o_.config_path.empty() ? RunConfig{} : LoadRunConfig(o_.config_path);
  if (Given(sub, "--k")) c.match.k = o_.k;
  if (Given(sub, "--iou")) c.match.iou_threshold = o_.iou;
  if (Given(sub, "--task")) c.match.task = ParseTask(o_.task);
  if (Given(sub, "--arch")) c.model.arch = ParseArchitecture(o_.arch);
  if (Given(sub, "--grounding")) c.model.grounding = true;
  if (Given(sub, "--unconstrained")) c.unconstrained = true;
  if (Given(sub, "--degrade-seed")) c.degrade_seed = o_.degrade_seed;
  if (Given(sub, "--seeds")) {
    if (o_.seeds < 1) throw UsageError("--seeds must be >= 1");
    c.seeds.clear();
    for (int s = 1; s <= o_.seeds; ++s) c.seeds.push_back(static_cast<uint64_t>(s));
  }
  c.check();
  return c;
}

std::string Cli::DataDir(const RunConfig& c) const {
  const std::string d = o_.data.empty() ? c.data_dir : o_.data;
  if (d.empty()) throw UsageError("--data (or data_dir in the config) is required");
  return d;
}

std::string Cli::OutDir(const RunConfig& c) const {
  const std::string d = o_.out.empty() ? c.output_dir : o_.out;
  if (d.empty()) throw UsageError("--out (or output_dir in the config) is required");
  return d;
}

void Cli::Emit(const json& doc) const {
  const std::string text = doc.dump(2) + "\n";
  if (!o_.json_path.empty()) WriteTextFileAtomic(o_.json_path, text);
  out_ << text;
}

void Cli::Synth(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  const std::string root = OutDir(c);
  if (o_.cases < 1) throw UsageError("--cases must be >= 1");
  const DatasetManifest m = GenerateDataset(root, c.phantom, o_.cases, o_.seed);
  out_ << "wrote " << m.cases.size() << " cases to " << root << " (train " << m.split("train").size() << ", val "
       << m.split("val").size() << ", test " << m.split("test").size() << ")\n";
}

void Cli::Extract(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  if (o_.out.empty()) throw UsageError("--out is required");
  const LabelMap labels = LabelMap::FromVolume(ReadVolume(o_.labels));
  SceneGraph g;
  g.case_id = o_.case_id.empty() ? fs::path(o_.labels).filename().string() : o_.case_id;
  if (o_.case_id.empty()) {
    for (const char* ext : {".gz", ".nii"}) {
      if (g.case_id.size() > std::strlen(ext) && g.case_id.ends_with(ext)) g.case_id.resize(g.case_id.size() - std::strlen(ext));
    }
  }
  g.shape = labels.shape();
  g.spacing = labels.spacing;
  g.objects = ExtractObjects(labels, c.instancing);
  WriteSceneGraph(g, o_.out);
  out_ << "extracted " << g.objects.size() << " objects to " << o_.out << "\n";
}

void Cli::Degrade(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  if (o_.out.empty()) throw UsageError("--out is required");
  const LabelMap labels = LabelMap::FromVolume(ReadVolume(o_.labels));
  WriteVolume(DegradeLabelMap(labels, o_.seed, c.phantom.noise).ToVolume(), o_.out);
  out_ << "wrote " << o_.out << "\n";
}

void Cli::Train(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  const std::string root = DataDir(c);
  const std::string out_dir = OutDir(c);
  if (o_.jobs < 1) throw UsageError("--jobs must be >= 1");
  const DatasetManifest m = ReadManifest(root);
  const auto train = LoadPreparedCases(root, m.split("train"), c.model.grounding);
  const auto val = LoadPreparedCases(root, m.split("val"), c.model.grounding);

  const size_t n = c.seeds.size();
  std::vector<TrainResult> results(n);
  std::vector<std::exception_ptr> failures(n);
  auto run = [&](size_t i) {
    try {
      results[i] = vsg::Train(c.model, c.train, train, val, c.seeds[i]);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  // Seeds are independent jobs; each one is single-threaded and deterministic.
  for (size_t start = 0; start < n; start += static_cast<size_t>(o_.jobs)) {
    std::vector<std::thread> workers;
    for (size_t i = start; i < std::min(n, start + static_cast<size_t>(o_.jobs)); ++i) workers.emplace_back(run, i);
    for (auto& w : workers) w.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  const TripletMatchSpec spec{c.match.iou_threshold, c.match.k, Task::kPredCls};
  std::vector<MetricReport> reports;
  json runs = json::array();
  for (size_t i = 0; i < n; ++i) {
    const fs::path dir = fs::path(out_dir) / ("seed_" + std::to_string(c.seeds[i]));
    fs::create_directories(dir);
    SaveModel(results[i].model, (dir / "model.json").string());
    WriteTextFileAtomic((dir / "train_log.json").string(), TrainLogToJson(results[i]).dump(2) + "\n");
    const RecallReport r = EvaluatePredCls(results[i].model, val.empty() ? train : val, spec);
    MetricReport report = SggMetricReport(r, UpperBound{1.0, 1.0}, c.match.k);
    report.erase("UB-R");
    report.erase("UB-mR");
    reports.push_back(report);
    runs.push_back({{"seed", c.seeds[i]}, {"best_epoch", results[i].best_epoch}, {"metrics", report}});
  }
  const AggregateReport agg = AggregateSeeds(reports);
  json doc = {{"architecture", ArchitectureName(c.model.arch)},
              {"grounding", c.model.grounding},
              {"split", val.empty() ? "train" : "val"},
              {"k", c.match.k},
              {"runs", runs},
              {"aggregate", AggregateToJson(agg, static_cast<int>(n))}};
  WriteTextFileAtomic((fs::path(out_dir) / "validation.json").string(), doc.dump(2) + "\n");
  WriteTextFileAtomic((fs::path(out_dir) / "run_config.txt").string(), RunConfigToText(c));
  std::string label(ArchitectureName(c.model.arch));
  if (c.model.grounding) label += " + Seg-G";
  auto columns = SggTableColumns(c.match.k);
  columns.resize(3);
  out_ << FormatTable({{label, agg}}, columns);
  out_ << "checkpoints and validation.json written to " << out_dir << "\n";
}

void Cli::PredictCmd(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  const std::string root = DataDir(c);
  const std::string out_dir = OutDir(c);
  const RelationModel model = LoadModel(o_.model);
  const DatasetManifest m = ReadManifest(root);
  const auto ids = m.split(o_.split);
  if (ids.empty()) throw Error(ErrorKind::kEmptyDataset, "split '" + o_.split + "' has no cases");
  PredictSettings settings;
  settings.task = c.match.task;
  settings.unconstrained = c.unconstrained;
  settings.degrade_seed = c.degrade_seed;
  settings.noise = c.phantom.noise;
  settings.instancing = c.instancing;
  fs::create_directories(out_dir);
  for (const auto& id : ids) {
    try {
      const LabelMap labels = ReadCaseLabels(root, id);
      const SceneGraph gt = ReadCaseGraph(root, id);
      WriteSceneGraph(PredictCase(model, gt, labels, settings), (fs::path(out_dir) / (id + ".json")).string());
    } catch (const Error& e) {
      throw Error(e.kind(), id + ": " + e.message());
    }
  }
  out_ << "wrote " << ids.size() << " " << TaskName(settings.task) << " predictions to " << out_dir << "\n";
}

// Gt graphs and predicted graphs of one prediction directory.
struct LoadedRun {
  std::vector<SceneGraph> gts;
  std::vector<SceneGraph> preds;
};

LoadedRun LoadRun(const std::string& root, const std::vector<std::string>& ids, const std::string& pred_dir) {
  LoadedRun run;
  for (const auto& id : ids) {
    try {
      run.gts.push_back(ReadCaseGraph(root, id));
      const fs::path p = fs::path(pred_dir) / (id + ".json");
      if (!fs::exists(p)) throw Error(ErrorKind::kIoFailure, "missing prediction " + p.string());
      run.preds.push_back(ReadSceneGraph(p.string()));
    } catch (const Error& e) {
      throw Error(e.kind(), id + ": " + e.message());
    }
  }
  return run;
}

void Cli::EvalDet(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  const std::string root = DataDir(c);
  if (o_.pred_dirs.size() != 1) throw UsageError("eval-det takes exactly one --pred directory");
  const auto ids = ReadManifest(root).split(o_.split);
  const LoadedRun run = LoadRun(root, ids, o_.pred_dirs[0]);
  std::vector<std::vector<SceneObject>> preds, gts;
  for (size_t i = 0; i < ids.size(); ++i) {
    preds.push_back(run.preds[i].objects);
    gts.push_back(run.gts[i].objects);
  }
  const DetectionMetrics d = ComputeDetectionMetrics(preds, gts, c.match.iou_threshold);
  json per = json::object();
  for (int k = 0; k < 3; ++k) {
    per[std::string(CategoryName(static_cast<Category>(k + 1)))] = {
        {"ar", d.ar[k]}, {"ap", d.ap[k]}, {"num_gt", d.num_gt[k]}};
  }
  Emit({{"iou", c.match.iou_threshold},
        {"split", o_.split},
        {"num_cases", ids.size()},
        {"categories", per},
        {"mean_ar", d.mean_ar},
        {"mean_ap", d.mean_ap}});
}

void Cli::EvalSgg(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  const std::string root = DataDir(c);
  if (o_.pred_dirs.empty()) throw UsageError("eval-sgg needs at least one --pred directory");
  const auto ids = ReadManifest(root).split(o_.split);
  if (ids.empty()) throw Error(ErrorKind::kEmptyDataset, "split '" + o_.split + "' has no cases");
  std::vector<MetricReport> reports;
  json runs = json::array();
  for (const auto& dir : o_.pred_dirs) {
    const LoadedRun run = LoadRun(root, ids, dir);
    std::vector<EvalCase> cases;
    std::vector<std::vector<SceneObject>> detections;
    for (size_t i = 0; i < ids.size(); ++i) {
      cases.push_back({run.preds[i], run.gts[i]});
      detections.push_back(c.match.task == Task::kPredCls ? run.gts[i].objects : run.preds[i].objects);
    }
    const RecallReport r = ComputeRecall(cases, c.match);
    const UpperBound ub = ComputeUpperBound(detections, run.gts, c.match);
    reports.push_back(SggMetricReport(r, ub, c.match.k));
    runs.push_back({{"predictions", fs::path(dir).lexically_normal().string()},
                    {"num_cases", r.num_cases},
                    {"metrics", reports.back()}});
  }
  const AggregateReport agg = AggregateSeeds(reports);
  const std::string label = o_.label.empty() ? std::string(TaskName(c.match.task)) : o_.label;
  const auto columns = SggTableColumns(c.match.k);
  const json doc = {{"task", TaskName(c.match.task)},
                    {"k", c.match.k},
                    {"iou", c.match.iou_threshold},
                    {"split", o_.split},
                    {"label", label},
                    {"runs", runs},
                    {"aggregate", AggregateToJson(agg, static_cast<int>(reports.size()))}};
  if (!o_.json_path.empty()) WriteTextFileAtomic(o_.json_path, doc.dump(2) + "\n");
  if (!o_.csv_path.empty()) WriteTextFileAtomic(o_.csv_path, FormatCsv({{label, agg}}, columns));
  out_ << FormatTable({{label, agg}}, columns);
}

void Cli::Stats(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  const std::string root = DataDir(c);
  std::vector<SceneGraph> graphs;
  for (const auto& id : ListCases(root)) {
    try {
      graphs.push_back(ReadCaseGraph(root, id));
    } catch (const Error& e) {
      throw Error(e.kind(), id + ": " + e.message());
    }
  }
  Emit(StatsToJson(ComputeStats(graphs)));
}

void Cli::Serve(const CLI::App& sub) {
  const RunConfig c = Config(sub);
  AnnotationServer server(DataDir(c));
  out_ << "serving " << DataDir(c) << " on http://" << o_.host << ":" << o_.port << "\n" << std::flush;
  server.Run(o_.host, o_.port);
}

void Cli::PrintConfig(const CLI::App& sub) { out_ << RunConfigToText(Config(sub)); }

int Cli::Run(const std::vector<std::string>& args) {
  CLI::App app{"Voxel scene graphs: synthesis, instancing, relation prediction, evaluation and annotation serving"};
  app.name("vsg");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto add_config = [&](CLI::App* s) { s->add_option("--config", o_.config_path, "key = value run configuration"); };
  auto add_data = [&](CLI::App* s) { s->add_option("--data", o_.data, "dataset directory"); };

  CLI::App* synth = app.add_subcommand("synth", "generate a phantom dataset");
  add_config(synth);
  synth->add_option("--out", o_.out, "output dataset directory");
  synth->add_option("--cases", o_.cases, "number of cases");
  synth->add_option("--seed", o_.seed, "master seed");

  CLI::App* extract = app.add_subcommand("extract", "instance objects from a label map");
  add_config(extract);
  extract->add_option("--labels", o_.labels, "label map (.nii or .nii.gz)")->required();
  extract->add_option("--out", o_.out, "objects JSON");
  extract->add_option("--case-id", o_.case_id, "case id stored in the JSON");

  CLI::App* degrade = app.add_subcommand("degrade", "simulate an imperfect segmentation");
  add_config(degrade);
  degrade->add_option("--labels", o_.labels, "label map")->required();
  degrade->add_option("--out", o_.out, "output label map");
  degrade->add_option("--seed", o_.seed, "noise seed");

  CLI::App* train = app.add_subcommand("train", "train relation models, one per seed");
  add_config(train);
  add_data(train);
  train->add_option("--out", o_.out, "checkpoint directory");
  train->add_option("--arch", o_.arch, "v-motif or v-imp");
  train->add_option("--seeds", o_.seeds, "train seeds 1..N");
  train->add_flag("--grounding", o_.grounding, "segmentation-grounded object features");
  train->add_option("--jobs", o_.jobs, "seeds trained concurrently");

  CLI::App* predict = app.add_subcommand("predict", "predict scene graphs for a split");
  add_config(predict);
  add_data(predict);
  predict->add_option("--model", o_.model, "checkpoint")->required();
  predict->add_option("--out", o_.out, "prediction directory");
  predict->add_option("--task", o_.task, "predcls or sggen");
  predict->add_option("--split", o_.split, "train, val or test");
  predict->add_option("--degrade-seed", o_.degrade_seed, "segmentation noise seed (sggen)");
  predict->add_flag("--unconstrained", o_.unconstrained, "rank every compatible predicate of a pair");

  CLI::App* eval_det = app.add_subcommand("eval-det", "detection AR/AP");
  add_config(eval_det);
  add_data(eval_det);
  eval_det->add_option("--pred", o_.pred_dirs, "prediction directory")->required();
  eval_det->add_option("--split", o_.split, "train, val or test");
  eval_det->add_option("--iou", o_.iou, "IoU threshold");
  eval_det->add_option("--json", o_.json_path, "also write the report here");

  CLI::App* eval_sgg = app.add_subcommand("eval-sgg", "R@K, mR@K, mAP@K and upper bound over runs");
  add_config(eval_sgg);
  add_data(eval_sgg);
  eval_sgg->add_option("--pred", o_.pred_dirs, "prediction directories, one per run")->required();
  eval_sgg->add_option("--task", o_.task, "predcls or sggen");
  eval_sgg->add_option("--k", o_.k, "K");
  eval_sgg->add_option("--iou", o_.iou, "IoU threshold");
  eval_sgg->add_option("--split", o_.split, "train, val or test");
  eval_sgg->add_option("--label", o_.label, "table row label");
  eval_sgg->add_option("--json", o_.json_path, "metric JSON output");
  eval_sgg->add_option("--csv", o_.csv_path, "CSV table output");

  CLI::App* stats = app.add_subcommand("stats", "dataset statistics");
  add_config(stats);
  add_data(stats);
  stats->add_option("--json", o_.json_path, "also write the statistics here");

  CLI::App* serve = app.add_subcommand("serve", "serve the annotation API");
  add_config(serve);
  add_data(serve);
  serve->add_option("--host", o_.host, "bind address");
  serve->add_option("--port", o_.port, "TCP port");

  CLI::App* config = app.add_subcommand("config", "print the effective run configuration");
  add_config(config);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_, err_);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) Synth(*synth);
    if (extract->parsed()) Extract(*extract);
    if (degrade->parsed()) Degrade(*degrade);
    if (train->parsed()) Train(*train);
    if (predict->parsed()) PredictCmd(*predict);
    if (eval_det->parsed()) EvalDet(*eval_det);
    if (eval_sgg->parsed()) EvalSgg(*eval_sgg);
    if (stats->parsed()) Stats(*stats);
    if (serve->parsed()) Serve(*serve);
    if (config->parsed()) PrintConfig(*config);
  } catch (const UsageError& e) {
    err_ << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    const bool usage = e.kind() == ErrorKind::kInvalidConfig || e.kind() == ErrorKind::kInvalidArgument;
    err_ << (usage ? "usage error: " : "error: ") << e.what() << "\n";
    return usage ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Cli cli(out, err);
  return cli.Run(args);
}

}  // namespace vsg
