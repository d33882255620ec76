#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "test_util.h"
#include "vsg/cli.h"
#include "vsg/dataset.h"
#include "vsg/error.h"
#include "vsg/graph_json.h"
#include "vsg/nifti.h"
#include "vsg/png.h"
#include "vsg/run_config.h"
#include "vsg/server.h"

namespace vsg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void Spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

PhantomConfig SmallPhantoms() {
  PhantomConfig c;
  c.shape = {32, 48, 48};
  return c;
}

// ---- run configuration ----

TEST(RunConfig, TextRoundTrip) {
  RunConfig c;
  c.seeds = {3, 9};
  c.model.arch = Architecture::kVImp;
  c.model.hidden = 12;
  c.train.learning_rate = 0.005;
  c.phantom.shape = {20, 30, 40};
  c.phantom.noise.drop_max_voxels = 4;
  c.match.task = Task::kSgGen;
  const std::string text = RunConfigToText(c);
  const RunConfig back = ParseRunConfig(text);
  EXPECT_EQ(RunConfigToText(back), text);
  EXPECT_EQ(back.seeds, c.seeds);
  EXPECT_EQ(back.model.arch, Architecture::kVImp);
  EXPECT_EQ(back.phantom.shape, c.phantom.shape);
}

TEST(RunConfig, CommentsAndBlankLines) {
  const RunConfig c = ParseRunConfig("# a comment\n\nmodel.hidden = 16   # trailing\n  eval.k=4\n");
  EXPECT_EQ(c.model.hidden, 16);
  EXPECT_EQ(c.match.k, 4);
}

TEST(RunConfig, UnknownKeyNamesItsLine) {
  try {
    ParseRunConfig("model.hidden = 8\n\nmodel.hiden = 8\n");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidConfig);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("model.hiden"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, BadValuesAreRejected) {
  for (const char* text : {"model.hidden = abc", "model.hidden = 0", "eval.iou = 1.5", "eval.task = detect",
                           "model.grounding = maybe", "seeds = ", "no equals sign", "train.momentum = 1"}) {
    try {
      ParseRunConfig(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidConfig) << text;
    }
  }
}

TEST(RunConfig, MissingFileIsIoFailure) {
  try {
    LoadRunConfig("/nonexistent/run.cfg");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIoFailure);
  }
}

// ---- PNG ----

TEST(Png, GrayRoundTrip) {
  const std::vector<uint8_t> px{0, 10, 20, 200, 255, 7};
  const DecodedPng d = DecodePng(EncodeGrayPng(3, 2, px));
  EXPECT_EQ(d.width, 3);
  EXPECT_EQ(d.height, 2);
  EXPECT_EQ(d.bit_depth, 8);
  EXPECT_EQ(d.pixels, px);
}

TEST(Png, IndexedRoundTripKeepsPalette) {
  const std::vector<uint8_t> idx{0, 1, 2, 3, 3, 0, 1, 2};
  const std::vector<Rgba> pal{{0, 0, 0, 0}, {255, 0, 0, 128}, {0, 255, 0, 255}, {1, 2, 3, 4}};
  const DecodedPng d = DecodePng(EncodeIndexedPng(4, 2, idx, pal));
  EXPECT_EQ(d.pixels, idx);
  ASSERT_EQ(d.palette.size(), pal.size());
  for (size_t i = 0; i < pal.size(); ++i) {
    EXPECT_EQ(d.palette[i].r, pal[i].r);
    EXPECT_EQ(d.palette[i].a, pal[i].a);
  }
}

TEST(Png, GarbageIsRejected) {
  try {
    DecodePng("not a png at all");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedHeader);
  }
}

// ---- annotation server ----

class ServerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("vsg_server");
    GenerateDataset(dir_->str(), SmallPhantoms(), 3, 11);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  void SetUp() override {
    server_ = std::make_unique<AnnotationServer>(dir_->str());
    port_ = server_->Start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override { server_->Stop(); }

  static TempDir* dir_;
  std::unique_ptr<AnnotationServer> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TempDir* ServerTest::dir_ = nullptr;

TEST_F(ServerTest, ListsCasesAndMeta) {
  auto r = client_->Get("/api/cases");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const json cases = json::parse(r->body).at("cases");
  ASSERT_EQ(cases.size(), 3u);
  EXPECT_EQ(cases[0], "case_0000");

  r = client_->Get("/api/cases/case_0001/meta");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const json meta = json::parse(r->body);
  EXPECT_EQ(meta.at("case_id"), "case_0001");
  EXPECT_FALSE(meta.contains("relations"));
  EXPECT_GE(meta.at("objects").size(), 3u);
}

TEST_F(ServerTest, SlicesAndOverlaysArePngs) {
  const Shape3 s = SmallPhantoms().shape;
  auto r = client_->Get("/api/cases/case_0000/slice/axial/16");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  DecodedPng d = DecodePng(r->body);
  EXPECT_EQ(d.width, s[2]);
  EXPECT_EQ(d.height, s[1]);

  r = client_->Get("/api/cases/case_0000/slice/coronal/0?wl=1&ww=2");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  d = DecodePng(r->body);
  EXPECT_EQ(d.width, s[2]);
  EXPECT_EQ(d.height, s[0]);

  // The overlay carries label indices, so it must agree with the stored map.
  const LabelMap labels = ReadCaseLabels(dir_->str(), "case_0000");
  r = client_->Get("/api/cases/case_0000/overlay/sagittal/24");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  d = DecodePng(r->body);
  ASSERT_EQ(d.width, s[1]);
  ASSERT_EQ(d.height, s[0]);
  for (int z = 0; z < s[0]; ++z) {
    for (int y = 0; y < s[1]; ++y) ASSERT_EQ(d.pixels[z * s[1] + y], labels.labels.at(z, y, 24));
  }

  EXPECT_EQ(client_->Get("/api/cases/case_0000/slice/axial/32")->status, 404);
  EXPECT_EQ(client_->Get("/api/cases/case_0000/slice/oblique/1")->status, 404);
  EXPECT_EQ(client_->Get("/api/cases/case_0000/slice/axial/1?ww=0")->status, 400);
}

TEST_F(ServerTest, UnknownCaseIs404) {
  auto r = client_->Get("/api/cases/case_9999/meta");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_TRUE(json::parse(r->body).contains("error"));
}

TEST_F(ServerTest, InvalidPutIs422AndLeavesDiskAlone) {
  const std::string path = CaseDir(dir_->str(), "case_0002") + "/graph.json";
  const std::string before = Slurp(path);
  const SceneGraph g = ReadCaseGraph(dir_->str(), "case_0002");
  int ventricle = 0, midline = 0;
  for (const auto& o : g.objects) {
    if (o.category == Category::kVentricle) ventricle = o.id;
    if (o.category == Category::kMidline) midline = o.id;
  }
  // A midline-shift aimed at the ventricle system breaks the category rule.
  const json bad = {{"relations", json::array({{{"subject", midline}, {"object", ventricle},
                                                 {"predicate", 1}, {"score", 1.0}}})}};
  auto r = client_->Put("/api/cases/case_0002/relations", bad.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 422);
  EXPECT_FALSE(json::parse(r->body).at("violations").empty());
  EXPECT_EQ(Slurp(path), before);

  r = client_->Put("/api/cases/case_0002/relations", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(Slurp(path), before);
}

TEST_F(ServerTest, PutThenGetReturnsTheSameRelations) {
  const SceneGraph g = ReadCaseGraph(dir_->str(), "case_0001");
  int bleeding = 0, ventricle = 0;
  for (const auto& o : g.objects) {
    if (o.category == Category::kBleeding && bleeding == 0) bleeding = o.id;
    if (o.category == Category::kVentricle) ventricle = o.id;
  }
  const json rels = json::array({{{"subject", bleeding}, {"object", ventricle}, {"predicate", 3},
                                  {"score", 1.0}}});
  auto r = client_->Put("/api/cases/case_0001/relations", json{{"relations", rels}}.dump(), "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  r = client_->Get("/api/cases/case_0001/relations");
  ASSERT_TRUE(r);
  const SceneGraph stored = ReadCaseGraph(dir_->str(), "case_0001");
  ASSERT_EQ(stored.relations.size(), 1u);
  EXPECT_EQ(stored.relations[0].subject, bleeding);
  EXPECT_EQ(stored.relations[0].predicate, Predicate::kAsymmetry);
  EXPECT_EQ(json::parse(r->body).at("relations"), RelationsToJson(stored.relations));
  EXPECT_EQ(stored.objects.size(), g.objects.size());
}

TEST_F(ServerTest, BusyPortIsAnError) {
  AnnotationServer other(dir_->str());
  try {
    other.Start("127.0.0.1", port_);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIoFailure);
  }
}

TEST(Server, EmptyDirectoryIsAnError) {
  TempDir empty;
  EXPECT_THROW(AnnotationServer{empty.str()}, Error);
}

// ---- command line ----

struct CliRun {
  int code;
  std::string out, err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Cli({"extract"}).code, kExitUsage);
  EXPECT_EQ(Cli({"train", "--arch", "v-nope", "--data", "/tmp", "--out", "/tmp/x"}).code, kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST(Cli, DataErrorsExitWithTwo) {
  const CliRun r = Cli({"extract", "--labels", "/nonexistent/labels.nii.gz", "--out", "/tmp/unused.json"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, BadConfigFileIsUsage) {
  TempDir dir;
  Spit(dir.file("run.cfg"), "model.hidden = 8\nbogus.key = 1\n");
  const CliRun r = Cli({"config", "--config", dir.file("run.cfg")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, ExtractOnEmptyMapGivesNoObjects) {
  TempDir dir;
  WriteVolume(Volume::FromGrid(Grid<uint8_t>({4, 5, 6}, 0), {1, 1, 1}), dir.file("empty.nii.gz"));
  const CliRun r = Cli({"extract", "--labels", dir.file("empty.nii.gz"), "--out", dir.file("objects.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json doc = json::parse(Slurp(dir.file("objects.json")));
  EXPECT_TRUE(doc.at("objects").empty());
}

TEST(Cli, EvalOfGroundTruthIsPerfect) {
  TempDir dir;
  const std::string data = dir.file("data"), pred = dir.file("pred");
  GenerateDataset(data, SmallPhantoms(), 12, 3);
  fs::create_directories(pred);
  for (const auto& id : ReadManifest(data).split("test")) {
    fs::copy_file(CaseDir(data, id) + "/graph.json", pred + "/" + id + ".json");
  }
  const CliRun r = Cli({"eval-sgg", "--data", data, "--pred", pred, "--pred", pred, "--task", "predcls",
                        "--json", dir.file("m.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("100.0 ± 0.0"), std::string::npos) << r.out;
  const json m = json::parse(Slurp(dir.file("m.json")));
  EXPECT_EQ(m.at("runs").size(), 2u);
  EXPECT_EQ(m.at("aggregate").at("runs"), 2);
  EXPECT_EQ(m.at("aggregate").at("metrics").at("R@8").at("mean"), 1.0);
  EXPECT_EQ(m.at("aggregate").at("metrics").at("R@8").at("std"), 0.0);
}

TEST(Cli, TrainPredictEvalEndToEnd) {
  TempDir dir;
  const std::string data = dir.file("data"), models = dir.file("models");
  GenerateDataset(data, SmallPhantoms(), 12, 4);
  Spit(dir.file("run.cfg"), "model.hidden = 8\ntrain.max_epochs = 3\ntrain.patience = 3\n");
  CliRun r = Cli({"train", "--config", dir.file("run.cfg"), "--data", data, "--out", models, "--seeds", "2",
                  "--arch", "v-imp"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* s : {"seed_1", "seed_2"}) {
    EXPECT_TRUE(fs::exists(models + "/" + s + "/model.json")) << s;
    EXPECT_TRUE(fs::exists(models + "/" + s + "/train_log.json")) << s;
  }
  EXPECT_TRUE(fs::exists(models + "/run_config.txt"));
  EXPECT_EQ(LoadRunConfig(models + "/run_config.txt").model.hidden, 8);

  for (const char* out : {"p1", "p2"}) {
    r = Cli({"predict", "--data", data, "--model", models + "/seed_1/model.json", "--out", dir.file(out), "--task",
             "sggen"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  for (const auto& id : ReadManifest(data).split("test")) {
    const std::string a = Slurp(dir.file("p1") + "/" + id + ".json");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, Slurp(dir.file("p2") + "/" + id + ".json")) << id;
  }
  r = Cli({"eval-sgg", "--data", data, "--pred", dir.file("p1"), "--task", "sggen", "--csv", dir.file("t.csv"),
           "--label", "imp"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = Slurp(dir.file("t.csv"));
  EXPECT_EQ(csv.rfind("method,", 0), 0u) << csv;
  EXPECT_NE(csv.find("\nimp,"), std::string::npos) << csv;
}

TEST(Cli, StatsReportsCounts) {
  TempDir dir;
  GenerateDataset(dir.file("data"), SmallPhantoms(), 5, 8);
  const CliRun r = Cli({"stats", "--data", dir.file("data"), "--json", dir.file("s.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(Slurp(dir.file("s.json"))).at("num_graphs"), 5);
}

}  // namespace
}  // namespace vsg
