#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <functional>
#include <vector>

#include "test_util.h"
#include "vsg/error.h"
#include "vsg/graph_json.h"
#include "vsg/nifti.h"
#include "vsg/rng.h"

namespace vsg {
namespace {

using testing::TempDir;

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidArgument;
}

// Numeric header fields as (offset, width); everything else is bytes.
const std::vector<std::pair<size_t, size_t>>& HeaderFields() {
  static const std::vector<std::pair<size_t, size_t>> fields = [] {
    std::vector<std::pair<size_t, size_t>> f{{0, 4}, {32, 4}, {36, 2}};
    for (size_t i = 0; i < 8; ++i) f.push_back({40 + 2 * i, 2});
    for (size_t off : {56, 60, 64}) f.push_back({off, 4});
    for (size_t off : {68, 70, 72, 74}) f.push_back({off, 2});
    for (size_t i = 0; i < 8; ++i) f.push_back({76 + 4 * i, 4});
    for (size_t off : {108, 112, 116}) f.push_back({off, 4});
    f.push_back({120, 2});
    for (size_t off : {124, 128, 132, 136, 140, 144}) f.push_back({off, 4});
    for (size_t off : {252, 254}) f.push_back({off, 2});
    for (size_t i = 0; i < 6; ++i) f.push_back({256 + 4 * i, 4});
    for (size_t i = 0; i < 12; ++i) f.push_back({280 + 4 * i, 4});
    return f;
  }();
  return fields;
}

std::vector<uint8_t> SwapEndianness(std::vector<uint8_t> bytes, size_t value_size) {
  for (const auto& [off, width] : HeaderFields()) std::reverse(bytes.begin() + off, bytes.begin() + off + width);
  if (value_size > 1) {
    for (size_t p = kNiftiSingleFileOffset; p + value_size <= bytes.size(); p += value_size) {
      std::reverse(bytes.begin() + p, bytes.begin() + p + value_size);
    }
  }
  return bytes;
}

template <typename T>
Volume RandomVolume(Shape3 shape, Spacing3 spacing, uint64_t seed) {
  Rng rng(seed);
  std::vector<T> values(shape.size());
  for (auto& v : values) {
    if constexpr (std::is_floating_point_v<T>) {
      v = static_cast<T>(rng.uniform(-1000.0, 1000.0));
    } else {
      v = static_cast<T>(rng.next());
    }
  }
  return Volume(shape, spacing, values);
}

TEST(Nifti, MinimalUint8RoundTrip) {
  TempDir dir;
  const Volume v({2, 2, 2}, {1, 1, 1}, std::vector<uint8_t>{0, 1, 2, 3, 4, 5, 6, 7});
  WriteVolume(v, dir.file("tiny.nii"));
  const Volume back = ReadVolume(dir.file("tiny.nii"));
  EXPECT_EQ(back.shape(), (Shape3{2, 2, 2}));
  EXPECT_EQ(back.values<uint8_t>(), v.values<uint8_t>());
}

TEST(Nifti, RoundTripEveryKindPlainAndGzip) {
  TempDir dir;
  const Shape3 shape{3, 5, 7};
  const Spacing3 spacing{5.0, 0.4, 0.4};
  const std::vector<Volume> volumes = {RandomVolume<uint8_t>(shape, spacing, 1), RandomVolume<int16_t>(shape, spacing, 2),
                                       RandomVolume<uint16_t>(shape, spacing, 3), RandomVolume<float>(shape, spacing, 4)};
  for (const auto& v : volumes) {
    for (const char* name : {"v.nii", "v.nii.gz"}) {
      WriteVolume(v, dir.file(name));
      const Volume back = ReadVolume(dir.file(name));
      EXPECT_EQ(back.kind(), v.kind());
      EXPECT_EQ(back.shape(), shape);
      EXPECT_NEAR(back.spacing().sz, 5.0, 1e-6);
      EXPECT_NEAR(back.spacing().sy, 0.4, 1e-6);
      EXPECT_NEAR(back.spacing().sx, 0.4, 1e-6);
      EXPECT_TRUE(back.storage() == v.storage()) << name;
    }
  }
}

TEST(Nifti, SingleVoxelFileSize) {
  const Volume v({1, 1, 1}, {1, 1, 1}, std::vector<uint8_t>{7});
  const std::vector<uint8_t> bytes = EncodeVolume(v);
  EXPECT_EQ(bytes.size(), 353u);
  EXPECT_EQ(bytes.back(), 7);
}

TEST(Nifti, ByteSwappedFileDecodesIdentically) {
  for (const Volume& v : {RandomVolume<uint8_t>({2, 3, 4}, {1.5, 1, 0.5}, 9), RandomVolume<int16_t>({2, 3, 4}, {1.5, 1, 0.5}, 10),
                          RandomVolume<float>({2, 3, 4}, {1.5, 1, 0.5}, 11)}) {
    const std::vector<uint8_t> native = EncodeVolume(v);
    const std::vector<uint8_t> swapped = SwapEndianness(native, ValueKindSize(v.kind()));
    ASSERT_NE(native, swapped);
    EXPECT_EQ(DecodeVolume(swapped), DecodeVolume(native));
  }
}

// Written by nibabel (tests/data): big-endian headers and payloads.
TEST(Nifti, ReadsThirdPartyBigEndianFiles) {
  const Volume i16 = ReadVolume(std::string(VSG_TEST_DATA_DIR) + "/nibabel_be_int16.nii");
  const Volume f32 = ReadVolume(std::string(VSG_TEST_DATA_DIR) + "/nibabel_be_float32.nii");
  const Volume u8 = ReadVolume(std::string(VSG_TEST_DATA_DIR) + "/nibabel_le_uint8.nii.gz");
  ASSERT_EQ(i16.kind(), ValueKind::kInt16);
  ASSERT_EQ(f32.kind(), ValueKind::kFloat32);
  ASSERT_EQ(u8.kind(), ValueKind::kUint8);
  const Shape3 shape{3, 4, 5};
  EXPECT_EQ(i16.shape(), shape);
  EXPECT_NEAR(i16.spacing().sz, 2.5, 1e-6);
  EXPECT_NEAR(i16.spacing().sy, 1.0, 1e-6);
  EXPECT_NEAR(i16.spacing().sx, 0.8, 1e-6);
  for (int64_t z = 0; z < 3; ++z)
    for (int64_t y = 0; y < 4; ++y)
      for (int64_t x = 0; x < 5; ++x) {
        const int64_t at = shape.index(z, y, x);
        EXPECT_EQ(i16.value(at), 100 * z + 10 * y + x - 50);
        EXPECT_EQ(f32.value(at), 0.25 * (20 * z + 5 * y + x));
        EXPECT_EQ(u8.value(at), (z + y + x) % 4);
      }
}

TEST(Nifti, RejectsPermutedAxes) {
  EXPECT_EQ(KindOf([] { ReadVolume(std::string(VSG_TEST_DATA_DIR) + "/nibabel_permuted.nii"); }),
            ErrorKind::kNonCanonicalOrientation);
}

TEST(Nifti, HeaderErrors) {
  const Volume v({2, 2, 2}, {1, 1, 1}, std::vector<uint8_t>(8, 1));
  const std::vector<uint8_t> good = EncodeVolume(v);

  auto bad_magic = good;
  std::memcpy(bad_magic.data() + 344, "XXXX", 4);
  EXPECT_EQ(KindOf([&] { DecodeVolume(bad_magic); }), ErrorKind::kMalformedHeader);

  auto bad_size = good;
  bad_size[0] = 0x10;
  EXPECT_EQ(KindOf([&] { DecodeVolume(bad_size); }), ErrorKind::kMalformedHeader);

  auto four_d = good;
  four_d[40] = 4;
  EXPECT_EQ(KindOf([&] { DecodeVolume(four_d); }), ErrorKind::kUnsupportedDimensionality);

  auto float64 = good;
  float64[70] = 64;
  float64[72] = 64;
  EXPECT_EQ(KindOf([&] { DecodeVolume(float64); }), ErrorKind::kUnsupportedDatatype);

  auto pair_file = good;
  std::memcpy(pair_file.data() + 344, "ni1\0", 4);
  EXPECT_EQ(KindOf([&] { DecodeVolume(pair_file); }), ErrorKind::kMalformedHeader);

  const std::vector<uint8_t> header_only(good.begin(), good.begin() + 200);
  EXPECT_EQ(KindOf([&] { DecodeVolume(header_only); }), ErrorKind::kTruncatedData);

  const std::vector<uint8_t> short_data(good.begin(), good.end() - 1);
  EXPECT_EQ(KindOf([&] { DecodeVolume(short_data); }), ErrorKind::kTruncatedData);
}

TEST(Nifti, VoxOffsetHonored) {
  const Volume v({1, 2, 2}, {1, 1, 1}, std::vector<uint8_t>{1, 2, 3, 0});
  std::vector<uint8_t> bytes = EncodeVolume(v);
  const float offset = 400.0f;
  std::memcpy(bytes.data() + 108, &offset, 4);
  bytes.insert(bytes.begin() + kNiftiSingleFileOffset, 48, 0xAB);
  EXPECT_EQ(DecodeVolume(bytes), v);
}

TEST(Nifti, TruncatedGzipIsAnError) {
  const Volume v = RandomVolume<int16_t>({4, 6, 6}, {1, 1, 1}, 5);
  const std::vector<uint8_t> raw = EncodeVolume(v);
  const std::vector<uint8_t> gz = GzipBytes(raw);
  for (size_t cut : {size_t{5}, gz.size() / 2, gz.size() - 9}) {
    const std::vector<uint8_t> part(gz.begin(), gz.begin() + cut);
    EXPECT_THROW(DecodeVolume(part), Error) << cut;
  }
}

TEST(Nifti, MissingFileIsIoFailure) {
  EXPECT_EQ(KindOf([] { ReadVolume("/nonexistent/dir/x.nii"); }), ErrorKind::kIoFailure);
}

TEST(LabelMapConversion, RejectsOutOfRangeValues) {
  const Volume v({1, 1, 2}, {1, 1, 1}, std::vector<uint8_t>{1, 7});
  EXPECT_EQ(KindOf([&] { LabelMap::FromVolume(v); }), ErrorKind::kSchemaViolation);
  const Volume f({1, 1, 2}, {1, 1, 1}, std::vector<float>{1.0f, 2.5f});
  EXPECT_EQ(KindOf([&] { LabelMap::FromVolume(f); }), ErrorKind::kSchemaViolation);
  const Volume ok({1, 1, 2}, {1, 1, 1}, std::vector<int16_t>{3, 0});
  EXPECT_EQ(LabelMap::FromVolume(ok).labels.data, (std::vector<uint8_t>{3, 0}));
}

TEST(GraphJson, EmptyGraphRoundTrip) {
  TempDir dir;
  SceneGraph g;
  g.case_id = "empty";
  g.shape = {4, 5, 6};
  WriteSceneGraph(g, dir.file("g.json"));
  EXPECT_EQ(ReadSceneGraph(dir.file("g.json")), g);
}

TEST(GraphJson, Fig1GraphRoundTripIsLossless) {
  TempDir dir;
  SceneGraph g = testing::Fig1Graph();
  g.objects[0].score = 0.123456789012345678;
  g.relations[1].score = 1.0 / 3.0;
  WriteSceneGraph(g, dir.file("g.json"));
  const SceneGraph back = ReadSceneGraph(dir.file("g.json"));
  EXPECT_EQ(back, g);
  EXPECT_EQ(back.objects[0].score, g.objects[0].score);
  EXPECT_EQ(back.spacing, g.spacing);
}

TEST(GraphJson, DanglingRelation) {
  nlohmann::json doc = SceneGraphToJson(testing::Fig1Graph());
  doc["relations"][0]["object"] = 99;
  EXPECT_EQ(KindOf([&] { SceneGraphFromJson(doc); }), ErrorKind::kDanglingRelation);
}

TEST(GraphJson, SchemaViolationNamesField) {
  const nlohmann::json base = SceneGraphToJson(testing::Fig1Graph());
  struct Mutation {
    std::function<void(nlohmann::json&)> apply;
    std::string field;
  };
  const std::vector<Mutation> mutations = {
      {[](nlohmann::json& d) { d.erase("case_id"); }, "case_id"},
      {[](nlohmann::json& d) { d["shape"] = {1, 2}; }, "shape"},
      {[](nlohmann::json& d) { d["objects"][0]["category"] = 5; }, "category"},
      {[](nlohmann::json& d) { d["objects"][1]["box"] = {0, 0, 0, 1, 1}; }, "box"},
      {[](nlohmann::json& d) { d["objects"][2]["score"] = "high"; }, "score"},
      {[](nlohmann::json& d) { d["relations"][0]["predicate"] = 0; }, "predicate"},
      {[](nlohmann::json& d) { d["spacing_mm"] = {1, -1, 1}; }, "spacing_mm"},
  };
  for (const auto& m : mutations) {
    nlohmann::json doc = base;
    m.apply(doc);
    try {
      SceneGraphFromJson(doc);
      ADD_FAILURE() << "accepted mutation of " << m.field;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kSchemaViolation) << m.field;
      EXPECT_NE(std::string(e.what()).find(m.field), std::string::npos) << e.what();
    }
  }
}

}  // namespace
}  // namespace vsg
