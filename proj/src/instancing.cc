#include "vsg/instancing.h"

#include <algorithm>
#include <memory>

#include "vsg/error.h"
#include "vsg/rng.h"

namespace vsg {

void InstancingConfig::check() const {
  if (!(min_bleeding_volume_cm3 >= 0.0)) throw Error(ErrorKind::kInvalidConfig, "min_bleeding_volume_cm3 must be >= 0");
  if (min_anatomy_voxels < 1) throw Error(ErrorKind::kInvalidConfig, "min_anatomy_voxels must be >= 1");
}

void DegradeConfig::check() const {
  for (double p : {morph_probability, drop_probability, flip_probability}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::kInvalidConfig, "degrade probabilities must lie in [0,1]");
  }
  if (morph_probability > 0.5) throw Error(ErrorKind::kInvalidConfig, "morph_probability must be <= 0.5");
  if (morph_radius < 0) throw Error(ErrorKind::kInvalidConfig, "morph_radius must be >= 0");
}

LabelMap ArgmaxLabels(const ProbabilityMaps& probabilities, Spacing3 spacing) {
  const Shape3 shape = probabilities[0].shape;
  for (const auto& p : probabilities) {
    if (p.shape != shape) throw Error(ErrorKind::kShapeMismatch, "probability maps differ in shape");
  }
  LabelMap map{Grid<uint8_t>(shape), spacing};
  for (size_t i = 0; i < map.labels.data.size(); ++i) {
    uint8_t best = 0;
    for (uint8_t c = 1; c < 4; ++c) {
      if (probabilities[c].data[i] > probabilities[best].data[i]) best = c;
    }
    map.labels.data[i] = best;
  }
  return map;
}

BinaryGrid CropCategory(const Grid<uint8_t>& labels, const Box3& box, uint8_t category) {
  BinaryGrid crop(Shape3{box.extent(0), box.extent(1), box.extent(2)});
  for (int64_t z = box.lo[0]; z < box.hi[0]; ++z) {
    for (int64_t y = box.lo[1]; y < box.hi[1]; ++y) {
      for (int64_t x = box.lo[2]; x < box.hi[2]; ++x) {
        crop.at(z - box.lo[0], y - box.lo[1], x - box.lo[2]) = labels.at(z, y, x) == category;
      }
    }
  }
  return crop;
}

std::optional<SceneObject> ExtractSingleton(const LabelMap& map, Category category,
                                            const InstancingConfig& config, int id) {
  config.check();
  const auto c = static_cast<uint8_t>(category);
  const int64_t count = std::count(map.labels.data.begin(), map.labels.data.end(), c);
  if (count < config.min_anatomy_voxels) return std::nullopt;
  const auto box = BboxOfLabel(map.labels, c);
  SceneObject obj;
  obj.id = id;
  obj.category = category;
  obj.box = *box;
  obj.score = 1.0;
  obj.mask = std::make_shared<const BinaryGrid>(CropCategory(map.labels, *box, c));
  return obj;
}

std::vector<SceneObject> ExtractBleedings(const LabelMap& map, const InstancingConfig& config,
                                          const Grid<float>* bleeding_probability, int first_id) {
  config.check();
  if (bleeding_probability != nullptr && bleeding_probability->shape != map.shape()) {
    throw Error(ErrorKind::kShapeMismatch, "bleeding probability map shape differs from label map");
  }
  const Shape3& s = map.shape();
  BinaryGrid mask(s);
  for (size_t i = 0; i < mask.data.size(); ++i) {
    mask.data[i] = map.labels.data[i] == static_cast<uint8_t>(Category::kBleeding);
  }
  const Components comps = ConnectedComponents(mask, config.connectivity);

  struct Accum {
    Box3 box{{INT64_MAX, INT64_MAX, INT64_MAX}, {INT64_MIN, INT64_MIN, INT64_MIN}};
    int64_t voxels = 0;
    double probability_sum = 0.0;
  };
  std::vector<Accum> acc(static_cast<size_t>(comps.count));
  for (int64_t z = 0; z < s.nz; ++z) {
    for (int64_t y = 0; y < s.ny; ++y) {
      for (int64_t x = 0; x < s.nx; ++x) {
        const int64_t flat = s.index(z, y, x);
        const int32_t label = comps.labels.data[flat];
        if (label == 0) continue;
        Accum& a = acc[label - 1];
        a.box.lo = {std::min(a.box.lo[0], z), std::min(a.box.lo[1], y), std::min(a.box.lo[2], x)};
        a.box.hi = {std::max(a.box.hi[0], z + 1), std::max(a.box.hi[1], y + 1), std::max(a.box.hi[2], x + 1)};
        ++a.voxels;
        if (bleeding_probability != nullptr) a.probability_sum += bleeding_probability->data[flat];
      }
    }
  }

  std::vector<SceneObject> out;
  const double voxel_cm3 = map.spacing.voxel_volume_mm3() / 1000.0;
  for (int32_t label = 1; label <= comps.count; ++label) {
    const Accum& a = acc[label - 1];
    if (static_cast<double>(a.voxels) * voxel_cm3 < config.min_bleeding_volume_cm3) continue;
    SceneObject obj;
    obj.id = first_id + static_cast<int>(out.size());
    obj.category = Category::kBleeding;
    obj.box = a.box;
    obj.score = bleeding_probability != nullptr
                    ? std::clamp(a.probability_sum / static_cast<double>(a.voxels), 0.0, 1.0)
                    : 1.0;
    BinaryGrid crop(Shape3{a.box.extent(0), a.box.extent(1), a.box.extent(2)});
    for (int64_t z = a.box.lo[0]; z < a.box.hi[0]; ++z) {
      for (int64_t y = a.box.lo[1]; y < a.box.hi[1]; ++y) {
        for (int64_t x = a.box.lo[2]; x < a.box.hi[2]; ++x) {
          crop.at(z - a.box.lo[0], y - a.box.lo[1], x - a.box.lo[2]) = comps.labels.at(z, y, x) == label;
        }
      }
    }
    obj.mask = std::make_shared<const BinaryGrid>(std::move(crop));
    out.push_back(std::move(obj));
  }
  return out;
}

std::vector<SceneObject> ExtractObjects(const LabelMap& map, const InstancingConfig& config,
                                        const Grid<float>* bleeding_probability) {
  std::vector<SceneObject> objects = ExtractBleedings(map, config, bleeding_probability, 1);
  int next_id = static_cast<int>(objects.size()) + 1;
  for (Category c : {Category::kVentricle, Category::kMidline}) {
    if (auto obj = ExtractSingleton(map, c, config, next_id)) {
      objects.push_back(std::move(*obj));
      ++next_id;
    }
  }
  return objects;
}

namespace {

constexpr std::array<std::array<int, 3>, 6> kFaceOffsets = {
    {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

void Erode(Grid<uint8_t>& labels, uint8_t c) {
  const Shape3& s = labels.shape;
  const Grid<uint8_t> before = labels;
  for (int64_t z = 0; z < s.nz; ++z) {
    for (int64_t y = 0; y < s.ny; ++y) {
      for (int64_t x = 0; x < s.nx; ++x) {
        if (before.at(z, y, x) != c) continue;
        for (const auto& o : kFaceOffsets) {
          const int64_t nz = z + o[0], ny = y + o[1], nx = x + o[2];
          if (s.contains(nz, ny, nx) && before.at(nz, ny, nx) != c) {
            labels.at(z, y, x) = 0;
            break;
          }
        }
      }
    }
  }
}

void Dilate(Grid<uint8_t>& labels, uint8_t c) {
  const Shape3& s = labels.shape;
  const Grid<uint8_t> before = labels;
  for (int64_t z = 0; z < s.nz; ++z) {
    for (int64_t y = 0; y < s.ny; ++y) {
      for (int64_t x = 0; x < s.nx; ++x) {
        if (before.at(z, y, x) != 0) continue;
        for (const auto& o : kFaceOffsets) {
          const int64_t nz = z + o[0], ny = y + o[1], nx = x + o[2];
          if (s.contains(nz, ny, nx) && before.at(nz, ny, nx) == c) {
            labels.at(z, y, x) = c;
            break;
          }
        }
      }
    }
  }
}

}  // namespace

LabelMap DegradeLabelMap(const LabelMap& map, uint64_t seed, const DegradeConfig& config) {
  config.check();
  Rng rng(seed);
  LabelMap out = map;
  Grid<uint8_t>& labels = out.labels;
  const Shape3& s = labels.shape;

  for (uint8_t c = 1; c <= 3; ++c) {
    const double u = rng.uniform();
    for (int r = 0; r < config.morph_radius; ++r) {
      if (u < config.morph_probability) {
        Erode(labels, c);
      } else if (u < 2.0 * config.morph_probability) {
        Dilate(labels, c);
      }
    }
  }

  if (config.flip_probability > 0.0) {
    const Grid<uint8_t> before = labels;
    for (int64_t z = 0; z < s.nz; ++z) {
      for (int64_t y = 0; y < s.ny; ++y) {
        for (int64_t x = 0; x < s.nx; ++x) {
          const uint8_t self = before.at(z, y, x);
          std::array<uint8_t, 6> others;
          int n_others = 0;
          for (const auto& o : kFaceOffsets) {
            const int64_t nz = z + o[0], ny = y + o[1], nx = x + o[2];
            if (s.contains(nz, ny, nx) && before.at(nz, ny, nx) != self) others[n_others++] = before.at(nz, ny, nx);
          }
          if (n_others == 0) continue;
          if (rng.bernoulli(config.flip_probability)) labels.at(z, y, x) = others[rng.uniform_int(0, n_others - 1)];
        }
      }
    }
  }

  if (config.drop_probability > 0.0 && config.drop_max_voxels > 0) {
    for (uint8_t c = 1; c <= 3; ++c) {
      BinaryGrid mask(s);
      for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = labels.data[i] == c;
      const Components comps = ConnectedComponents(mask, Connectivity::k26);
      std::vector<int64_t> sizes(static_cast<size_t>(comps.count) + 1, 0);
      for (int32_t l : comps.labels.data) ++sizes[l];
      std::vector<bool> drop(sizes.size(), false);
      for (int32_t l = 1; l <= comps.count; ++l) {
        // Draw for every component so the stream does not depend on sizes.
        const bool hit = rng.bernoulli(config.drop_probability);
        drop[l] = hit && sizes[l] < config.drop_max_voxels;
      }
      for (size_t i = 0; i < labels.data.size(); ++i) {
        if (drop[comps.labels.data[i]]) labels.data[i] = 0;
      }
    }
  }
  return out;
}

}  // namespace vsg
