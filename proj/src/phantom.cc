#include "vsg/phantom.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <set>
#include <string>

#include "vsg/error.h"
#include "vsg/rng.h"

namespace vsg {

void PhantomConfig::check() const {
  auto fail = [](const std::string& what) { return Error(ErrorKind::kInvalidConfig, what); };
  if (shape.nz < 16 || shape.ny < 16 || shape.nx < 16) throw fail("phantom shape must be at least 16 per axis");
  if (!(spacing.sz > 0 && spacing.sy > 0 && spacing.sx > 0)) throw fail("spacing must be positive");
  if (min_bleedings < 1 || max_bleedings < min_bleedings) throw fail("bleeding count range is empty");
  if (!(bleeding_count_decay > 0.0)) throw fail("bleeding_count_decay must be > 0");
  if (!(min_volume_cm3 > 0.0 && max_volume_cm3 >= min_volume_cm3)) throw fail("bleeding volume range is empty");
  if (!(related_min_volume_cm3 > 0.0 && related_max_volume_cm3 >= related_min_volume_cm3)) {
    throw fail("related bleeding volume range is empty");
  }
  for (double p : {p_blood_flow, p_asymmetry, p_midline_shift, p_fragmented_ventricle}) {
    if (!(p >= 0.0 && p <= 1.0)) throw fail("probabilities must lie in [0,1]");
  }
  if (p_blood_flow + p_asymmetry > 1.0) throw fail("p_blood_flow + p_asymmetry must be <= 1");
  if (max_attempts < 1) throw fail("max_attempts must be >= 1");
  noise.check();
}

nlohmann::json PhantomConfigToJson(const PhantomConfig& c) {
  return {{"shape", {c.shape.nz, c.shape.ny, c.shape.nx}},
          {"spacing_mm", {c.spacing.sz, c.spacing.sy, c.spacing.sx}},
          {"min_bleedings", c.min_bleedings},
          {"max_bleedings", c.max_bleedings},
          {"bleeding_count_decay", c.bleeding_count_decay},
          {"min_volume_cm3", c.min_volume_cm3},
          {"max_volume_cm3", c.max_volume_cm3},
          {"related_min_volume_cm3", c.related_min_volume_cm3},
          {"related_max_volume_cm3", c.related_max_volume_cm3},
          {"p_blood_flow", c.p_blood_flow},
          {"p_asymmetry", c.p_asymmetry},
          {"p_midline_shift", c.p_midline_shift},
          {"p_fragmented_ventricle", c.p_fragmented_ventricle},
          {"max_attempts", c.max_attempts},
          {"noise",
           {{"morph_probability", c.noise.morph_probability},
            {"morph_radius", c.noise.morph_radius},
            {"drop_probability", c.noise.drop_probability},
            {"drop_max_voxels", c.noise.drop_max_voxels},
            {"flip_probability", c.noise.flip_probability}}}};
}

PhantomConfig PhantomConfigFromJson(const nlohmann::json& doc) {
  try {
    PhantomConfig c;
    const auto shape = doc.at("shape").get<std::array<int64_t, 3>>();
    const auto spacing = doc.at("spacing_mm").get<std::array<double, 3>>();
    c.shape = {shape[0], shape[1], shape[2]};
    c.spacing = {spacing[0], spacing[1], spacing[2]};
    c.min_bleedings = doc.at("min_bleedings").get<int>();
    c.max_bleedings = doc.at("max_bleedings").get<int>();
    c.bleeding_count_decay = doc.at("bleeding_count_decay").get<double>();
    c.min_volume_cm3 = doc.at("min_volume_cm3").get<double>();
    c.max_volume_cm3 = doc.at("max_volume_cm3").get<double>();
    c.related_min_volume_cm3 = doc.at("related_min_volume_cm3").get<double>();
    c.related_max_volume_cm3 = doc.at("related_max_volume_cm3").get<double>();
    c.p_blood_flow = doc.at("p_blood_flow").get<double>();
    c.p_asymmetry = doc.at("p_asymmetry").get<double>();
    c.p_midline_shift = doc.at("p_midline_shift").get<double>();
    c.p_fragmented_ventricle = doc.at("p_fragmented_ventricle").get<double>();
    c.max_attempts = doc.at("max_attempts").get<int>();
    const auto& n = doc.at("noise");
    c.noise.morph_probability = n.at("morph_probability").get<double>();
    c.noise.morph_radius = n.at("morph_radius").get<int>();
    c.noise.drop_probability = n.at("drop_probability").get<double>();
    c.noise.drop_max_voxels = n.at("drop_max_voxels").get<int64_t>();
    c.noise.flip_probability = n.at("flip_probability").get<double>();
    c.check();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("phantom config: ") + e.what());
  }
}

int64_t BoxGap(const Box3& a, const Box3& b) {
  int64_t gap = std::numeric_limits<int64_t>::min();
  for (int k = 0; k < 3; ++k) gap = std::max(gap, std::max(a.lo[k] - b.hi[k], b.lo[k] - a.hi[k]));
  return gap;
}

RuleOutcome ClassifyByGeometry(std::span<const SceneObject> objects) {
  RuleOutcome out;
  for (const auto& b : objects) {
    if (b.category != Category::kBleeding) continue;
    for (const auto& a : objects) {
      const int64_t gap = BoxGap(b.box, a.box);
      Predicate p = Predicate::kNone;
      bool ambiguous = false;
      if (a.category == Category::kVentricle) {
        if (gap < 0) {
          p = Predicate::kBloodFlow;
        } else if (gap >= kAsymmetryGapMin && gap <= kAsymmetryGapMax) {
          p = Predicate::kAsymmetry;
        } else {
          ambiguous = gap < kVentricleClearGap;
        }
      } else if (a.category == Category::kMidline) {
        if (gap >= 0 && gap <= kShiftGapMax) {
          p = Predicate::kMidlineShift;
        } else {
          ambiguous = gap < kMidlineClearGap;
        }
      } else {
        continue;
      }
      if (ambiguous) out.ambiguous.emplace_back(b.id, a.id);
      if (p != Predicate::kNone) out.relations.push_back({b.id, a.id, p, 1.0});
    }
  }
  return out;
}

namespace {

constexpr int kMaxFlow = 3;
constexpr int kMaxShift = 2;
constexpr int kProposalsPerBleeding = 400;
constexpr int kProposalsPerShrink = 80;
constexpr double kDefaultGridMm3 = 64.0 * 96.0 * 96.0 * 10.0;

enum class VentricleIntent { kNone, kFlow, kAsymmetry };

struct Intent {
  VentricleIntent ventricle = VentricleIntent::kNone;
  bool shift = false;
  bool related() const { return shift || ventricle != VentricleIntent::kNone; }
};

struct Ellipsoid {
  std::array<double, 3> c{};
  std::array<double, 3> r{};

  bool inside(int64_t z, int64_t y, int64_t x) const {
    const double dz = (static_cast<double>(z) - c[0]) / r[0];
    const double dy = (static_cast<double>(y) - c[1]) / r[1];
    const double dx = (static_cast<double>(x) - c[2]) / r[2];
    return dz * dz + dy * dy + dx * dx <= 1.0;
  }
};

struct Raster {
  Box3 box;
  std::vector<int64_t> voxels;
};

// Voxels of `e` (centers at integer coordinates). Empty when any voxel would
// leave the grid interior.
std::optional<Raster> Rasterize(const Ellipsoid& e, const Shape3& s) {
  std::array<int64_t, 3> lo{}, hi{};
  for (int k = 0; k < 3; ++k) {
    lo[k] = static_cast<int64_t>(std::ceil(e.c[k] - e.r[k]));
    hi[k] = static_cast<int64_t>(std::floor(e.c[k] + e.r[k])) + 1;
    if (lo[k] < 1 || hi[k] > s[k] - 1) return std::nullopt;
  }
  Raster out;
  out.box.lo = {s[0], s[1], s[2]};
  out.box.hi = {0, 0, 0};
  for (int64_t z = lo[0]; z < hi[0]; ++z) {
    for (int64_t y = lo[1]; y < hi[1]; ++y) {
      for (int64_t x = lo[2]; x < hi[2]; ++x) {
        if (!e.inside(z, y, x)) continue;
        out.voxels.push_back(s.index(z, y, x));
        const std::array<int64_t, 3> v{z, y, x};
        for (int k = 0; k < 3; ++k) {
          out.box.lo[k] = std::min(out.box.lo[k], v[k]);
          out.box.hi[k] = std::max(out.box.hi[k], v[k] + 1);
        }
      }
    }
  }
  if (out.voxels.empty()) return std::nullopt;
  return out;
}

// Anatomy placement, expressed in fractions of the grid.
struct Anatomy {
  Ellipsoid head;
  int64_t midline_lo = 0;
  int64_t midline_hi = 0;
  // Index 0 is the lower-x lobe.
  std::array<Ellipsoid, 2> lobes;
  std::array<Ellipsoid, 2> horns;
};

Anatomy BaseAnatomy(const Shape3& s) {
  const double fz = static_cast<double>(s.nz) / 64.0;
  const double fy = static_cast<double>(s.ny) / 96.0;
  const double fx = static_cast<double>(s.nx) / 96.0;
  const double nz = static_cast<double>(s.nz), ny = static_cast<double>(s.ny), nx = static_cast<double>(s.nx);
  Anatomy a;
  a.head = {{nz / 2.0, ny / 2.0, nx / 2.0}, {0.44 * nz, 0.44 * ny, 0.42 * nx}};
  const int64_t thickness = std::max<int64_t>(2, static_cast<int64_t>(std::llround(4.0 * fx)));
  a.midline_lo = s.nx / 2 - thickness / 2;
  a.midline_hi = a.midline_lo + thickness;
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? -1.0 : 1.0;
    Ellipsoid lobe{{0.4 * nz, 0.48 * ny, nx / 2.0 + sign * 0.125 * nx},
                   {std::max(1.5, 7.0 * fz), std::max(1.5, 13.0 * fy), std::max(1.5, 4.5 * fx)}};
    a.lobes[side] = lobe;
    const double horn_rz = std::max(1.2, 2.5 * fz);
    a.horns[side] = {{lobe.c[0] + lobe.r[0] + std::max(2.5, 3.5 * fz) + horn_rz, lobe.c[1] + 4.0 * fy, lobe.c[2]},
                     {horn_rz, std::max(1.2, 4.0 * fy), std::max(1.2, 2.5 * fx)}};
  }
  return a;
}

void Paint(const Ellipsoid& e, const Shape3& s, BinaryGrid& grid) {
  if (auto r = Rasterize(e, s)) {
    for (int64_t v : r->voxels) grid.data[static_cast<size_t>(v)] = 1;
  }
}

std::optional<Box3> BoxOf(const BinaryGrid& grid) { return BboxOfLabel(grid, 1); }

struct PlacedBleeding {
  Intent intent;
  Ellipsoid shape;
  Raster raster;
};

class Generator {
 public:
  Generator(const PhantomConfig& config, uint64_t seed) : c_(config), rng_(seed), base_(BaseAnatomy(config.shape)) {
    volume_scale_ = static_cast<double>(c_.shape.size()) * c_.spacing.voxel_volume_mm3() / kDefaultGridMm3;
    voxel_cm3_ = c_.spacing.voxel_volume_mm3() / 1000.0;
    min_voxels_ = std::max<int64_t>(8, 2 * static_cast<int64_t>(std::ceil(0.05 / voxel_cm3_)));
  }

  std::optional<Phantom> attempt();

 private:
  int SampleCount();
  std::vector<Intent> SampleIntents(int n);
  double SampleVolumeCm3(const Intent& intent);
  std::array<double, 3> Radii(double volume_cm3);
  std::array<double, 3> HeadPoint(double scale);
  std::optional<PlacedBleeding> Place(const Intent& intent, const Box3& midline_box, bool midline_final);
  Ellipsoid Propose(const Intent& intent, const std::array<double, 3>& radii);
  bool Admissible(const Intent& intent, const Raster& r, const Box3& midline_box, bool midline_final) const;

  const PhantomConfig& c_;
  Rng rng_;
  Anatomy base_;
  double volume_scale_ = 1.0;
  double voxel_cm3_ = 0.01;
  int64_t min_voxels_ = 8;

  // Per attempt.
  int side_ = 0;  // 0: lower x, 1: higher x
  BinaryGrid ventricle_;
  Box3 ventricle_box_;
  std::array<Ellipsoid, 2> lobes_;
  std::vector<PlacedBleeding> placed_;
};

int Generator::SampleCount() {
  std::vector<double> w;
  double total = 0.0;
  for (int n = c_.min_bleedings; n <= c_.max_bleedings; ++n) {
    w.push_back(std::pow(c_.bleeding_count_decay, n - c_.min_bleedings));
    total += w.back();
  }
  double u = rng_.uniform() * total;
  for (size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return c_.min_bleedings + static_cast<int>(i);
    u -= w[i];
  }
  return c_.max_bleedings;
}

std::vector<Intent> Generator::SampleIntents(int n) {
  std::vector<Intent> intents(static_cast<size_t>(n));
  int flows = 0, shifts = 0, asymmetries = 0;
  for (auto& in : intents) {
    const double u = rng_.uniform();
    if (u < c_.p_blood_flow) {
      if (flows < kMaxFlow) {
        in.ventricle = VentricleIntent::kFlow;
        ++flows;
      }
    } else if (u < c_.p_blood_flow + c_.p_asymmetry && asymmetries == 0) {
      in.ventricle = VentricleIntent::kAsymmetry;
      ++asymmetries;
    }
    if (rng_.bernoulli(c_.p_midline_shift) && shifts < kMaxShift) {
      in.shift = true;
      ++shifts;
    }
  }
  return intents;
}

double Generator::SampleVolumeCm3(const Intent& intent) {
  double lo = c_.min_volume_cm3, hi = c_.max_volume_cm3;
  if (intent.related()) {
    lo = std::max(lo, c_.related_min_volume_cm3);
    hi = std::min(hi, c_.related_max_volume_cm3);
    if (hi < lo) hi = lo;
  }
  return volume_scale_ * std::exp(rng_.uniform(std::log(lo), std::log(hi)));
}

std::array<double, 3> Generator::Radii(double volume_cm3) {
  const double voxels = volume_cm3 / voxel_cm3_;
  const double r = std::cbrt(3.0 * voxels / (4.0 * M_PI));
  std::array<double, 3> f{};
  double log_sum = 0.0;
  for (auto& v : f) {
    v = rng_.uniform(-0.3, 0.3);
    log_sum += v;
  }
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) out[k] = std::max(1.0, r * std::exp(f[k] - log_sum / 3.0));
  return out;
}

// Uniform point in the head ellipsoid shrunk by `scale`.
std::array<double, 3> Generator::HeadPoint(double scale) {
  for (;;) {
    std::array<double, 3> u{rng_.uniform(-1, 1), rng_.uniform(-1, 1), rng_.uniform(-1, 1)};
    if (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] > 1.0) continue;
    std::array<double, 3> p{};
    for (int k = 0; k < 3; ++k) p[k] = base_.head.c[k] + scale * base_.head.r[k] * u[k];
    return p;
  }
}

// Center coordinate putting the rasterized edge of a ball of radius r at a
// given half-open bound.
double CenterBelow(int64_t hi, double r, Rng& rng) { return static_cast<double>(hi) - 1.0 - r + 0.999 * rng.uniform(); }
double CenterAbove(int64_t lo, double r, Rng& rng) { return static_cast<double>(lo) + r - 0.999 * rng.uniform(); }

Ellipsoid Generator::Propose(const Intent& intent, const std::array<double, 3>& radii) {
  Ellipsoid e;
  e.r = radii;
  e.c = HeadPoint(0.8);
  std::array<bool, 3> fixed{};
  if (intent.shift) {
    const int64_t gap = rng_.uniform_int(1, kShiftGapMax);
    e.c[2] = side_ == 0 ? CenterBelow(base_.midline_lo - gap, e.r[2], rng_)
                        : CenterAbove(base_.midline_hi + gap, e.r[2], rng_);
    fixed[2] = true;
  }
  if (intent.ventricle == VentricleIntent::kFlow) {
    const Ellipsoid& lobe = lobes_[intent.shift ? side_ : static_cast<int>(rng_.uniform_int(0, 1))];
    for (int k = 0; k < 3; ++k) {
      if (!fixed[k]) e.c[k] = lobe.c[k] + rng_.uniform(-0.8, 0.8) * lobe.r[k];
    }
  } else if (intent.ventricle == VentricleIntent::kAsymmetry) {
    const Ellipsoid& lobe = lobes_[side_];
    const int64_t gap = rng_.uniform_int(kAsymmetryGapMin, kAsymmetryGapMax);
    // 0: lateral in x, 1: superior in z, 2: anterior in y, 3: posterior in y.
    const int approach = static_cast<int>(rng_.uniform_int(fixed[2] ? 1 : 0, 3));
    for (int k = 0; k < 3; ++k) {
      if (!fixed[k]) e.c[k] = lobe.c[k] + rng_.uniform(-0.6, 0.6) * lobe.r[k];
    }
    const Box3& v = ventricle_box_;
    switch (approach) {
      case 0:
        e.c[2] = side_ == 0 ? CenterBelow(v.lo[2] - gap, e.r[2], rng_) : CenterAbove(v.hi[2] + gap, e.r[2], rng_);
        break;
      case 1:
        e.c[0] = CenterBelow(v.lo[0] - gap, e.r[0], rng_);
        break;
      case 2:
        e.c[1] = CenterBelow(v.lo[1] - gap, e.r[1], rng_);
        break;
      default:
        e.c[1] = CenterAbove(v.hi[1] + gap, e.r[1], rng_);
        break;
    }
  }
  return e;
}

bool Generator::Admissible(const Intent& intent, const Raster& r, const Box3& midline_box, bool midline_final) const {
  if (static_cast<int64_t>(r.voxels.size()) < min_voxels_) return false;
  // Center inside the head.
  double q = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = (r.box.center(k) - base_.head.c[k]) / base_.head.r[k];
    q += d * d;
  }
  if (q > 0.9) return false;

  const int64_t vgap = BoxGap(r.box, ventricle_box_);
  switch (intent.ventricle) {
    case VentricleIntent::kNone:
      if (vgap < kVentricleClearGap) return false;
      break;
    case VentricleIntent::kAsymmetry:
      if (vgap < kAsymmetryGapMin || vgap > kAsymmetryGapMax) return false;
      break;
    case VentricleIntent::kFlow: {
      if (vgap >= 0) return false;
      bool touches = false;
      for (int64_t v : r.voxels) {
        if (ventricle_.data[static_cast<size_t>(v)] != 0) {
          touches = true;
          break;
        }
      }
      if (!touches) return false;
      break;
    }
  }

  const int64_t mgap = BoxGap(r.box, midline_box);
  if (intent.shift) {
    if (mgap < 1 || mgap > kShiftGapMax) return false;
  } else if (midline_final) {
    if (mgap < kMidlineClearGap) return false;
  } else {
    return false;
  }

  for (const auto& p : placed_) {
    if (BoxGap(r.box, p.raster.box) < kBleedingSeparation) return false;
  }
  return true;
}

std::optional<PlacedBleeding> Generator::Place(const Intent& intent, const Box3& midline_box, bool midline_final) {
  double volume = SampleVolumeCm3(intent);
  const double floor_cm3 =
      volume_scale_ * (intent.related() ? std::max(c_.min_volume_cm3, c_.related_min_volume_cm3) : c_.min_volume_cm3);
  std::array<double, 3> radii = Radii(volume);
  for (int i = 0; i < kProposalsPerBleeding; ++i) {
    if (i > 0 && i % kProposalsPerShrink == 0) {
      volume = std::max(floor_cm3, 0.75 * volume);
      radii = Radii(volume);
    }
    const Ellipsoid e = Propose(intent, radii);
    auto r = Rasterize(e, c_.shape);
    if (!r || !Admissible(intent, *r, midline_box, midline_final)) continue;
    return PlacedBleeding{intent, e, std::move(*r)};
  }
  return std::nullopt;
}

std::optional<Phantom> Generator::attempt() {
  const Shape3& s = c_.shape;
  const int n = SampleCount();
  const std::vector<Intent> intents = SampleIntents(n);
  side_ = static_cast<int>(rng_.uniform_int(0, 1));
  const bool asymmetric = std::any_of(intents.begin(), intents.end(),
                                      [](const Intent& i) { return i.ventricle == VentricleIntent::kAsymmetry; });

  // Ventricle system.
  lobes_ = base_.lobes;
  if (asymmetric) {
    for (auto& r : lobes_[side_].r) r *= 0.7;
  }
  ventricle_ = BinaryGrid(s);
  for (int side = 0; side < 2; ++side) {
    Paint(lobes_[side], s, ventricle_);
    if (rng_.bernoulli(c_.p_fragmented_ventricle)) Paint(base_.horns[side], s, ventricle_);
  }
  const auto vbox = BoxOf(ventricle_);
  if (!vbox) return std::nullopt;
  ventricle_box_ = *vbox;

  // Shift bleedings first: they decide how the midline bends.
  placed_.clear();
  Box3 straight_midline;
  straight_midline.lo = {static_cast<int64_t>(std::ceil(base_.head.c[0] - base_.head.r[0])),
                         static_cast<int64_t>(std::ceil(base_.head.c[1] - base_.head.r[1])), base_.midline_lo};
  straight_midline.hi = {static_cast<int64_t>(std::floor(base_.head.c[0] + base_.head.r[0])) + 1,
                         static_cast<int64_t>(std::floor(base_.head.c[1] + base_.head.r[1])) + 1, base_.midline_hi};
  for (const auto& in : intents) {
    if (!in.shift) continue;
    auto p = Place(in, straight_midline, false);
    if (!p) return std::nullopt;
    placed_.push_back(std::move(*p));
  }

  // Midline sheet, bent away from the shift bleedings.
  BinaryGrid midline(s);
  std::vector<std::pair<Ellipsoid, int64_t>> bumps;
  for (const auto& p : placed_) bumps.emplace_back(p.shape, rng_.uniform_int(2, 4));
  const int64_t direction = side_ == 0 ? 1 : -1;
  for (int64_t z = 0; z < s.nz; ++z) {
    for (int64_t y = 0; y < s.ny; ++y) {
      const double hz = (static_cast<double>(z) - base_.head.c[0]) / base_.head.r[0];
      const double hy = (static_cast<double>(y) - base_.head.c[1]) / base_.head.r[1];
      if (hz * hz + hy * hy > 1.0) continue;
      int64_t offset = 0;
      for (const auto& [e, amplitude] : bumps) {
        const double dz = (static_cast<double>(z) - e.c[0]) / (e.r[0] + 3.0);
        const double dy = (static_cast<double>(y) - e.c[1]) / (e.r[1] + 3.0);
        const double q = dz * dz + dy * dy;
        if (q < 1.0) offset = std::max<int64_t>(offset, std::llround(static_cast<double>(amplitude) * (1.0 - q)));
      }
      for (int64_t x = base_.midline_lo + direction * offset; x < base_.midline_hi + direction * offset; ++x) {
        if (x >= 0 && x < s.nx) midline.at(z, y, x) = 1;
      }
    }
  }
  const auto mbox = BoxOf(midline);
  if (!mbox) return std::nullopt;

  for (const auto& in : intents) {
    if (in.shift) continue;
    auto p = Place(in, *mbox, true);
    if (!p) return std::nullopt;
    placed_.push_back(std::move(*p));
  }

  // Paint: ventricle, midline, then bleedings on top.
  Phantom out;
  out.labels = LabelMap{Grid<uint8_t>(s), c_.spacing};
  out.instances = Grid<uint16_t>(s);
  for (size_t i = 0; i < ventricle_.data.size(); ++i) {
    if (ventricle_.data[i]) {
      out.labels.labels.data[i] = static_cast<uint8_t>(Category::kVentricle);
      out.instances.data[i] = 1;
    }
    if (midline.data[i]) {
      out.labels.labels.data[i] = static_cast<uint8_t>(Category::kMidline);
      out.instances.data[i] = 2;
    }
  }
  for (size_t k = 0; k < placed_.size(); ++k) {
    for (int64_t v : placed_[k].raster.voxels) {
      out.labels.labels.data[static_cast<size_t>(v)] = static_cast<uint8_t>(Category::kBleeding);
      out.instances.data[static_cast<size_t>(v)] = static_cast<uint16_t>(3 + k);
    }
  }

  // Objects come from instancing the clean map; every planted bleeding must
  // reappear with its own box.
  std::vector<SceneObject> objects = ExtractObjects(out.labels);
  std::vector<int> planted_to_id(placed_.size(), 0);
  int bleedings = 0, ventricle_id = 0, midline_id = 0;
  for (const auto& o : objects) {
    if (o.category == Category::kVentricle) ventricle_id = o.id;
    if (o.category == Category::kMidline) midline_id = o.id;
    if (o.category != Category::kBleeding) continue;
    ++bleedings;
    for (size_t k = 0; k < placed_.size(); ++k) {
      if (placed_[k].raster.box == o.box) planted_to_id[k] = o.id;
    }
  }
  if (bleedings != static_cast<int>(placed_.size()) || ventricle_id == 0 || midline_id == 0) return std::nullopt;
  if (std::find(planted_to_id.begin(), planted_to_id.end(), 0) != planted_to_id.end()) return std::nullopt;

  std::vector<Relation> relations;
  for (size_t k = 0; k < placed_.size(); ++k) {
    const Intent& in = placed_[k].intent;
    if (in.ventricle == VentricleIntent::kFlow) {
      relations.push_back({planted_to_id[k], ventricle_id, Predicate::kBloodFlow, 1.0});
    } else if (in.ventricle == VentricleIntent::kAsymmetry) {
      relations.push_back({planted_to_id[k], ventricle_id, Predicate::kAsymmetry, 1.0});
    }
    if (in.shift) relations.push_back({planted_to_id[k], midline_id, Predicate::kMidlineShift, 1.0});
  }
  auto key = [](const Relation& r) { return std::make_tuple(r.subject, r.object, static_cast<int>(r.predicate)); };
  std::sort(relations.begin(), relations.end(), [&](const Relation& a, const Relation& b) { return key(a) < key(b); });

  // The final geometry must tell the same story as the intents.
  RuleOutcome rules = ClassifyByGeometry(objects);
  if (!rules.ambiguous.empty()) return std::nullopt;
  std::sort(rules.relations.begin(), rules.relations.end(),
            [&](const Relation& a, const Relation& b) { return key(a) < key(b); });
  if (rules.relations != relations) return std::nullopt;

  out.graph.shape = s;
  out.graph.spacing = c_.spacing;
  out.graph.objects = std::move(objects);
  out.graph.relations = std::move(relations);
  if (!Validate(out.graph).empty()) return std::nullopt;
  out.ventricle_anatomy = std::move(ventricle_);
  return out;
}

}  // namespace

Phantom GeneratePhantom(const PhantomConfig& config, uint64_t seed) {
  config.check();
  Generator generator(config, seed);
  for (int a = 1; a <= config.max_attempts; ++a) {
    if (auto p = generator.attempt()) {
      p->attempts = a;
      return std::move(*p);
    }
  }
  throw Error(ErrorKind::kInfeasibleConfig,
              "no consistent phantom layout after " + std::to_string(config.max_attempts) + " attempts");
}

}  // namespace vsg
