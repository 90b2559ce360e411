#include "leafseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "leafseg/error.hpp"
#include "leafseg/png_io.hpp"
#include "leafseg/rng.hpp"

namespace leafseg {

namespace {

// Geometry is evaluated in 1/16 pixel units with rotations scaled by 4096 so
// rasterisation is exact integer arithmetic.
constexpr std::int64_t kSub = 16;
constexpr std::int64_t kRot = 4096;
using Wide = __int128;

constexpr double kGoldenAngle = 2.399963229728653;

// Range-reduced Taylor series: only IEEE basic operations, so the result is
// identical on every conforming platform (unlike libm's sin/cos).
void sin_cos(double angle, double& s, double& c) {
  constexpr double two_pi = 6.283185307179586;
  const double x = angle - two_pi * std::floor(angle / two_pi + 0.5);
  const double x2 = x * x;
  double term_s = x, term_c = 1.0;
  s = x;
  c = 1.0;
  for (int k = 1; k <= 16; ++k) {
    term_s *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
    term_c *= -x2 / ((2.0 * k - 1.0) * (2.0 * k));
    s += term_s;
    c += term_c;
  }
}

std::int64_t to_fixed(double v, std::int64_t scale) { return static_cast<std::int64_t>(std::floor(v * scale + 0.5)); }

struct Color {
  int r = 0, g = 0, b = 0;
};

std::uint8_t clamp8(long v) { return static_cast<std::uint8_t>(std::clamp(v, 0L, 255L)); }

struct Leaf {
  std::int64_t cx = 0, cy = 0;  // blade centre (sub-pixel units)
  std::int64_t a = 0, b = 0;    // semi-axes (sub-pixel units)
  std::int64_t cos_q = 0, sin_q = 0;
  std::int64_t petiole = 0;     // petiole length from the plant centre (sub-pixel units)
  Color color;
  bool highlight = false;
  std::int64_t hu = 0, hv = 0, hr = 0;  // highlight centre/radius in rotated units

  // Rotated coordinates of pixel (x, y) relative to (ox, oy), in sub-pixel * rotation units.
  void rotate(int x, int y, std::int64_t ox, std::int64_t oy, std::int64_t& u, std::int64_t& v) const {
    const std::int64_t dx = x * kSub - ox;
    const std::int64_t dy = y * kSub - oy;
    u = dx * cos_q + dy * sin_q;
    v = -dx * sin_q + dy * cos_q;
  }

  static bool in_ellipse(std::int64_t u, std::int64_t v, std::int64_t a, std::int64_t b) {
    const Wide lhs = Wide(u) * u * b * b + Wide(v) * v * a * a;
    const Wide rhs = Wide(a) * a * b * b * kRot * kRot;
    return lhs <= rhs;
  }
};

struct SoilSpot {  // pebble or moss patch
  std::int64_t cx, cy, r;
  Color color;
};

struct PlantGeometry {
  std::int64_t center_x = 0, center_y = 0;
  std::vector<Leaf> leaves;
  std::vector<SoilSpot> spots;
};

PlantGeometry build_geometry(const PlantSpec& spec, int canvas) {
  Rng rng(spec.seed);
  PlantGeometry g;
  g.center_x = canvas * kSub / 2;
  g.center_y = canvas * kSub / 2;
  const double start = rng.uniform(0.0, 6.283185307179586);
  const int n = spec.leaf_count;
  for (int k = 0; k < n; ++k) {
    const double age = n > 1 ? static_cast<double>(k) / (n - 1) : 0.0;  // 0 oldest, 1 newest
    const double shrink = 1.0 - 0.35 * age;
    const double length = rng.uniform(spec.leaf_length_min, spec.leaf_length_max) * shrink;
    const double width = rng.uniform(spec.leaf_width_min, spec.leaf_width_max) * shrink * (1.0 + 0.4 * spec.overlap);
    const double angle = start + k * kGoldenAngle + spec.angular_jitter * rng.uniform(-1.0, 1.0);
    const double petiole = (1.0 - spec.overlap) * 0.2 * length + 2.0;

    double s = 0, c = 0;
    sin_cos(angle, s, c);
    Leaf leaf;
    leaf.cos_q = to_fixed(c, kRot);
    leaf.sin_q = to_fixed(s, kRot);
    // Overlap slides the blade inward over its petiole.
    const double dist = petiole + length / 2.0 * (1.0 - spec.overlap);
    leaf.cx = g.center_x + to_fixed(dist * c, kSub);
    leaf.cy = g.center_y + to_fixed(dist * s, kSub);
    leaf.a = to_fixed(length / 2.0, kSub);
    leaf.b = to_fixed(width / 2.0, kSub);
    leaf.petiole = to_fixed(petiole + 2.0, kSub);
    leaf.color = {rng.range(45, 95), rng.range(120, 185), rng.range(25, 60)};
    leaf.highlight = rng.uniform() < 0.6;
    leaf.hu = to_fixed(rng.uniform(-0.5, 0.5) * length / 2.0, kSub * kRot);
    leaf.hv = to_fixed(rng.uniform(-0.4, 0.4) * width / 2.0, kSub * kRot);
    leaf.hr = to_fixed(rng.uniform(1.5, 2.8), kSub * kRot);
    g.leaves.push_back(leaf);
  }
  const int pebbles = rng.range(4, 10);
  for (int i = 0; i < pebbles; ++i) {
    SoilSpot p;
    p.cx = to_fixed(rng.uniform(2.0, canvas - 3.0), kSub);
    p.cy = to_fixed(rng.uniform(2.0, canvas - 3.0), kSub);
    p.r = to_fixed(rng.uniform(1.5, 3.5), kSub);
    const int shade = rng.range(125, 160);
    p.color = {shade, shade - 20, shade - 45};
    g.spots.push_back(p);
  }
  // Moss and algae: green clutter on the soil that is not plant.
  const int moss = rng.range(3, 8);
  for (int i = 0; i < moss; ++i) {
    SoilSpot p;
    p.cx = to_fixed(rng.uniform(2.0, canvas - 3.0), kSub);
    p.cy = to_fixed(rng.uniform(2.0, canvas - 3.0), kSub);
    p.r = to_fixed(rng.uniform(2.0, 5.0), kSub);
    p.color = {rng.range(45, 80), rng.range(85, 130), rng.range(25, 45)};
    g.spots.push_back(p);
  }
  return g;
}

// brightness in permille; noise_seed picks the sensor-noise realisation.
SyntheticPlant render(const PlantSpec& spec, int canvas, std::uint64_t noise_seed, int brightness) {
  const PlantGeometry geo = build_geometry(spec, canvas);
  Rng noise(noise_seed);
  const int amp = static_cast<int>(std::lround(spec.texture_amplitude));
  SyntheticPlant out{RgbImage(canvas, canvas), LabelImage::Zero(canvas, canvas)};

  // Working buffer in int so shading can stack before clamping.
  Eigen::Array<int, Eigen::Dynamic, 3, Eigen::RowMajor> px(canvas * canvas, 3);
  for (int y = 0; y < canvas; ++y) {
    for (int x = 0; x < canvas; ++x) {
      const int n = amp > 0 ? noise.range(-amp, amp) : 0;
      const int i = y * canvas + x;
      px(i, 0) = 80 + n;
      px(i, 1) = 60 + n;
      px(i, 2) = 40 + n;
    }
  }
  for (const SoilSpot& p : geo.spots) {
    for (int y = 0; y < canvas; ++y) {
      for (int x = 0; x < canvas; ++x) {
        const std::int64_t dx = x * kSub - p.cx;
        const std::int64_t dy = y * kSub - p.cy;
        if (dx * dx + dy * dy > p.r * p.r) continue;
        const int i = y * canvas + x;
        px(i, 0) = p.color.r;
        px(i, 1) = p.color.g;
        px(i, 2) = p.color.b;
      }
    }
  }

  constexpr std::int64_t shadow_grow = 2 * kSub + kSub / 2;
  constexpr std::int64_t shadow_shift = kSub + kSub / 2;
  for (std::size_t k = 0; k < geo.leaves.size(); ++k) {
    const Leaf& leaf = geo.leaves[k];
    const std::int32_t label = static_cast<std::int32_t>(k + 1);
    for (int y = 0; y < canvas; ++y) {
      for (int x = 0; x < canvas; ++x) {
        std::int64_t u = 0, v = 0;
        leaf.rotate(x, y, leaf.cx, leaf.cy, u, v);
        const bool blade = Leaf::in_ellipse(u, v, leaf.a, leaf.b);
        std::int64_t pu = 0, pv = 0;
        leaf.rotate(x, y, geo.center_x, geo.center_y, pu, pv);
        const bool stem = !blade && pu >= 0 && pu <= leaf.petiole * kRot && std::abs(pv) <= (3 * kSub / 2) * kRot;
        const int i = y * canvas + x;
        if (!blade && !stem) {
          std::int64_t su = 0, sv = 0;
          leaf.rotate(x, y, leaf.cx + shadow_shift, leaf.cy + shadow_shift, su, sv);
          if (Leaf::in_ellipse(su, sv, leaf.a + shadow_grow, leaf.b + shadow_grow)) {
            for (int c = 0; c < 3; ++c) px(i, c) = px(i, c) * 65 / 100;
          }
          continue;
        }
        // Lighter towards the tip.
        const std::int64_t along = blade ? static_cast<std::int64_t>(Wide(u) * 1000 / (Wide(leaf.a) * kRot)) : -1000;
        const int shade = static_cast<int>(9200 + 800 * along / 1000);
        int r = leaf.color.r * shade / 10000;
        int g = leaf.color.g * shade / 10000;
        int b = leaf.color.b * shade / 10000;
        if (blade) {
          const bool midrib = std::abs(v) <= (kSub * 7 / 10) * kRot && std::abs(u) <= leaf.a * kRot * 85 / 100;
          if (midrib) r += 26, g += 26, b += 26;
          if (leaf.highlight) {
            const Wide du = u - leaf.hu, dv = v - leaf.hv;
            if (du * du + dv * dv <= Wide(leaf.hr) * leaf.hr) r += 40, g += 40, b += 40;
          }
        }
        px(i, 0) = r;
        px(i, 1) = g;
        px(i, 2) = b;
        out.truth(y, x) = label;
      }
    }
  }

  for (int i = 0; i < canvas * canvas; ++i) {
    for (int c = 0; c < 3; ++c) out.image.pixels()(i, c) = clamp8(static_cast<long>(px(i, c)) * brightness / 1000);
  }
  return out;
}

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;

}  // namespace

int PlantSpec::reach() const {
  // Blade centre distance plus the larger semi-axis, plus the cast shadow.
  const double petiole = (1.0 - overlap) * 0.2 * leaf_length_max + 2.0;
  const double centre = petiole + leaf_length_max / 2.0 * (1.0 - overlap);
  const double semi = std::max(leaf_length_max, leaf_width_max * (1.0 + 0.4 * overlap)) / 2.0;
  return static_cast<int>(std::ceil(centre + semi + 4.0)) + 1;
}

void PlantSpec::validate() const {
  if (leaf_count < 1 || leaf_count > 64) throw Error(ErrorCode::InvalidArgument, "leaf count must be in 1..64");
  if (!(leaf_length_min > 0 && leaf_length_min <= leaf_length_max)) {
    throw Error(ErrorCode::InvalidArgument, "bad leaf length range");
  }
  if (!(leaf_width_min > 0 && leaf_width_min <= leaf_width_max)) {
    throw Error(ErrorCode::InvalidArgument, "bad leaf width range");
  }
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw Error(ErrorCode::InvalidArgument, "overlap must be in [0, 1]");
  if (!(texture_amplitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "texture amplitude must be >= 0");
}

SyntheticPlant generate_plant(const PlantSpec& spec, int canvas) {
  spec.validate();
  if (canvas < 2 * spec.reach() + 4) {
    throw Error(ErrorCode::CanvasTooSmall, "canvas " + std::to_string(canvas) + " < " + std::to_string(2 * spec.reach() + 4));
  }
  return render(spec, canvas, spec.seed ^ kNoiseSalt, 1000);
}

std::vector<RgbImage> generate_frames(const PlantSpec& spec, int canvas, int frames) {
  if (frames < 1) throw Error(ErrorCode::InvalidArgument, "need at least one frame");
  const SyntheticPlant newest = generate_plant(spec, canvas);
  std::vector<RgbImage> out;
  Rng jitter(spec.seed ^ 0x6a6974746572ULL);
  for (int f = 0; f + 1 < frames; ++f) {
    const int brightness = jitter.range(900, 1100);
    out.push_back(render(spec, canvas, jitter.next(), brightness).image);
  }
  out.push_back(newest.image);
  return out;
}

std::vector<ManifestEntry> sample_manifest(int n, const SpecRanges& ranges, std::uint64_t seed, int canvas) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "dataset needs at least one plant");
  Rng master(seed);
  std::vector<ManifestEntry> out;
  for (int k = 0; k < n; ++k) {
    ManifestEntry e;
    e.index = k;
    e.canvas = canvas;
    e.spec = ranges.base;
    e.spec.seed = master.next();
    e.spec.leaf_count = master.range(ranges.leaf_count_min, ranges.leaf_count_max);
    e.spec.overlap = master.uniform(ranges.overlap_min, ranges.overlap_max);
    out.push_back(e);
  }
  return out;
}

std::vector<SyntheticPlant> generate_dataset(int n, const SpecRanges& ranges, std::uint64_t seed, int canvas,
                                             std::vector<ManifestEntry>* manifest) {
  const auto entries = sample_manifest(n, ranges, seed, canvas);
  std::vector<SyntheticPlant> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(generate_plant(e.spec, e.canvas));
  if (manifest != nullptr) *manifest = entries;
  return out;
}

std::string manifest_to_string(const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  out.precision(17);
  out << "# synthetic rosette manifest\n";
  out << "count=" << entries.size() << "\n";
  for (const auto& e : entries) {
    const std::string p = "plant_" + std::to_string(e.index) + ".";
    out << p << "canvas=" << e.canvas << "\n";
    out << p << "seed=" << e.spec.seed << "\n";
    out << p << "leaf_count=" << e.spec.leaf_count << "\n";
    out << p << "leaf_length_min=" << e.spec.leaf_length_min << "\n";
    out << p << "leaf_length_max=" << e.spec.leaf_length_max << "\n";
    out << p << "leaf_width_min=" << e.spec.leaf_width_min << "\n";
    out << p << "leaf_width_max=" << e.spec.leaf_width_max << "\n";
    out << p << "angular_jitter=" << e.spec.angular_jitter << "\n";
    out << p << "overlap=" << e.spec.overlap << "\n";
    out << p << "texture_amplitude=" << e.spec.texture_amplitude << "\n";
  }
  return out.str();
}

std::vector<ManifestEntry> manifest_from_config(const KeyValueConfig& cfg) {
  const long long count = cfg.get_int("count", -1);
  if (count < 0) throw Error(ErrorCode::ConfigError, "manifest has no count");
  std::vector<ManifestEntry> out;
  for (long long k = 0; k < count; ++k) {
    const std::string p = "plant_" + std::to_string(k) + ".";
    const auto seed = cfg.get(p + "seed");
    if (!seed) throw Error(ErrorCode::ConfigError, "manifest misses " + p + "seed");
    ManifestEntry e;
    e.index = static_cast<int>(k);
    e.canvas = static_cast<int>(cfg.get_int(p + "canvas", 0));
    e.spec.seed = std::stoull(*seed);
    e.spec.leaf_count = static_cast<int>(cfg.get_int(p + "leaf_count", e.spec.leaf_count));
    e.spec.leaf_length_min = cfg.get_double(p + "leaf_length_min", e.spec.leaf_length_min);
    e.spec.leaf_length_max = cfg.get_double(p + "leaf_length_max", e.spec.leaf_length_max);
    e.spec.leaf_width_min = cfg.get_double(p + "leaf_width_min", e.spec.leaf_width_min);
    e.spec.leaf_width_max = cfg.get_double(p + "leaf_width_max", e.spec.leaf_width_max);
    e.spec.angular_jitter = cfg.get_double(p + "angular_jitter", e.spec.angular_jitter);
    e.spec.overlap = cfg.get_double(p + "overlap", e.spec.overlap);
    e.spec.texture_amplitude = cfg.get_double(p + "texture_amplitude", e.spec.texture_amplitude);
    out.push_back(e);
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<ManifestEntry>& manifest, int frames) {
  std::filesystem::create_directories(dir);
  for (const auto& e : manifest) {
    const std::string stem = "plant_" + std::to_string(e.index);
    const SyntheticPlant plant = generate_plant(e.spec, e.canvas);
    save_png(dir / (stem + ".png"), plant.image);
    save_label_png(dir / (stem + "_gt.png"), plant.truth);
    if (frames > 1) {
      const auto seq_dir = dir / (stem + "_frames");
      std::filesystem::create_directories(seq_dir);
      const auto images = generate_frames(e.spec, e.canvas, frames);
      for (std::size_t f = 0; f < images.size(); ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu.png", f);
        save_png(seq_dir / name, images[f]);
      }
    }
  }
  std::ofstream out(dir / "manifest.txt", std::ios::trunc);
  out << manifest_to_string(manifest);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest");
}

}  // namespace leafseg
