#include "tetgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "tetgan/log.hpp"

namespace tetgan {

namespace fs = std::filesystem;

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw ValidationError("uniform_index over an empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Distance transform: separable lower envelope of parabolas on squared
// distances, one column pass followed by one row pass.
// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = 1e20;

void lower_envelope_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                       std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(f.size());
  auto intersect = [&](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
  };
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

DistanceField distance_transform(const GlyphMask& mask, DistanceTarget target) {
  const std::uint8_t want = target == DistanceTarget::foreground ? 1 : 0;
  const int w = mask.width, h = mask.height;
  DistanceField sq(w, h);
  bool any = false;
  for (size_t i = 0; i < mask.size(); ++i) {
    const bool hit = (mask.values[i] != 0) == (want != 0);
    sq.values[i] = hit ? 0.0 : kInf;
    any = any || hit;
  }
  if (!any) {
    throw DegenerateGlyph(std::string("degenerate glyph: no ") +
                          (target == DistanceTarget::foreground ? "foreground" : "background") + " pixels");
  }

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sq(x, y);
    lower_envelope_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq(x, y) = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq(x, y);
    lower_envelope_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) sq(x, y) = std::sqrt(d[x]);
  }
  return sq;
}

GlyphImage encode_distance_channels(const GlyphMask& mask, double saturation_radius, DegeneratePolicy policy) {
  if (mask.width <= 0 || !mask.square()) throw ValidationError("glyph mask must be square and non-empty");
  const double r = saturation_radius > 0 ? saturation_radius : mask.width / 4.0;

  const auto count = std::count(mask.values.begin(), mask.values.end(), 1);
  const bool no_fg = count == 0;
  const bool no_bg = count == static_cast<long>(mask.size());
  if ((no_fg || no_bg) && policy == DegeneratePolicy::error) {
    throw DegenerateGlyph(no_fg ? "degenerate glyph: no foreground pixels" : "degenerate glyph: no background pixels");
  }
  // With the saturate policy a missing set lies infinitely far away.
  DistanceField to_bg = no_bg ? DistanceField(mask.width, mask.height, kInf)
                              : distance_transform(mask, DistanceTarget::background);
  DistanceField to_fg = no_fg ? DistanceField(mask.width, mask.height, kInf)
                              : distance_transform(mask, DistanceTarget::foreground);

  GlyphImage out;
  out.rgb = RgbImage(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const bool fg = mask(x, y) != 0;
      out.rgb.at(x, y, 0) = fg ? 255 : 0;
      out.rgb.at(x, y, 1) = fg ? static_cast<std::uint8_t>(std::lround(255.0 * std::min(to_bg(x, y), r) / r)) : 0;
      out.rgb.at(x, y, 2) = fg ? 0 : static_cast<std::uint8_t>(std::lround(255.0 * std::min(to_fg(x, y), r) / r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Colormaps
// ---------------------------------------------------------------------------

std::array<double, 3> Colormap::evaluate(double distance) const {
  const double t = std::clamp(distance, 0.0, 1.0);
  const auto& cp = control_points;
  auto hi = std::upper_bound(cp.begin(), cp.end(), t, [](double v, const ControlPoint& p) { return v < p.distance; });
  if (hi == cp.begin()) return cp.front().color;
  if (hi == cp.end()) return cp.back().color;
  const auto& a = *(hi - 1);
  const auto& b = *hi;
  const double u = (t - a.distance) / (b.distance - a.distance);
  return {a.color[0] + u * (b.color[0] - a.color[0]), a.color[1] + u * (b.color[1] - a.color[1]),
          a.color[2] + u * (b.color[2] - a.color[2])};
}

void Colormap::validate() const {
  if (control_points.size() < 2) throw ValidationError("colormap needs at least two control points");
  if (control_points.front().distance != 0.0 || control_points.back().distance != 1.0) {
    throw ValidationError("colormap must span distances [0,1]");
  }
  for (size_t i = 1; i < control_points.size(); ++i) {
    if (!(control_points[i].distance > control_points[i - 1].distance)) {
      throw ValidationError("colormap distances must be strictly increasing");
    }
  }
}

Colormap random_colormap(std::uint64_t seed, int control_points) {
  if (control_points < 2) throw ValidationError("colormap needs at least two control points");
  Rng rng(seed);
  Colormap map;
  map.seed = seed;
  for (int i = 0; i < control_points; ++i) {
    Colormap::ControlPoint p;
    p.distance = i == control_points - 1 ? 1.0 : static_cast<double>(i) / (control_points - 1);
    for (auto& c : p.color) c = static_cast<double>(rng() >> 56);
    map.control_points.push_back(p);
  }
  return map;
}

EffectsImage synthesize_effects(const GlyphImage& glyph, const Colormap& fg, const Colormap& bg) {
  fg.validate();
  bg.validate();
  const auto& src = glyph.rgb;
  EffectsImage out;
  out.rgb = RgbImage(src.width, src.height);
  out.glyph_id = glyph.glyph_id;
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const bool is_fg = src.at(x, y, 0) >= 128;
      const auto color = is_fg ? fg.evaluate(src.at(x, y, 1) / 255.0) : bg.evaluate(src.at(x, y, 2) / 255.0);
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(color[c], 0.0, 255.0)));
      }
    }
  }
  return out;
}

SyntheticStyle synthetic_style(std::string style_id, std::uint64_t seed, int control_points) {
  return {std::move(style_id), random_colormap(mix_seed(seed, 0), control_points),
          random_colormap(mix_seed(seed, 1), control_points)};
}

// ---------------------------------------------------------------------------
// Dataset layout
// ---------------------------------------------------------------------------

size_t DatasetIndex::entry_count() const {
  size_t n = 0;
  for (const auto& [_, entries] : styles) n += entries.size();
  return n;
}

std::set<std::string> DatasetIndex::glyph_ids() const {
  std::set<std::string> ids;
  for (const auto& [_, entries] : styles)
    for (const auto& e : entries) ids.insert(e.glyph_id);
  return ids;
}

DatasetIndex DatasetIndex::subset(bool test) const {
  DatasetIndex out;
  out.root = root;
  out.test_glyphs = test_glyphs;
  for (const auto& [style, entries] : styles) {
    std::vector<DatasetEntry> kept;
    for (const auto& e : entries)
      if (test_glyphs.contains(e.glyph_id) == test) kept.push_back(e);
    if (!kept.empty()) out.styles.emplace(style, std::move(kept));
  }
  return out;
}

DatasetIndex load_index(const fs::path& root) {
  if (!fs::is_directory(root)) throw ValidationError("missing dataset root: " + root.string());
  DatasetIndex index;
  index.root = root;

  std::map<std::string, fs::path> glyphs;
  const auto glyph_dir = root / "_glyphs";
  if (fs::is_directory(glyph_dir)) {
    for (const auto& f : fs::directory_iterator(glyph_dir))
      if (f.path().extension() == ".png") glyphs.emplace(f.path().stem().string(), f.path());
  }

  std::vector<fs::path> style_dirs;
  for (const auto& d : fs::directory_iterator(root))
    if (d.is_directory() && d.path().filename() != "_glyphs") style_dirs.push_back(d.path());
  std::sort(style_dirs.begin(), style_dirs.end());

  for (const auto& dir : style_dirs) {
    std::vector<DatasetEntry> entries;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.path().extension() != ".png") continue;
      const auto gid = f.path().stem().string();
      auto it = glyphs.find(gid);
      if (it == glyphs.end()) {
        index.warnings.push_back("unpaired effects file " + f.path().string());
        continue;
      }
      entries.push_back({gid, it->second, f.path()});
    }
    std::sort(entries.begin(), entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) { return a.glyph_id < b.glyph_id; });
    if (!entries.empty()) index.styles.emplace(dir.filename().string(), std::move(entries));
  }
  for (const auto& w : index.warnings) log::warn(w);
  if (index.styles.empty()) throw ValidationError("empty dataset: " + root.string());

  const auto split = root / "split.json";
  if (fs::exists(split)) {
    std::ifstream in(split);
    const auto j = nlohmann::json::parse(in);
    for (const auto& g : j.value("test", nlohmann::json::array())) index.test_glyphs.insert(g.get<std::string>());
  }
  return index;
}

void save_pair(const fs::path& root, const GlyphMask& mask, const EffectsImage& effects) {
  if (effects.glyph_id.empty() || effects.style_id.empty()) {
    throw ValidationError("effects image needs style and glyph ids to be saved");
  }
  if (effects.rgb.width != mask.width || effects.rgb.height != mask.height) {
    throw ValidationError("glyph and effects sizes differ");
  }
  Grid<std::uint8_t> gray(mask.width, mask.height);
  for (size_t i = 0; i < mask.size(); ++i) gray.values[i] = mask.values[i] ? 255 : 0;
  write_png_gray(root / "_glyphs" / (effects.glyph_id + ".png"), gray);
  write_png(root / effects.style_id / (effects.glyph_id + ".png"), effects.rgb);
}

void save_split(const fs::path& root, const std::set<std::string>& test_glyphs) {
  fs::create_directories(root);
  std::ofstream out(root / "split.json");
  out << nlohmann::json{{"test", test_glyphs}}.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

DatasetIndex generate_dataset(const fs::path& root, const GenerateOptions& o) {
  if (o.styles < 1) throw ValidationError("need at least one style");
  if (o.glyphs.size() < 2) throw ValidationError("need at least two glyphs");
  for (const auto& g : o.test_glyphs) {
    if (std::find(o.glyphs.begin(), o.glyphs.end(), g) == o.glyphs.end()) {
      throw ValidationError("test glyph '" + g + "' is not in the glyph list");
    }
  }
  std::vector<std::pair<GlyphMask, GlyphImage>> glyphs;
  for (const auto& id : o.glyphs) {
    auto mask = rasterize_glyph(id, o.size);
    auto image = encode_distance_channels(mask);
    image.glyph_id = id;
    glyphs.emplace_back(std::move(mask), std::move(image));
  }
  for (int s = 0; s < o.styles; ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "style_%02d", s);
    auto style = synthetic_style(name, mix_seed(o.seed, 1000 + static_cast<std::uint64_t>(s)));
    for (const auto& [mask, image] : glyphs) {
      auto effects = synthesize_effects(image, style.foreground, style.background);
      effects.style_id = name;
      effects.glyph_id = image.glyph_id;
      save_pair(root, mask, effects);
    }
  }
  if (!o.test_glyphs.empty()) save_split(root, o.test_glyphs);
  return load_index(root);
}

TripletChoice choose_triplet(const DatasetIndex& index, Rng& rng, double augment_probability) {
  std::vector<const std::string*> eligible;
  for (const auto& [style, entries] : index.styles)
    if (entries.size() >= 2) eligible.push_back(&style);
  if (eligible.empty()) throw ValidationError("every style has a single glyph; cannot draw y'");

  TripletChoice c;
  c.style_id = *eligible[uniform_index(rng, eligible.size())];
  const auto& entries = index.styles.at(c.style_id);
  const auto yi = uniform_index(rng, entries.size());
  auto pi = uniform_index(rng, entries.size() - 1);
  if (pi >= yi) ++pi;
  c.y = &entries[yi];
  c.y_prime = &entries[pi];
  c.augmented = uniform01(rng) < augment_probability;
  c.colormap_seed = rng();
  return c;
}

TripletSampler::TripletSampler(const DatasetIndex& index, int resolution, double augment_probability, int crop_size)
    : index_(index), resolution_(resolution), augment_probability_(augment_probability), crop_size_(crop_size) {
  if (crop_size_ > 0 && crop_size_ < resolution_) throw ValidationError("crop size is below the sampling resolution");
}

const GlyphMask& TripletSampler::source_mask(const std::string& glyph_id) {
  auto it = masks_.find(glyph_id);
  if (it != masks_.end()) return it->second;
  const DatasetEntry* entry = nullptr;
  for (const auto& [_, entries] : index_.styles) {
    for (const auto& e : entries)
      if (e.glyph_id == glyph_id) entry = &e;
    if (entry) break;
  }
  if (!entry) throw ValidationError("unknown glyph " + glyph_id);
  auto gray = read_png_gray(entry->glyph_path);
  if (gray.width < resolution_) {
    throw ValidationError("dataset resolution " + std::to_string(gray.width) + " is below " +
                          std::to_string(resolution_));
  }
  GlyphMask mask(gray.width, gray.height);
  for (size_t i = 0; i < gray.size(); ++i) mask.values[i] = gray.values[i] >= 128 ? 1 : 0;
  return masks_.emplace(glyph_id, std::move(mask)).first->second;
}

const RgbImage& TripletSampler::source_effects(const std::string& style_id, const DatasetEntry& entry) {
  const auto key = style_id + "/" + entry.glyph_id;
  auto it = sources_.find(key);
  if (it != sources_.end()) return it->second;
  auto rgb = read_png(entry.effects_path);
  if (rgb.width < resolution_) {
    throw ValidationError("dataset resolution " + std::to_string(rgb.width) + " is below " +
                          std::to_string(resolution_));
  }
  return sources_.emplace(key, std::move(rgb)).first->second;
}

const GlyphImage& TripletSampler::glyph(const std::string& glyph_id) {
  auto it = glyphs_.find(glyph_id);
  if (it != glyphs_.end()) return it->second;
  auto image = encode_distance_channels(resize_mask(source_mask(glyph_id), resolution_));
  image.glyph_id = glyph_id;
  return glyphs_.emplace(glyph_id, std::move(image)).first->second;
}

const EffectsImage& TripletSampler::effects(const std::string& style_id, const DatasetEntry& entry) {
  const auto key = style_id + "/" + entry.glyph_id;
  auto it = effects_.find(key);
  if (it != effects_.end()) return it->second;
  EffectsImage e{resize_area(source_effects(style_id, entry), resolution_), style_id, entry.glyph_id};
  return effects_.emplace(key, std::move(e)).first->second;
}

TrainingTriplet TripletSampler::sample(Rng& rng) {
  const auto c = choose_triplet(index_, rng, augment_probability_);
  TrainingTriplet t;
  t.augmented = c.augmented;
  const int side = source_mask(c.y->glyph_id).width;
  if (crops(side)) {
    const auto span = static_cast<std::uint64_t>(side - crop_size_ + 1);
    // Distances saturate at a quarter of the full image, as in the effects.
    const double radius = side / 4.0 * resolution_ / crop_size_;
    auto window = [&](const std::string& glyph_id, const RgbImage* effects) {
      const int x0 = static_cast<int>(uniform_index(rng, span));
      const int y0 = static_cast<int>(uniform_index(rng, span));
      auto g = encode_distance_channels(resize_mask(crop(source_mask(glyph_id), x0, y0, crop_size_), resolution_),
                                        radius, DegeneratePolicy::saturate);
      g.glyph_id = glyph_id;
      RgbImage y = effects ? resize_area(crop(*effects, x0, y0, crop_size_), resolution_) : RgbImage{};
      return std::pair{std::move(g), std::move(y)};
    };
    if (c.augmented) {
      const auto style = synthetic_style("augmented", c.colormap_seed);
      t.x = window(c.y->glyph_id, nullptr).first;
      t.y = synthesize_effects(t.x, style.foreground, style.background);
      t.y_prime = synthesize_effects(window(c.y_prime->glyph_id, nullptr).first, style.foreground, style.background);
      t.y.style_id = t.y_prime.style_id = "augmented-" + std::to_string(c.colormap_seed);
    } else {
      auto [x, y] = window(c.y->glyph_id, &source_effects(c.style_id, *c.y));
      t.x = std::move(x);
      t.y = EffectsImage{std::move(y), c.style_id, c.y->glyph_id};
      t.y_prime = EffectsImage{window(c.y_prime->glyph_id, &source_effects(c.style_id, *c.y_prime)).second, c.style_id,
                               c.y_prime->glyph_id};
    }
    return t;
  }
  t.x = glyph(c.y->glyph_id);
  if (c.augmented) {
    // Fresh random style shared by y and y', rendered on the same two glyphs.
    const auto style = synthetic_style("augmented", c.colormap_seed);
    t.y = synthesize_effects(t.x, style.foreground, style.background);
    t.y_prime = synthesize_effects(glyph(c.y_prime->glyph_id), style.foreground, style.background);
    t.y.style_id = t.y_prime.style_id = "augmented-" + std::to_string(c.colormap_seed);
  } else {
    t.y = effects(c.style_id, *c.y);
    t.y_prime = effects(c.style_id, *c.y_prime);
  }
  return t;
}

TrainingTriplet sample_triplet(const DatasetIndex& index, Rng& rng, double augment_probability) {
  const auto first = read_png(index.styles.begin()->second.front().effects_path);
  TripletSampler sampler(index, first.width, augment_probability);
  return sampler.sample(rng);
}

std::vector<CropPair> crop_set(const GlyphImage& x, const EffectsImage& y, int n, int size, Rng& rng) {
  if (x.rgb.width != y.rgb.width || x.rgb.height != y.rgb.height) {
    throw ValidationError("glyph and effects images are misaligned (size mismatch)");
  }
  if (size <= 0 || size > x.side()) throw ValidationError("crop size exceeds image side");
  if (n < 1) throw ValidationError("crop count must be positive");
  const auto mask = x.mask();
  const double radius = x.side() / 4.0;
  const auto span = static_cast<std::uint64_t>(x.side() - size + 1);
  std::vector<CropPair> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    CropPair p;
    p.offset_x = static_cast<int>(uniform_index(rng, span));
    p.offset_y = static_cast<int>(uniform_index(rng, span));
    p.x = encode_distance_channels(crop(mask, p.offset_x, p.offset_y, size), radius, DegeneratePolicy::saturate);
    p.saturation_radius = radius;
    p.x.glyph_id = x.glyph_id;
    p.y = EffectsImage{crop(y.rgb, p.offset_x, p.offset_y, size), y.style_id, y.glyph_id};
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace tetgan
