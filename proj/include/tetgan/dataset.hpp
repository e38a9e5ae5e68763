#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tetgan/image.hpp"

namespace tetgan {

/// All library randomness flows through explicitly passed 64-bit Mersenne
/// Twister streams; its output sequence is fixed by the C++ standard.
using Rng = std::mt19937_64;

/// Uniform double in [0,1) built from the top 53 bits of one draw.
double uniform01(Rng& rng);
/// Uniform integer in [0, n) (rejection sampling, no modulo bias).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
/// SplitMix64 finalizer, used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Glyph sources
// ---------------------------------------------------------------------------

/// Resolutions accepted by rasterize_glyph.
inline constexpr std::array<int, 4> kGlyphSizes{64, 128, 256, 320};

/// 5x7 bitmap of a built-in character ('#' = ink), or nullptr when `c` has none.
const std::array<const char*, 7>* glyph_bitmap(char c);

/// Ids of the built-in procedural glyphs (characters and geometric primitives).
std::vector<std::string> builtin_glyph_ids();

/// Produces a centered binary mask. `descriptor` is a built-in id (a single
/// character A-Z / 0-9, or one of filled_disk, ring, square, cross, triangle,
/// diamond, empty) or the path of a user PNG, which is thresholded at 128.
GlyphMask rasterize_glyph(const std::string& descriptor, int size);

// ---------------------------------------------------------------------------
// Distance encoding
// ---------------------------------------------------------------------------

enum class DistanceTarget { foreground, background };

/// Exact Euclidean distance from every pixel to the nearest pixel of the
/// target set. Throws DegenerateGlyph when the target set is empty.
DistanceField distance_transform(const GlyphMask& mask, DistanceTarget target);

enum class DegeneratePolicy {
  error,     ///< throw DegenerateGlyph
  saturate,  ///< treat the missing set as infinitely far away
};

/// Builds the three-channel glyph image. `saturation_radius <= 0` selects side/4.
GlyphImage encode_distance_channels(const GlyphMask& mask, double saturation_radius = 0.0,
                                    DegeneratePolicy policy = DegeneratePolicy::error);

// ---------------------------------------------------------------------------
// Colormaps and synthetic effects
// ---------------------------------------------------------------------------

struct Colormap {
  struct ControlPoint {
    double distance;
    std::array<double, 3> color;
  };
  std::vector<ControlPoint> control_points;
  std::uint64_t seed = 0;

  /// Piecewise-linear interpolation; `distance` is clamped to [0,1].
  std::array<double, 3> evaluate(double distance) const;
  /// Checks ordering, end points and color range.
  void validate() const;
};

/// K control points at evenly spaced distances with uniformly random 8-bit colors.
Colormap random_colormap(std::uint64_t seed, int control_points = 8);

/// Tints the glyph by distance: foreground pixels take fg(G/255), background
/// pixels take bg(B/255).
EffectsImage synthesize_effects(const GlyphImage& glyph, const Colormap& fg, const Colormap& bg);

/// Foreground/background colormap pair of a synthetic style.
struct SyntheticStyle {
  std::string style_id;
  Colormap foreground;
  Colormap background;
};

SyntheticStyle synthetic_style(std::string style_id, std::uint64_t seed, int control_points = 8);

// ---------------------------------------------------------------------------
// On-disk dataset
// ---------------------------------------------------------------------------

struct DatasetEntry {
  std::string glyph_id;
  std::filesystem::path glyph_path;
  std::filesystem::path effects_path;
};

/// Layout: root/<style_id>/<glyph_id>.png holds effects images and
/// root/_glyphs/<glyph_id>.png the raw glyph masks. An optional
/// root/split.json ({"test": [...]}) marks held-out glyphs.
struct DatasetIndex {
  std::filesystem::path root;
  std::map<std::string, std::vector<DatasetEntry>> styles;
  std::set<std::string> test_glyphs;
  std::vector<std::string> warnings;

  size_t entry_count() const;
  std::set<std::string> glyph_ids() const;
  /// Index restricted to the train (test = false) or test glyphs.
  DatasetIndex subset(bool test) const;
};

DatasetIndex load_index(const std::filesystem::path& root);

/// Writes one (glyph mask, effects image) pair in the dataset layout.
void save_pair(const std::filesystem::path& root, const GlyphMask& mask, const EffectsImage& effects);
void save_split(const std::filesystem::path& root, const std::set<std::string>& test_glyphs);

/// Procedural dataset: every built-in glyph in `glyphs` rendered in
/// `styles` synthetic colormap styles named style_00, style_01, ...
struct GenerateOptions {
  int styles = 4;
  std::vector<std::string> glyphs;
  int size = 320;
  std::uint64_t seed = 0;
  std::set<std::string> test_glyphs;
};

DatasetIndex generate_dataset(const std::filesystem::path& root, const GenerateOptions& options);

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// (x, y, y') where y renders x and y' carries y's style on another glyph.
struct TrainingTriplet {
  GlyphImage x;
  EffectsImage y;
  EffectsImage y_prime;
  bool augmented = false;
};

inline constexpr double kAugmentProbability = 0.25;

/// Which entries a triplet draw picked, before any image is materialized.
struct TripletChoice {
  std::string style_id;
  const DatasetEntry* y = nullptr;
  const DatasetEntry* y_prime = nullptr;
  bool augmented = false;
  std::uint64_t colormap_seed = 0;
};

TripletChoice choose_triplet(const DatasetIndex& index, Rng& rng, double augment_probability = kAugmentProbability);

/// Draws a triplet from disk at the dataset's native resolution.
TrainingTriplet sample_triplet(const DatasetIndex& index, Rng& rng, double augment_probability = kAugmentProbability);

/// Caches decoded images at a fixed resolution and materializes triplets.
/// Glyph distance channels are recomputed at that resolution.
///
/// With crop_size > 0, sources larger than crop_size are first cut to a
/// random crop_size window (shared by x and y, drawn separately for y') and
/// the window is then downsampled to the resolution.
class TripletSampler {
 public:
  TripletSampler(const DatasetIndex& index, int resolution, double augment_probability = kAugmentProbability,
                 int crop_size = 0);

  TrainingTriplet sample(Rng& rng);
  int resolution() const { return resolution_; }
  const GlyphImage& glyph(const std::string& glyph_id);
  const EffectsImage& effects(const std::string& style_id, const DatasetEntry& entry);

 private:
  const GlyphMask& source_mask(const std::string& glyph_id);
  const RgbImage& source_effects(const std::string& style_id, const DatasetEntry& entry);
  bool crops(int source_side) const { return crop_size_ > 0 && source_side > crop_size_; }

  const DatasetIndex& index_;
  int resolution_;
  double augment_probability_;
  int crop_size_;
  std::map<std::string, GlyphMask> masks_;
  std::map<std::string, RgbImage> sources_;
  std::map<std::string, GlyphImage> glyphs_;
  std::map<std::string, EffectsImage> effects_;
};

/// Aligned crop of a glyph/effects pair.
struct CropPair {
  GlyphImage x;
  EffectsImage y;
  int offset_x = 0;
  int offset_y = 0;
  /// Saturation radius of x's distance channels, in crop pixels.
  double saturation_radius = 0.0;
};

/// n aligned random crops. Glyph crops are re-encoded from their own mask
/// with the saturation radius of the full image (side / 4), so distances
/// keep the scale the effects were rendered at.
std::vector<CropPair> crop_set(const GlyphImage& x, const EffectsImage& y, int n, int size, Rng& rng);

}  // namespace tetgan
