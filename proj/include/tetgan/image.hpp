#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/types.h>

namespace tetgan {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Caller supplied malformed input (bad size, unknown id, shape mismatch...).
struct ValidationError : Error {
  using Error::Error;
};

/// The glyph has no foreground or no background, so distances are undefined.
struct DegenerateGlyph : Error {
  using Error::Error;
};

/// Row-major 2-D grid.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

  T& operator()(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }

  size_t size() const { return values.size(); }
  bool square() const { return width == height; }
  bool operator==(const Grid&) const = default;
};

/// Binary glyph mask: 1 = glyph foreground, 0 = background.
using GlyphMask = Grid<std::uint8_t>;
using DistanceField = Grid<double>;

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }

  bool operator==(const RgbImage&) const = default;
};

/// Three-channel distance-encoded text image. R is the glyph mask scaled to
/// {0,255}, G the saturated distance to the background (inside the glyph) and
/// B the saturated distance to the glyph (outside it).
struct GlyphImage {
  RgbImage rgb;
  std::string glyph_id;

  int side() const { return rgb.width; }
  GlyphMask mask() const;
};

/// Text-effects image, labelled with the style it carries and the glyph it renders.
struct EffectsImage {
  RgbImage rgb;
  std::string style_id;
  std::string glyph_id;

  int side() const { return rgb.width; }
};

// PNG I/O. Grayscale files are expanded to RGB on read.
RgbImage read_png(const std::filesystem::path& path);
Grid<std::uint8_t> read_png_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png_gray(const std::filesystem::path& path, const Grid<std::uint8_t>& image);

RgbImage crop(const RgbImage& image, int x0, int y0, int size);
GlyphMask crop(const GlyphMask& mask, int x0, int y0, int size);

/// Area-average resampling to a square of `side` pixels.
RgbImage resize_area(const RgbImage& image, int side);
/// Bicubic resampling to a square of `side` pixels (values clamped to [0,255]).
RgbImage resize_bicubic(const RgbImage& image, int side);
/// Area-average then threshold at one half.
GlyphMask resize_mask(const GlyphMask& mask, int side);

/// [3,H,W] float tensor in [-1,1].
torch::Tensor to_tensor(const RgbImage& image);
/// Inverse of to_tensor; accepts [3,H,W] (or [1,3,H,W]) and rounds to 8 bit.
RgbImage from_tensor(const torch::Tensor& chw);

/// Stacks images into a [B,3,H,W] float batch in [-1,1].
torch::Tensor stack_images(const std::vector<const RgbImage*>& images);

}  // namespace tetgan
