#pragma once

#include <utility>
#include <vector>

#include <torch/torch.h>

#include "tetgan/dataset.hpp"
#include "tetgan/model.hpp"
#include "tetgan/oneshot.hpp"

namespace tetgan {

struct AppOptions {
  /// Raise DegenerateGlyph instead of warning on an empty or full glyph.
  bool strict = false;
  double min_component_fraction = 0.1;
};

/// Switches a model to evaluation mode for the lifetime of the guard.
class EvalGuard {
 public:
  explicit EvalGuard(ModelSetImpl& m) : m_(m), was_training_(m.is_training()) { m_.eval(); }
  ~EvalGuard() { m_.train(was_training_); }
  EvalGuard(const EvalGuard&) = delete;
  EvalGuard& operator=(const EvalGuard&) = delete;

 private:
  ModelSetImpl& m_;
  bool was_training_;
};

/// [1,3,S,S] tensor at the model stage; other sizes are bicubic-resized with a warning.
torch::Tensor effects_input(const ModelSetImpl& m, const RgbImage& y);
/// Glyph image rescaled through its mask, distance channels recomputed.
GlyphImage fit_glyph(const GlyphImage& x, int side);
torch::Tensor glyph_input(const ModelSetImpl& m, const GlyphImage& x);

/// R channel of a generated glyph thresholded at 0.
GlyphMask binarize_glyph(const torch::Tensor& image);
/// Drops foreground components (4-connected) below `min_fraction` of the largest.
GlyphMask remove_small_components(const GlyphMask& mask, double min_fraction);
/// Re-encodes a mask; degenerate masks warn (or throw when strict) and saturate.
GlyphImage encode_glyph(const GlyphMask& mask, bool strict);

/// Extracted glyph mask at the resolution of `y`.
GlyphMask destylize_mask(ModelSet& m, const RgbImage& y, double min_component_fraction = 0.1);

GlyphImage destylize(ModelSet& m, const RgbImage& y, const AppOptions& opts = {});
RgbImage stylize(ModelSet& m, const GlyphImage& x, const RgbImage& y_prime);
/// (y1 restyled with y2's effects, y2 restyled with y1's effects).
std::pair<RgbImage, RgbImage> exchange(ModelSet& m, const RgbImage& y1, const RgbImage& y2,
                                       const AppOptions& opts = {});
/// Decodes x with the weighted mean of the style features; weights are normalized.
RgbImage interpolate(ModelSet& m, const GlyphImage& x, const std::vector<std::pair<RgbImage, double>>& styles);

/// Unsupervised one-shot transfer of y's effects onto x_target, with the
/// user strokes constraining the glyph extracted from y. Leaves `m` untouched.
RgbImage masked_stylize(const ModelSet& m, const RgbImage& y, const GlyphImage& x_target, const RgbImage& strokes,
                        const OneShotConfig& cfg, const AppOptions& opts = {});

/// Intersection over union of two equally sized masks (1 when both are empty).
double iou(const GlyphMask& a, const GlyphMask& b);

}  // namespace tetgan
