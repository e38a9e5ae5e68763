#pragma once

#include <optional>
#include <vector>

#include "tetgan/dataset.hpp"
#include "tetgan/losses.hpp"
#include "tetgan/model.hpp"
#include "tetgan/trainer.hpp"

namespace tetgan {

enum class OneShotMode { supervised, unsupervised };

struct OneShotConfig {
  int crop_size = 256;
  int crops_per_epoch = 64;
  std::int64_t steps = 300;
  int batch = 8;
  double learning_rate = 2e-4;
  OneShotMode mode = OneShotMode::supervised;
  std::uint64_t seed = 0;
  LossWeights weights;
  /// Connected foreground components smaller than this fraction of the
  /// largest one are removed from the extracted glyph.
  double min_component_fraction = 0.1;

  void validate(int example_side) const;
};

/// Foreground and background hints painted by the user: red strokes mark
/// glyph pixels, blue strokes mark background pixels.
struct MaskGuide {
  GlyphMask foreground;
  GlyphMask background;

  static MaskGuide from_strokes(const RgbImage& strokes);
  bool empty() const;
  /// Forces marked pixels of `glyph` to foreground or background.
  GlyphMask apply(GlyphMask glyph) const;
};

struct UnsupervisedOptions {
  /// Used instead of the destylized glyph when set.
  std::optional<GlyphMask> glyph_override;
  std::optional<MaskGuide> guide;
  /// Re-extract the glyph with the current model at every epoch instead of
  /// once from the pretrained model. Self-training on its own output tends to
  /// drift, so this is off by default.
  bool refresh_glyph = false;
};

struct OneShotResult {
  TrainState state;
  std::vector<LossReport> reports;
  /// Glyph trained on in the last epoch (the extracted glyph in unsupervised mode).
  GlyphMask glyph;
};

/// Triplets (x_i, y_i, y_j) over one epoch of crops, j != i, rescaled to `resolution`.
std::vector<TrainingTriplet> self_style_triplets(const std::vector<CropPair>& crops, int resolution, Rng& rng);

/// Fine-tunes a copy of `pretrained` on crops of one aligned pair.
OneShotResult finetune_supervised(const ModelSet& pretrained, const GlyphImage& x, const RgbImage& y,
                                  const OneShotConfig& cfg);

/// Fine-tunes a copy of `pretrained` from an effects image alone: the glyph
/// destylized by the pretrained model stands in for x, and the style
/// autoencoder term is added to the objective.
OneShotResult finetune_unsupervised(const ModelSet& pretrained, const RgbImage& y, const OneShotConfig& cfg,
                                    const UnsupervisedOptions& options = {});

/// Mean unweighted stylization L1 over `n` random self-style crop triplets,
/// evaluated without updating the model.
double heldout_spix(ModelSet& model, const GlyphImage& x, const RgbImage& y, int crop_size, int n, std::uint64_t seed);

}  // namespace tetgan
