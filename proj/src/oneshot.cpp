#include "tetgan/oneshot.hpp"

#include "tetgan/log.hpp"

#include "tetgan/apps.hpp"

namespace tetgan {

void OneShotConfig::validate(int example_side) const {
  if (crop_size < 1 || crop_size > example_side) throw ValidationError("crop size must lie in [1, example size]");
  if (crops_per_epoch < 2) throw ValidationError("need at least two crops per epoch");
  if (steps < 0 || batch < 1 || !(learning_rate > 0)) throw ValidationError("invalid finetune schedule");
  if (!(min_component_fraction >= 0 && min_component_fraction <= 1)) throw ValidationError("invalid component fraction");
}

MaskGuide MaskGuide::from_strokes(const RgbImage& s) {
  MaskGuide g{GlyphMask(s.width, s.height), GlyphMask(s.width, s.height)};
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const int r = s.at(x, y, 0), gr = s.at(x, y, 1), b = s.at(x, y, 2);
      if (r >= 128 && gr < 128 && b < 128) g.foreground(x, y) = 1;
      if (b >= 128 && r < 128 && gr < 128) g.background(x, y) = 1;
    }
  }
  return g;
}

bool MaskGuide::empty() const {
  for (size_t i = 0; i < foreground.size(); ++i) {
    if (foreground.values[i] || background.values[i]) return false;
  }
  return true;
}

GlyphMask MaskGuide::apply(GlyphMask glyph) const {
  if (glyph.width != foreground.width || glyph.height != foreground.height) throw ValidationError("mask size mismatch");
  for (size_t i = 0; i < glyph.size(); ++i) {
    if (foreground.values[i]) glyph.values[i] = 1;
    if (background.values[i]) glyph.values[i] = 0;
  }
  return glyph;
}

namespace {

RgbImage fit_rgb(const RgbImage& img, int side) {
  if (img.width == side) return img;
  return img.width > side ? resize_area(img, side) : resize_bicubic(img, side);
}

TrainState finetune_state(const ModelSet& pretrained, const OneShotConfig& cfg) {
  TrainConfig tc;
  tc.network = pretrained->config;
  tc.stages = {{pretrained->stage, cfg.steps, cfg.batch}};
  tc.learning_rate = cfg.learning_rate;
  tc.weights = cfg.weights;
  tc.seed = cfg.seed;
  tc.augment_probability = 0.0;
  auto s = make_state(tc, pretrained);
  s.rng.seed(mix_seed(cfg.seed, 7));
  return s;
}

/// Runs one epoch of self-stylization steps; returns false once the budget is spent.
bool run_epoch(TrainState& s, const GlyphImage& x, const RgbImage& y, const OneShotConfig& cfg, bool srec,
               std::int64_t& done, std::vector<LossReport>& reports) {
  auto crops = crop_set(x, EffectsImage{y, "self", ""}, cfg.crops_per_epoch, cfg.crop_size, s.rng);
  auto triplets = self_style_triplets(crops, s.model->stage, s.rng);
  for (size_t begin = 0; begin < triplets.size(); begin += cfg.batch) {
    if (done >= cfg.steps) return false;
    const size_t end = std::min(triplets.size(), begin + static_cast<size_t>(cfg.batch));
    std::vector<TrainingTriplet> chunk(triplets.begin() + begin, triplets.begin() + end);
    reports.push_back(train_step(s, to_batch(chunk), srec));
    ++done;
  }
  return done < cfg.steps;
}

}  // namespace

std::vector<TrainingTriplet> self_style_triplets(const std::vector<CropPair>& crops, int resolution, Rng& rng) {
  const auto n = crops.size();
  if (n < 2) throw ValidationError("self-stylization needs at least two crops");
  std::vector<TrainingTriplet> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    auto j = static_cast<size_t>(uniform_index(rng, n - 1));
    if (j >= i) ++j;
    TrainingTriplet t;
    const auto& c = crops[i];
    const double radius = c.saturation_radius > 0 ? c.saturation_radius * resolution / c.x.side() : 0.0;
    t.x = c.x.side() == resolution && c.saturation_radius > 0
              ? c.x
              : encode_distance_channels(resize_mask(c.x.mask(), resolution), radius, DegeneratePolicy::saturate);
    t.x.glyph_id = "crop-" + std::to_string(i);
    t.y = {fit_rgb(crops[i].y.rgb, resolution), "self", t.x.glyph_id};
    t.y_prime = {fit_rgb(crops[j].y.rgb, resolution), "self", "crop-" + std::to_string(j)};
    out.push_back(std::move(t));
  }
  return out;
}

OneShotResult finetune_supervised(const ModelSet& pretrained, const GlyphImage& x, const RgbImage& y,
                                  const OneShotConfig& cfg) {
  if (x.rgb.width != y.width || x.rgb.height != y.height) throw ValidationError("misaligned pair (size mismatch)");
  cfg.validate(y.width);
  if (cfg.crop_size < pretrained->stage) log::warn("crops of ", cfg.crop_size, " are upsampled to ", pretrained->stage);
  OneShotResult r{finetune_state(pretrained, cfg), {}, x.mask()};
  std::int64_t done = 0;
  while (done < cfg.steps && run_epoch(r.state, x, y, cfg, false, done, r.reports)) {
  }
  return r;
}

OneShotResult finetune_unsupervised(const ModelSet& pretrained, const RgbImage& y, const OneShotConfig& cfg,
                                    const UnsupervisedOptions& options) {
  if (y.width != y.height) throw ValidationError("effects image must be square");
  cfg.validate(y.width);
  if (options.guide && (options.guide->foreground.width != y.width || options.guide->foreground.height != y.height)) {
    throw ValidationError("mask size mismatch");
  }
  OneShotResult r{finetune_state(pretrained, cfg), {}, {}};
  const auto y_stage = fit_rgb(y, r.state.model->stage);
  auto extract = [&] {
    GlyphMask glyph;
    if (options.glyph_override) {
      glyph = *options.glyph_override;
    } else {
      glyph = destylize_mask(r.state.model, y_stage, cfg.min_component_fraction);
      if (glyph.width != y.width) glyph = resize_mask(glyph, y.width);
    }
    if (options.guide) glyph = options.guide->apply(glyph);
    size_t fg = 0;
    for (auto v : glyph.values) fg += v;
    if (fg == 0 || fg == glyph.size()) {
      throw DegenerateGlyph(options.guide ? "extracted glyph is degenerate even with the mask applied"
                                          : "extracted glyph is degenerate; supply a mask");
    }
    r.glyph = glyph;
    return encode_distance_channels(glyph);
  };
  auto x = extract();
  std::int64_t done = 0;
  while (cfg.steps > 0 && run_epoch(r.state, x, y, cfg, true, done, r.reports)) {
    if (options.refresh_glyph) x = extract();
  }
  return r;
}

double heldout_spix(ModelSet& model, const GlyphImage& x, const RgbImage& y, int crop_size, int n, std::uint64_t seed) {
  Rng rng(seed);
  auto crops = crop_set(x, EffectsImage{y, "self", ""}, n, crop_size, rng);
  auto batch = to_batch(self_style_triplets(crops, model->stage, rng));
  EvalGuard guard(*model);
  torch::NoGradGuard no_grad;
  auto out = model->decode_styled(model->encode_content_x(batch.x), model->encode_style(batch.y_prime)).image;
  return l1(out, batch.y).item<double>();
}

}  // namespace tetgan
