#include "tetgan/apps.hpp"

#include "tetgan/log.hpp"

namespace tetgan {

torch::Tensor effects_input(const ModelSetImpl& m, const RgbImage& y) {
  if (y.width != y.height) throw ValidationError("effects image must be square");
  if (y.width < 64) throw ValidationError("resolution below 64");
  if (y.width == m.stage) return to_tensor(y).unsqueeze(0);
  log::warn("resizing ", y.width, "x", y.height, " input to the model resolution ", m.stage);
  return to_tensor(resize_bicubic(y, m.stage)).unsqueeze(0);
}

GlyphImage fit_glyph(const GlyphImage& x, int side) {
  if (x.side() == side) return x;
  auto g = encode_distance_channels(resize_mask(x.mask(), side), 0.0, DegeneratePolicy::saturate);
  g.glyph_id = x.glyph_id;
  return g;
}

torch::Tensor glyph_input(const ModelSetImpl& m, const GlyphImage& x) {
  if (x.rgb.width != x.rgb.height) throw ValidationError("glyph image must be square");
  if (x.side() < 64) throw ValidationError("resolution below 64");
  if (x.side() != m.stage) log::warn("resizing ", x.side(), "x", x.side(), " glyph to the model resolution ", m.stage);
  return to_tensor(fit_glyph(x, m.stage).rgb).unsqueeze(0);
}

GlyphMask binarize_glyph(const torch::Tensor& image) {
  auto t = image.dim() == 4 ? image[0] : image;
  if (t.dim() != 3) throw ValidationError("binarize_glyph expects [3,H,W]");
  auto r = (t[0] > 0).to(torch::kUInt8).contiguous();
  GlyphMask mask(static_cast<int>(r.size(1)), static_cast<int>(r.size(0)));
  std::memcpy(mask.values.data(), r.data_ptr<std::uint8_t>(), mask.size());
  return mask;
}

GlyphMask remove_small_components(const GlyphMask& mask, double min_fraction) {
  const int w = mask.width, h = mask.height;
  Grid<int> label(w, h, -1);
  std::vector<int> sizes;
  std::vector<std::pair<int, int>> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!mask(x0, y0) || label(x0, y0) >= 0) continue;
      const int id = static_cast<int>(sizes.size());
      int count = 0;
      stack.assign(1, {x0, y0});
      label(x0, y0) = id;
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        ++count;
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
          if (!mask(nx[k], ny[k]) || label(nx[k], ny[k]) >= 0) continue;
          label(nx[k], ny[k]) = id;
          stack.emplace_back(nx[k], ny[k]);
        }
      }
      sizes.push_back(count);
    }
  }
  if (sizes.empty()) return mask;
  const int largest = *std::max_element(sizes.begin(), sizes.end());
  GlyphMask out(w, h);
  for (size_t i = 0; i < out.size(); ++i) {
    const int id = label.values[i];
    out.values[i] = id >= 0 && sizes[id] >= min_fraction * largest ? 1 : 0;
  }
  return out;
}

GlyphImage encode_glyph(const GlyphMask& mask, bool strict) {
  size_t fg = 0;
  for (auto v : mask.values) fg += v;
  if (fg == 0 || fg == mask.size()) {
    const char* what = fg == 0 ? "no foreground" : "no background";
    if (strict) throw DegenerateGlyph(std::string("degenerate glyph: ") + what);
    log::warn("degenerate glyph: ", what);
  }
  return encode_distance_channels(mask, 0.0, DegeneratePolicy::saturate);
}

GlyphMask destylize_mask(ModelSet& m, const RgbImage& y, double min_component_fraction) {
  EvalGuard guard(*m);
  torch::NoGradGuard no_grad;
  auto out = m->decode_glyph(m->encode_content_y(effects_input(*m, y))).image;
  auto mask = remove_small_components(binarize_glyph(out), min_component_fraction);
  return mask.width == y.width ? mask : resize_mask(mask, y.width);
}

GlyphImage destylize(ModelSet& m, const RgbImage& y, const AppOptions& opts) {
  return encode_glyph(destylize_mask(m, y, opts.min_component_fraction), opts.strict);
}

namespace {

RgbImage to_output(const torch::Tensor& image, int side) {
  auto rgb = from_tensor(image);
  return rgb.width == side ? rgb : resize_bicubic(rgb, side);
}

}  // namespace

RgbImage stylize(ModelSet& m, const GlyphImage& x, const RgbImage& y_prime) {
  EvalGuard guard(*m);
  torch::NoGradGuard no_grad;
  auto content = m->encode_content_x(glyph_input(*m, x));
  auto style = m->encode_style(effects_input(*m, y_prime));
  return to_output(m->decode_styled(content, style).image, x.side());
}

std::pair<RgbImage, RgbImage> exchange(ModelSet& m, const RgbImage& y1, const RgbImage& y2, const AppOptions& opts) {
  auto x1 = destylize(m, y1, opts);
  auto x2 = destylize(m, y2, opts);
  return {stylize(m, x1, y2), stylize(m, x2, y1)};
}

RgbImage interpolate(ModelSet& m, const GlyphImage& x, const std::vector<std::pair<RgbImage, double>>& styles) {
  if (styles.empty()) throw ValidationError("empty style list");
  double sum = 0;
  for (const auto& [img, w] : styles) {
    if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("style weights must be nonnegative");
    sum += w;
  }
  if (sum <= 0) throw ValidationError("all style weights are zero");
  EvalGuard guard(*m);
  torch::NoGradGuard no_grad;
  auto content = m->encode_content_x(glyph_input(*m, x));
  torch::Tensor style;
  for (const auto& [img, w] : styles) {
    if (w == 0) continue;
    auto s = m->encode_style(effects_input(*m, img)) * (w / sum);
    style = style.defined() ? style + s : s;
  }
  return to_output(m->decode_styled(content, style).image, x.side());
}

RgbImage masked_stylize(const ModelSet& m, const RgbImage& y, const GlyphImage& x_target, const RgbImage& strokes,
                        const OneShotConfig& cfg, const AppOptions& opts) {
  if (strokes.width != y.width || strokes.height != y.height) throw ValidationError("mask size mismatch");
  UnsupervisedOptions u;
  u.guide = MaskGuide::from_strokes(strokes);
  OneShotConfig c = cfg;
  c.mode = OneShotMode::unsupervised;
  c.min_component_fraction = opts.min_component_fraction;
  auto result = finetune_unsupervised(m, y, c, u);
  return stylize(result.state.model, x_target, y);
}

double iou(const GlyphMask& a, const GlyphMask& b) {
  if (a.width != b.width || a.height != b.height) throw ValidationError("iou: size mismatch");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    inter += a.values[i] && b.values[i];
    uni += a.values[i] || b.values[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace tetgan
