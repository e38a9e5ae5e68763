// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.
//
//   tetgan_acceptance [--only 1,2,...] [--work DIR] [--reuse]
//
// --reuse keeps a previously trained desk model in DIR instead of retraining.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include <torch/torch.h>

#include "tetgan/apps.hpp"
#include "tetgan/dataset.hpp"
#include "tetgan/log.hpp"
#include "tetgan/losses.hpp"
#include "tetgan/model.hpp"
#include "tetgan/oneshot.hpp"
#include "tetgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace tetgan;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

const std::vector<std::string> kDeskGlyphs{"A", "C", "E", "H", "K", "M", "R", "S"};
const std::set<std::string> kHeldOut{"R", "S"};
constexpr int kDeskSteps = 2000;
constexpr int kDeskBatch = 8;
constexpr int kOneShotSteps = 500;
constexpr int kOneShotBatch = 8;
constexpr int kOneShotSide = 128;
constexpr int kOneShotCrop = 96;

struct Work {
  fs::path dir;
  bool reuse = false;
  std::optional<DatasetIndex> desk_index;
  ModelSet desk_model{nullptr};
};

DatasetIndex& desk_dataset(Work& w) {
  if (!w.desk_index) {
    GenerateOptions g;
    g.styles = 4;
    g.glyphs = kDeskGlyphs;
    g.size = 64;
    g.seed = 2024;
    g.test_glyphs = kHeldOut;
    fs::remove_all(w.dir / "desk-data");
    w.desk_index = generate_dataset(w.dir / "desk-data", g);
  }
  return *w.desk_index;
}

TrainConfig desk_config() {
  TrainConfig c;
  c.network = desk_network(64);
  c.stages = {{64, kDeskSteps, kDeskBatch}};
  c.seed = 7;
  return c;
}

ModelSet& desk_model(Work& w) {
  if (w.desk_model) return w.desk_model;
  auto& index = desk_dataset(w);
  const auto ckpt = w.dir / "desk-run" / "final.ckpt";
  if (w.reuse && fs::exists(ckpt)) {
    w.desk_model = load_model(ckpt);
    return w.desk_model;
  }
  auto train_index = index.subset(false);
  RunOptions r;
  r.out_dir = w.dir / "desk-run";
  auto t0 = std::chrono::steady_clock::now();
  run(desk_config(), train_index, r);
  std::cout << "  (desk training: " << kDeskSteps << " steps in " << seconds_since(t0) << " s)\n";
  w.desk_model = load_model(ckpt);
  return w.desk_model;
}

/// A style outside the training set, on a glyph rendered at `side`.
struct NovelPair {
  GlyphImage x;
  RgbImage y;
};

NovelPair novel_pair(const std::string& glyph, std::uint64_t style_seed, int side) {
  auto x = encode_distance_channels(rasterize_glyph(glyph, side));
  x.glyph_id = glyph;
  auto style = synthetic_style("novel", style_seed);
  return {x, synthesize_effects(x, style.foreground, style.background).rgb};
}

// ---------------------------------------------------------------------------
// 1. Distance transform
// ---------------------------------------------------------------------------

DistanceField brute_distance(const GlyphMask& m, bool to_foreground) {
  DistanceField d(m.width, m.height, 0.0);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int v = 0; v < m.height; ++v)
        for (int u = 0; u < m.width; ++u)
          if ((m(u, v) != 0) == to_foreground) best = std::min(best, std::hypot(double(u - x), double(v - y)));
      d(x, y) = best;
    }
  }
  return d;
}

Outcome criterion_1(Work&) {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(11);
  int masks = 0;
  double worst = 0;
  while (masks < 150) {
    const int w = 1 + static_cast<int>(uniform_index(rng, 16));
    const int h = 1 + static_cast<int>(uniform_index(rng, 16));
    const double density = uniform01(rng);
    GlyphMask m(w, h);
    size_t fg = 0;
    for (auto& v : m.values) fg += (v = uniform01(rng) < density);
    if (fg == 0 || fg == m.size()) continue;
    for (bool to_fg : {true, false}) {
      auto fast = distance_transform(m, to_fg ? DistanceTarget::foreground : DistanceTarget::background);
      auto slow = brute_distance(m, to_fg);
      for (size_t i = 0; i < m.size(); ++i) worst = std::max(worst, std::abs(fast.values[i] - slow.values[i]));
    }
    ++masks;
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && t < 10.0, fmt("%.0f masks, max |error| %.2e, %.2f s", masks, worst, t)};
}

// ---------------------------------------------------------------------------
// 2. Loss oracles
// ---------------------------------------------------------------------------

/// Networks with prescribed outputs: decoders return fixed images and the
/// critics are linear maps w . concat(inputs) + b.
struct FixedNetworks : Networks {
  torch::Tensor glyph_out, destyled_out, styled_out, self_styled_out;
  torch::Tensor feat_x, feat_y;
  torch::Tensor wx, wy;
  double bias = 0;

  EncoderOutput encode_content_x(const torch::Tensor& x) override { return {x * 0 + 1, {}}; }
  EncoderOutput encode_content_y(const torch::Tensor& y) override { return {y * 0 - 1, {}}; }
  torch::Tensor encode_style(const torch::Tensor& y) override { return y; }
  DecoderOutput decode_glyph(const EncoderOutput& c) override {
    const bool from_x = c.feature.flatten()[0].item<double>() > 0;
    return from_x ? DecoderOutput{glyph_out, feat_x} : DecoderOutput{destyled_out, feat_y};
  }
  DecoderOutput decode_styled(const EncoderOutput& c, const torch::Tensor&) override {
    const bool from_x = c.feature.flatten()[0].item<double>() > 0;
    return {from_x ? styled_out : self_styled_out, {}};
  }
  torch::Tensor linear(const torch::Tensor& w, const torch::Tensor& z) {
    return ((z * w).flatten(1).sum(1) + bias).view({-1, 1, 1, 1});
  }
  torch::Tensor discriminate_x(const torch::Tensor& c, const torch::Tensor& y) override {
    return linear(wx, torch::cat({c, y}, 1));
  }
  torch::Tensor discriminate_y(const torch::Tensor& c, const torch::Tensor& x, const torch::Tensor& yp) override {
    return linear(wy, torch::cat({x, c, yp}, 1));
  }
};

double loop_l1(const torch::Tensor& a, const torch::Tensor& b) {
  auto pa = a.contiguous().to(torch::kDouble), pb = b.contiguous().to(torch::kDouble);
  const double* x = pa.data_ptr<double>();
  const double* y = pb.data_ptr<double>();
  double s = 0;
  for (int64_t i = 0; i < pa.numel(); ++i) s += std::abs(x[i] - y[i]);
  return s / static_cast<double>(pa.numel());
}

Outcome criterion_2(Work&) {
  torch::manual_seed(3);
  auto opt = torch::TensorOptions().dtype(torch::kDouble);
  const int64_t B = 3, S = 8;
  auto x = torch::rand({B, 3, S, S}, opt) * 2 - 1;
  auto y = torch::rand({B, 3, S, S}, opt) * 2 - 1;
  auto yp = torch::rand({B, 3, S, S}, opt) * 2 - 1;
  FixedNetworks m;
  m.glyph_out = torch::rand({B, 3, S, S}, opt);
  m.destyled_out = torch::rand({B, 3, S, S}, opt);
  m.styled_out = torch::rand({B, 3, S, S}, opt);
  m.self_styled_out = torch::rand({B, 3, S, S}, opt);
  m.feat_x = torch::randn({B, 5, 2, 2}, opt);
  m.feat_y = torch::randn({B, 5, 2, 2}, opt);
  m.wx = torch::randn({1, 6, S, S}, opt);
  m.wy = torch::randn({1, 9, S, S}, opt);
  LossWeights w;
  double worst = 0;
  auto check = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  check(rec_loss(m, x, w).item<double>(), 100 * loop_l1(m.glyph_out, x));
  check(feat_loss(m, x, y, w).item<double>(), 100 * loop_l1(m.feat_y, m.feat_x));
  check(dpix_loss(m, x, y, w).item<double>(), 100 * loop_l1(m.destyled_out, x));
  check(spix_loss(m, x, y, yp, w).item<double>(), 100 * loop_l1(m.styled_out, y));
  check(srec_loss(m, y, w).item<double>(), 100 * loop_l1(m.self_styled_out, y));

  // Hand constants: offset mocks give lambda * offset, perfect mocks give 0.
  double hand = 0;
  m.glyph_out = x + 0.01;
  hand = std::max(hand, std::abs(rec_loss(m, x, w).item<double>() - 1.0));
  m.destyled_out = x;
  hand = std::max(hand, std::abs(dpix_loss(m, x, y, w).item<double>()));
  m.styled_out = y - 0.02;
  hand = std::max(hand, std::abs(spix_loss(m, x, y, yp, w).item<double>() - 2.0));
  m.self_styled_out = y + 0.03;
  hand = std::max(hand, std::abs(srec_loss(m, y, w).item<double>() - 3.0));
  hand = std::max(hand, std::abs(l1(torch::tensor({1.0, 1.0}), torch::tensor({0.0, 3.0})).item<double>() - 1.5));

  // Linear critic with unit-free gradient norm 3 on the candidate: penalty (3-1)^2 = 4.
  Rng rng(5);
  auto wcand = torch::randn({1, 3, S, S}, opt);
  wcand = wcand * (3.0 / wcand.norm().item<double>());
  auto critic = [&](const torch::Tensor& z) { return (z * wcand).flatten(1).sum(1).view({-1, 1, 1, 1}); };
  const double gp = gradient_penalty(critic, x, y, rng).item<double>();

  // Constant critic: gap 0 and penalty 1.
  m.wx = torch::zeros({1, 6, S, S}, opt);
  m.bias = 0.7;
  auto adv = desty_adv_losses(m, x, y, rng, w);
  const double const_err =
      std::abs(adv.gap.item<double>()) + std::abs(adv.gp.item<double>() - 1.0) + std::abs(adv.critic.item<double>() - 10.0);

  const bool pass = worst <= 1e-9 && hand <= 1e-9 && std::abs(gp - 4.0) <= 1e-6 && const_err <= 1e-9;
  return {pass, fmt("max oracle error %.1e, hand-constant error %.1e, GP(|w|=3) = %.9f, constant-critic error %.1e",
                    worst, hand, gp, const_err)};
}

// ---------------------------------------------------------------------------
// 3. Gradient check on an 8x8 / 2-block model
// ---------------------------------------------------------------------------

NetworkConfig tiny_config(int max_resolution = 8) {
  NetworkConfig c;
  c.base_resolution = 8;
  c.max_resolution = max_resolution;
  c.bottleneck_resolution = 2;
  c.channels = max_resolution == 8 ? std::vector<int64_t>{4, 6} : std::vector<int64_t>{3, 4, 6};
  c.shared_encoder_blocks = 1;
  c.shared_decoder_blocks = 1;
  c.style_feature_channels = 3;
  c.patchgan_blocks = 1;
  c.critic_channels = 4;
  return c;
}

Outcome criterion_3(Work&) {
  auto model = build(tiny_config(), 17);
  model->to(torch::kDouble);
  model->train();
  torch::manual_seed(4);
  auto opt = torch::TensorOptions().dtype(torch::kDouble);
  TripletBatch b{torch::rand({2, 3, 8, 8}, opt) * 2 - 1, torch::rand({2, 3, 8, 8}, opt) * 2 - 1,
                 torch::rand({2, 3, 8, 8}, opt) * 2 - 1};
  LossWeights w;
  // The feature target is detached, so the oracle holds it at its value for the unperturbed parameters.
  torch::Tensor frozen_target;
  auto objective = [&] {
    auto pass = run_generators(*model, b, true);
    if (!frozen_target.defined()) frozen_target = pass.reconstruction.shared_feature.detach().clone();
    pass.reconstruction.shared_feature = frozen_target;
    return generator_losses(*model, b, pass, w).total;
  };
  auto params = model->generator_parameters();
  for (auto& [n, p] : params) p.mutable_grad() = torch::Tensor();
  objective().backward();

  Rng rng(23);
  int checked = 0, failed = 0;
  double worst = 0;
  const double h = 1e-6;
  while (checked < 24) {
    auto& [name, p] = params[uniform_index(rng, params.size())];
    const auto i = static_cast<int64_t>(uniform_index(rng, p.numel()));
    auto flat = p.detach().view(-1);
    // Parameters outside the graph (unused progressive paths) must show a zero numeric slope.
    const double analytic = p.grad().defined() ? p.grad().view(-1)[i].item<double>() : 0.0;
    const double orig = flat[i].item<double>();
    double up, down;
    {
      torch::NoGradGuard ng;
      flat[i] = orig + h;
      up = objective().item<double>();
      flat[i] = orig - h;
      down = objective().item<double>();
      flat[i] = orig;
    }
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    const double rel = scale < 1e-6 ? std::abs(analytic - numeric) : std::abs(analytic - numeric) / scale;
    worst = std::max(worst, rel);
    if (rel > 1e-2) ++failed;
    ++checked;
  }
  return {failed == 0, fmt("%.0f parameters, %.0f beyond 1e-2, worst relative error %.2e", checked, failed, worst)};
}

// ---------------------------------------------------------------------------
// 4. Architecture invariants
// ---------------------------------------------------------------------------

double max_shared_difference(const ModelSet& m) {
  double diff = 0;
  const int n = m->config.levels();
  for (int l = n - m->config.shared_encoder_blocks; l < n; ++l) {
    diff = std::max(diff, (m->content_x->convs[l]->weight - m->content_y->convs[l]->weight).abs().max().item<double>());
    if (m->content_x->convs[l]->weight.data_ptr() != m->content_y->convs[l]->weight.data_ptr()) diff = INFINITY;
  }
  for (int l = n - m->config.shared_decoder_blocks; l < n; ++l) {
    diff = std::max(diff, (m->glyph_decoder->deconvs[l]->weight - m->effects_decoder->deconvs[l]->weight)
                              .abs().max().item<double>());
    if (m->glyph_decoder->deconvs[l]->weight.data_ptr() != m->effects_decoder->deconvs[l]->weight.data_ptr()) {
      diff = INFINITY;
    }
  }
  return diff;
}

Outcome criterion_4(Work&) {
  std::vector<std::string> notes;
  bool pass = true;

  // Aliasing under training.
  TrainConfig tc;
  tc.network = tiny_config(16);
  tc.stages = {{8, 100, 4}};
  tc.seed = 3;
  auto s = make_state(tc);
  auto before = s.model->content_x->convs.back()->weight.clone();
  torch::manual_seed(9);
  for (int i = 0; i < 100; ++i) {
    TripletBatch b{torch::rand({4, 3, 8, 8}) * 2 - 1, torch::rand({4, 3, 8, 8}) * 2 - 1, torch::rand({4, 3, 8, 8}) * 2 - 1};
    train_step(s, b);
  }
  const double alias = max_shared_difference(s.model);
  const double moved = (s.model->content_x->convs.back()->weight - before).abs().max().item<double>();
  pass &= alias == 0.0 && moved > 0;
  notes.push_back(fmt("shared diff after 100 steps %.1e (weights moved %.1e)", alias, moved));

  // grow() preserves every tensor bit-exactly.
  auto snapshot = s.model->state_tensors();
  std::vector<torch::Tensor> copies;
  for (auto& [n, t] : snapshot) copies.push_back(t.clone());
  s.model->grow();
  bool preserved = s.model->stage == 16;
  auto after = s.model->state_tensors();
  for (size_t i = 0; i < copies.size(); ++i) preserved &= torch::equal(copies[i], after[i].second);
  pass &= preserved;
  notes.push_back(preserved ? "grow preserved all tensors" : "grow CHANGED tensors");

  // alpha = 0 reproduces the upsampled old path.
  s.model->eval();
  s.model->set_fade_alpha(0.0);
  torch::NoGradGuard ng;
  auto x16 = torch::rand({2, 3, 16, 16}) * 2 - 1;
  auto y16 = torch::rand({2, 3, 16, 16}) * 2 - 1;
  auto fresh_glyph = s.model->decode_glyph(s.model->encode_content_x(x16)).image;
  auto fresh_styled = s.model->decode_styled(s.model->encode_content_x(x16), s.model->encode_style(y16)).image;
  auto old = clone_model(s.model);
  old->eval();
  old->stage = 8;
  old->fade_alpha = 1.0;
  auto x8 = torch::nn::functional::avg_pool2d(x16, torch::nn::functional::AvgPool2dFuncOptions(2));
  auto y8 = torch::nn::functional::avg_pool2d(y16, torch::nn::functional::AvgPool2dFuncOptions(2));
  auto old_glyph = upsample2x(old->decode_glyph(old->encode_content_x(x8)).image);
  auto old_styled = upsample2x(old->decode_styled(old->encode_content_x(x8), old->encode_style(y8)).image);
  const double fade = std::max((fresh_glyph - old_glyph).abs().max().item<double>(),
                               (fresh_styled - old_styled).abs().max().item<double>());
  pass &= fade <= 1e-5;
  notes.push_back(fmt("alpha=0 vs upsampled old path %.1e", fade));

  std::string detail;
  for (size_t i = 0; i < notes.size(); ++i) detail += (i ? "; " : "") + notes[i];
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 5. Desk-scale end to end
// ---------------------------------------------------------------------------

Outcome criterion_5(Work& w) {
  auto& index = desk_dataset(w);
  auto& model = desk_model(w);
  TripletSampler sampler(index, 64, 0.0);
  double iou_sum = 0, l1_sum = 0;
  int n_iou = 0, n_l1 = 0;
  for (const auto& [style_id, entries] : index.styles) {
    const DatasetEntry* donor = nullptr;
    for (const auto& e : entries)
      if (!kHeldOut.count(e.glyph_id)) donor = &e;
    for (const auto& e : entries) {
      if (!kHeldOut.count(e.glyph_id)) continue;
      const auto& truth = sampler.glyph(e.glyph_id);
      const auto& effects = sampler.effects(style_id, e);
      iou_sum += iou(destylize_mask(model, effects.rgb), truth.mask());
      ++n_iou;
      auto out = stylize(model, truth, sampler.effects(style_id, *donor).rgb);
      l1_sum += l1(to_tensor(out), to_tensor(effects.rgb)).item<double>();
      ++n_l1;
    }
  }
  const double mean_iou = iou_sum / n_iou, mean_l1 = l1_sum / n_l1;
  return {mean_iou >= 0.85 && mean_l1 <= 0.10,
          fmt("held-out destylization IoU %.3f (>= 0.85), stylization L1 %.4f (<= 0.10) over %.0f pairs", mean_iou,
              mean_l1, n_iou)};
}

// ---------------------------------------------------------------------------
// 6. Supervised one-shot
// ---------------------------------------------------------------------------

OneShotConfig oneshot_config() {
  OneShotConfig c;
  c.crop_size = kOneShotCrop;
  c.crops_per_epoch = 32;
  c.steps = kOneShotSteps;
  c.batch = kOneShotBatch;
  c.seed = 99;
  return c;
}

Outcome criterion_6(Work& w) {
  auto& pretrained = desk_model(w);
  auto pair = novel_pair("S", 555, kOneShotSide);
  const std::uint64_t eval_seed = 4242;
  const int eval_crops = 32;
  const double before = heldout_spix(pretrained, pair.x, pair.y, kOneShotCrop, eval_crops, eval_seed);
  auto tuned = finetune_supervised(pretrained, pair.x, pair.y, oneshot_config());
  const double after = heldout_spix(tuned.state.model, pair.x, pair.y, kOneShotCrop, eval_crops, eval_seed);
  auto scratch_model = build(pretrained->config, 1234);
  auto scratch = finetune_supervised(scratch_model, pair.x, pair.y, oneshot_config());
  const double from_scratch = heldout_spix(scratch.state.model, pair.x, pair.y, kOneShotCrop, eval_crops, eval_seed);
  const double reduction = 1.0 - after / before;
  return {reduction >= 0.30 && from_scratch > after,
          fmt("held-out spix %.4f -> %.4f (reduction %.1f%%, need >= 30%%); from scratch %.4f", before, after,
              100 * reduction, from_scratch)};
}

// ---------------------------------------------------------------------------
// 7. Unsupervised one-shot
// ---------------------------------------------------------------------------

Outcome criterion_7(Work& w) {
  auto& pretrained = desk_model(w);
  auto pair = novel_pair("R", 777, kOneShotSide);
  auto cfg = oneshot_config();
  cfg.mode = OneShotMode::unsupervised;
  const double before = iou(destylize_mask(pretrained, pair.y), pair.x.mask());
  auto tuned = finetune_unsupervised(pretrained, pair.y, cfg);
  const double after = iou(destylize_mask(tuned.state.model, pair.y), pair.x.mask());
  return {after >= 0.7, fmt("extracted-glyph IoU %.3f before, %.3f after finetuning (>= 0.7)", before, after)};
}

// ---------------------------------------------------------------------------
// 8. Determinism and persistence
// ---------------------------------------------------------------------------

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> fa, fb;
  for (auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb || fa.empty()) return false;
  for (const auto& f : fa)
    if (file_bytes(a / f) != file_bytes(b / f)) return false;
  return true;
}

Outcome criterion_8(Work& w) {
  const auto root = w.dir / "determinism";
  fs::remove_all(root);
  GenerateOptions g;
  g.styles = 2;
  g.glyphs = {"A", "C", "E"};
  g.size = 128;
  g.seed = 31;
  auto index = generate_dataset(root / "data-1", g);
  generate_dataset(root / "data-2", g);
  const bool data_same = same_tree(root / "data-1", root / "data-2");

  TrainConfig c;
  c.network = desk_network(128);
  c.network.channels = {4, 8, 8, 16, 16};
  c.network.style_feature_channels = 16;
  c.network.critic_channels = 4;
  c.stages = {{64, 3, 2}, {128, 3, 2}};
  c.seed = 5;
  auto collect = [](std::vector<std::string>& out) {
    return [&out](const TrainState&, const LossReport& r) { out.push_back(r.to_json().dump()); };
  };
  std::vector<std::string> run_a, run_b, resumed;
  RunOptions ra{root / "run-a", {}, {}, collect(run_a)};
  RunOptions rb{root / "run-b", {}, {}, collect(run_b)};
  run(c, index, ra);
  run(c, index, rb);
  const bool ckpt_same = file_bytes(root / "run-a" / "final.ckpt") == file_bytes(root / "run-b" / "final.ckpt") &&
                         !run_a.empty();

  // Interrupt mid fade-in of the second stage, persist, and resume.
  std::vector<std::string> head;
  RunOptions rc{root / "run-c", {}, 4, collect(head)};
  auto partial = run(c, index, rc);
  save_checkpoint(partial, root / "run-c" / "interrupted.ckpt");
  RunOptions rd{root / "run-c", root / "run-c" / "interrupted.ckpt", {}, collect(resumed)};
  run(c, index, rd);
  head.insert(head.end(), resumed.begin(), resumed.end());
  const bool replay = head == run_a;
  const bool final_same = file_bytes(root / "run-c" / "final.ckpt") == file_bytes(root / "run-a" / "final.ckpt");

  return {data_same && ckpt_same && replay && final_same,
          std::string("dataset ") + (data_same ? "identical" : "DIFFERS") + ", checkpoints " +
              (ckpt_same ? "identical" : "DIFFER") + ", resumed reports " + (replay ? "identical" : "DIFFER") +
              ", resumed checkpoint " + (final_same ? "identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  Work work;
  work.dir = fs::temp_directory_path() / "tetgan-acceptance";
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (a == "--work" && i + 1 < argc) {
      work.dir = argv[++i];
    } else if (a == "--reuse") {
      work.reuse = true;
    } else {
      std::cerr << "usage: tetgan_acceptance [--only 1,2,...] [--work DIR] [--reuse]\n";
      return 2;
    }
  }
  fs::create_directories(work.dir);
  torch::set_num_threads(1);
  log::set_level(log::Level::error);

  const std::vector<std::pair<std::string, std::function<Outcome(Work&)>>> criteria{
      {"distance transform matches brute-force oracle", criterion_1},
      {"loss oracles and hand constants", criterion_2},
      {"gradient check, 8x8 two-block model", criterion_3},
      {"architecture invariants (aliasing, grow, fade)", criterion_4},
      {"desk-scale end to end", criterion_5},
      {"supervised one-shot finetuning", criterion_6},
      {"unsupervised one-shot glyph extraction", criterion_7},
      {"determinism and persistence", criterion_8},
  };
  int failures = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second(work);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << criteria[k].first << " | "
              << o.detail << " (" << fmt("%.1f", seconds_since(t0)) << " s)" << std::endl;
  }
  std::cout << (failures ? "acceptance: FAILED (" + std::to_string(failures) + ")" : std::string("acceptance: all passed"))
            << std::endl;
  return failures ? 1 : 0;
}
