// Command-line front end: dataset generation, training, one-shot finetuning
// and the inference applications.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tetgan/apps.hpp"
#include "tetgan/dataset.hpp"
#include "tetgan/log.hpp"
#include "tetgan/oneshot.hpp"
#include "tetgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace tetgan;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDegenerate = 3;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_weights(const std::string& s) {
  std::vector<double> out;
  for (const auto& w : split(s, ',')) {
    try {
      out.push_back(std::stod(w));
    } catch (const std::logic_error&) {
      throw ValidationError("bad weight '" + w + "'");
    }
  }
  return out;
}

/// A glyph PNG (its red channel is the mask) or a built-in glyph id.
GlyphImage load_glyph(const std::string& arg, int side) {
  GlyphMask mask;
  if (fs::exists(arg)) {
    auto img = read_png(arg);
    if (img.width != img.height) throw ValidationError("glyph image must be square");
    mask = GlyphMask(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) mask(x, y) = img.at(x, y, 0) >= 128;
  } else {
    mask = rasterize_glyph(arg, side);
  }
  auto g = encode_distance_channels(mask);
  g.glyph_id = fs::path(arg).stem().string();
  return g;
}

void save_glyph(const fs::path& out, const GlyphImage& g) { write_png(out, g.rgb); }

struct Options {
  bool strict = false;
  std::string log_level = "info";

  // dataset-gen
  int styles = 4;
  std::string glyphs = "A,B,C,D,E,F,G,H";
  std::string test_glyphs;
  int size = 320;
  std::uint64_t seed = 0;
  std::string out;

  // train
  std::string data;
  std::string stages = "64:1000";
  std::string resume;
  std::string network = "reference";
  std::int64_t checkpoint_interval = 0;
  int critic_steps = 1;
  int crop_size = 256;

  // finetune / apps
  std::string ckpt;
  std::string style;
  std::string style2;
  std::string out2;
  std::string glyph;
  std::string mask;
  std::string mode = "supervised";
  bool refresh_glyph = false;
  std::string style_list;
  std::string weights;
  OneShotConfig oneshot;
};

int cmd_dataset_gen(const Options& o) {
  GenerateOptions g;
  g.styles = o.styles;
  g.glyphs = split(o.glyphs, ',');
  g.size = o.size;
  g.seed = o.seed;
  for (const auto& t : split(o.test_glyphs, ',')) g.test_glyphs.insert(t);
  auto index = generate_dataset(o.out, g);
  log::info("wrote ", index.entry_count(), " effects images (", index.styles.size(), " styles) to ", o.out);
  return 0;
}

int cmd_train(const Options& o) {
  auto index = load_index(o.data).subset(false);
  TrainConfig c;
  c.stages = parse_stages(o.stages);
  const int max_res = c.stages.back().resolution;
  if (o.network == "reference") {
    c.network = reference_network(max_res);
  } else if (o.network == "desk") {
    c.network = desk_network(max_res);
  } else {
    throw ValidationError("unknown network preset '" + o.network + "'");
  }
  c.network.base_resolution = c.stages.front().resolution;
  c.seed = o.seed;
  c.checkpoint_interval = o.checkpoint_interval;
  c.critic_steps = o.critic_steps;
  c.crop_size = o.crop_size;
  RunOptions r;
  r.out_dir = o.out;
  if (!o.resume.empty()) r.resume = o.resume;
  auto s = run(c, index, r);
  log::info("finished at step ", s.step, "; checkpoint ", (fs::path(o.out) / "final.ckpt").string());
  return 0;
}

int cmd_finetune(const Options& o) {
  auto model = load_model(o.ckpt);
  auto y = read_png(o.style);
  OneShotConfig cfg = o.oneshot;
  cfg.crop_size = std::min(cfg.crop_size, y.width);
  OneShotResult result = [&] {
    if (o.mode == "supervised") {
      if (o.glyph.empty()) throw ValidationError("supervised mode requires --glyph");
      cfg.mode = OneShotMode::supervised;
      return finetune_supervised(model, load_glyph(o.glyph, y.width), y, cfg);
    }
    if (o.mode == "unsupervised") {
      cfg.mode = OneShotMode::unsupervised;
      UnsupervisedOptions u;
      u.refresh_glyph = o.refresh_glyph;
      if (!o.mask.empty()) u.guide = MaskGuide::from_strokes(read_png(o.mask));
      return finetune_unsupervised(model, y, cfg, u);
    }
    throw ValidationError("unknown mode '" + o.mode + "'");
  }();
  save_checkpoint(result.state, o.out);
  if (!result.reports.empty()) log::info("final spix ", result.reports.back().spix);
  return 0;
}

int cmd_stylize(const Options& o) {
  auto model = load_model(o.ckpt);
  auto y = read_png(o.style);
  write_png(o.out, stylize(model, load_glyph(o.glyph, y.width), y));
  return 0;
}

int cmd_destylize(const Options& o) {
  auto model = load_model(o.ckpt);
  save_glyph(o.out, destylize(model, read_png(o.style), {o.strict}));
  return 0;
}

int cmd_exchange(const Options& o) {
  auto model = load_model(o.ckpt);
  auto [a, b] = exchange(model, read_png(o.style), read_png(o.style2), {o.strict});
  write_png(o.out, a);
  write_png(o.out2, b);
  return 0;
}

int cmd_interpolate(const Options& o) {
  auto model = load_model(o.ckpt);
  auto paths = split(o.style_list, ',');
  auto w = o.weights.empty() ? std::vector<double>(paths.size(), 1.0) : parse_weights(o.weights);
  if (w.size() != paths.size()) throw ValidationError("--weights needs one weight per style");
  std::vector<std::pair<RgbImage, double>> styles;
  for (size_t i = 0; i < paths.size(); ++i) styles.emplace_back(read_png(paths[i]), w[i]);
  if (styles.empty()) throw ValidationError("empty style list");
  write_png(o.out, interpolate(model, load_glyph(o.glyph, styles.front().first.width), styles));
  return 0;
}

int cmd_masked_stylize(const Options& o) {
  auto model = load_model(o.ckpt);
  auto y = read_png(o.style);
  OneShotConfig cfg = o.oneshot;
  cfg.crop_size = std::min(cfg.crop_size, y.width);
  write_png(o.out, masked_stylize(model, y, load_glyph(o.glyph, y.width), read_png(o.mask), cfg, {o.strict}));
  return 0;
}

void add_oneshot_flags(CLI::App* c, Options& o) {
  c->add_option("--steps", o.oneshot.steps, "Finetuning steps")->capture_default_str();
  c->add_option("--crop-size", o.oneshot.crop_size, "Crop side (clamped to the example size)")->capture_default_str();
  c->add_option("--crops", o.oneshot.crops_per_epoch, "Crops per epoch")->capture_default_str();
  c->add_option("--batch", o.oneshot.batch, "Batch size")->capture_default_str();
  c->add_option("--lr", o.oneshot.learning_rate, "Learning rate")->capture_default_str();
  c->add_option("--seed", o.oneshot.seed, "Random seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-way text effects transfer"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("--strict", o.strict, "Treat degenerate glyphs as errors (exit code 3)");
  app.add_option("--log-level", o.log_level, "debug|info|warn|error|off")->capture_default_str();

  auto* gen = app.add_subcommand("dataset-gen", "Write a procedural glyph/effects dataset");
  gen->add_option("--styles", o.styles, "Number of synthetic styles")->capture_default_str();
  gen->add_option("--glyphs", o.glyphs, "Comma-separated built-in glyph ids")->capture_default_str();
  gen->add_option("--test", o.test_glyphs, "Comma-separated held-out glyph ids");
  gen->add_option("--size", o.size, "Image side")->capture_default_str();
  gen->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train from a dataset directory");
  train->add_option("--data", o.data, "Dataset directory")->required();
  train->add_option("--out", o.out, "Output directory")->required();
  train->add_option("--stages", o.stages, "RES:STEPS[:BATCH],...")->capture_default_str();
  train->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  train->add_option("--resume", o.resume, "Checkpoint to continue from");
  train->add_option("--network", o.network, "reference|desk channel widths")->capture_default_str();
  train->add_option("--checkpoint-interval", o.checkpoint_interval, "Steps between checkpoints")->capture_default_str();
  train->add_option("--critic-steps", o.critic_steps, "Critic updates per generator update")->capture_default_str();
  train->add_option("--crop-size", o.crop_size, "Training window cut from larger images (0 = none)")
      ->capture_default_str();

  auto* ft = app.add_subcommand("finetune", "One-shot finetuning on a new style");
  ft->add_option("--ckpt", o.ckpt, "Pretrained checkpoint")->required();
  ft->add_option("--style", o.style, "Effects image")->required();
  ft->add_option("--glyph", o.glyph, "Glyph image (supervised mode)");
  ft->add_option("--mask", o.mask, "Stroke mask: red = glyph, blue = background");
  ft->add_option("--mode", o.mode, "supervised|unsupervised")->capture_default_str();
  ft->add_flag("--refresh-glyph", o.refresh_glyph, "Re-extract the glyph every epoch (unsupervised)");
  ft->add_option("--out", o.out, "Output checkpoint")->required();
  add_oneshot_flags(ft, o);

  auto* sty = app.add_subcommand("stylize", "Render a glyph in the style of an example");
  sty->add_option("--ckpt", o.ckpt)->required();
  sty->add_option("--glyph", o.glyph, "Glyph image or built-in id")->required();
  sty->add_option("--style", o.style, "Style example")->required();
  sty->add_option("--out", o.out)->required();

  auto* desty = app.add_subcommand("destylize", "Recover the glyph of an effects image");
  desty->add_option("--ckpt", o.ckpt)->required();
  desty->add_option("--style", o.style, "Effects image")->required();
  desty->add_option("--out", o.out)->required();

  auto* ex = app.add_subcommand("exchange", "Swap the styles of two effects images");
  ex->add_option("--ckpt", o.ckpt)->required();
  ex->add_option("--style1", o.style, "First effects image")->required();
  ex->add_option("--style2", o.style2, "Second effects image")->required();
  ex->add_option("--out1", o.out, "First glyph in the second style")->required();
  ex->add_option("--out2", o.out2, "Second glyph in the first style")->required();

  auto* interp = app.add_subcommand("interpolate", "Blend several styles on one glyph");
  interp->add_option("--ckpt", o.ckpt)->required();
  interp->add_option("--glyph", o.glyph, "Glyph image or built-in id")->required();
  interp->add_option("--styles", o.style_list, "Comma-separated style examples")->required();
  interp->add_option("--weights", o.weights, "Comma-separated weights (normalized)");
  interp->add_option("--out", o.out)->required();

  auto* masked = app.add_subcommand("masked-stylize", "Unsupervised transfer guided by user strokes");
  masked->add_option("--ckpt", o.ckpt)->required();
  masked->add_option("--style", o.style, "Effects image")->required();
  masked->add_option("--glyph", o.glyph, "Target glyph image or built-in id")->required();
  masked->add_option("--mask", o.mask, "Stroke mask: red = glyph, blue = background")->required();
  masked->add_option("--out", o.out)->required();
  add_oneshot_flags(masked, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit cleanly; malformed arguments are validation errors.
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    log::set_level(log::parse_level(o.log_level));
    if (gen->parsed()) return cmd_dataset_gen(o);
    if (train->parsed()) return cmd_train(o);
    if (ft->parsed()) return cmd_finetune(o);
    if (sty->parsed()) return cmd_stylize(o);
    if (desty->parsed()) return cmd_destylize(o);
    if (ex->parsed()) return cmd_exchange(o);
    if (interp->parsed()) return cmd_interpolate(o);
    if (masked->parsed()) return cmd_masked_stylize(o);
  } catch (const DegenerateGlyph& e) {
    std::cerr << "error: " << e.what() << '\n';
    return o.strict ? kExitDegenerate : kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
