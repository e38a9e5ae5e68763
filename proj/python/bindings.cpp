// Python bindings. Images cross the boundary as uint8 numpy arrays: masks
// are (H, W) with values {0, 1}, color images are (H, W, 3).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tetgan/apps.hpp"
#include "tetgan/dataset.hpp"
#include "tetgan/log.hpp"
#include "tetgan/oneshot.hpp"
#include "tetgan/trainer.hpp"

namespace py = pybind11;
using namespace tetgan;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

GlyphMask to_mask(const U8Array& a) {
  if (a.ndim() != 2) throw ValidationError("mask must be a 2-D array");
  GlyphMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) m(x, y) = r(y, x) != 0;
  return m;
}

U8Array from_mask(const GlyphMask& m) {
  U8Array a({m.height, m.width});
  std::copy(m.values.begin(), m.values.end(), a.mutable_data());
  return a;
}

RgbImage to_rgb(const U8Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ValidationError("image must be an (H, W, 3) array");
  RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + img.data.size(), img.data.begin());
  return img;
}

U8Array from_rgb(const RgbImage& img) {
  U8Array a({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), a.mutable_data());
  return a;
}

GlyphImage to_glyph(const U8Array& a) {
  if (a.ndim() == 2) return encode_glyph(to_mask(a), false);
  GlyphImage g;
  g.rgb = to_rgb(a);
  return g;
}

OneShotConfig oneshot_config(std::int64_t steps, int crop_size, int crops, int batch, double lr, std::uint64_t seed) {
  OneShotConfig c;
  c.steps = steps;
  c.crop_size = crop_size;
  c.crops_per_epoch = crops;
  c.batch = batch;
  c.learning_rate = lr;
  c.seed = seed;
  return c;
}

/// A loaded network set in evaluation mode.
struct Model {
  ModelSet m{nullptr};

  static Model load(const std::filesystem::path& p) { return {load_model(p)}; }
  int stage() const { return m->stage; }
  std::string config() const { return m->config.to_json().dump(); }
  U8Array stylize(const U8Array& glyph, const U8Array& style) {
    return from_rgb(tetgan::stylize(m, to_glyph(glyph), to_rgb(style)));
  }
  U8Array destylize(const U8Array& style, bool strict) {
    return from_rgb(tetgan::destylize(m, to_rgb(style), {strict, 0.1}).rgb);
  }
  std::pair<U8Array, U8Array> exchange(const U8Array& a, const U8Array& b) {
    auto [x, y] = tetgan::exchange(m, to_rgb(a), to_rgb(b));
    return {from_rgb(x), from_rgb(y)};
  }
  U8Array interpolate(const U8Array& glyph, const std::vector<U8Array>& styles, const std::vector<double>& weights) {
    if (styles.size() != weights.size()) throw ValidationError("need one weight per style");
    std::vector<std::pair<RgbImage, double>> s;
    for (size_t i = 0; i < styles.size(); ++i) s.emplace_back(to_rgb(styles[i]), weights[i]);
    return from_rgb(tetgan::interpolate(m, to_glyph(glyph), s));
  }
  U8Array masked_stylize(const U8Array& style, const U8Array& glyph, const U8Array& strokes, std::int64_t steps,
                         int crop_size, int crops, int batch, double lr, std::uint64_t seed) {
    auto y = to_rgb(style);
    auto cfg = oneshot_config(steps, std::min(crop_size, y.width), crops, batch, lr, seed);
    cfg.mode = OneShotMode::unsupervised;
    return from_rgb(tetgan::masked_stylize(m, y, to_glyph(glyph), to_rgb(strokes), cfg));
  }
};

}  // namespace

PYBIND11_MODULE(_tetgan, mod) {
  mod.doc() = "Two-way text effects transfer";

  static py::exception<Error> error(mod, "Error", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(mod, "ValidationError", error.ptr());
  static py::exception<DegenerateGlyph> degenerate(mod, "DegenerateGlyph", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DegenerateGlyph& e) {
      py::set_error(degenerate, e.what());
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  mod.attr("CHECKPOINT_HEADER") = kCheckpointHeader;

  mod.def(
      "set_log_level", [](const std::string& level) { log::set_level(log::parse_level(level)); }, py::arg("level"));

  mod.def(
      "rasterize_glyph", [](const std::string& id, int size) { return from_mask(rasterize_glyph(id, size)); },
      py::arg("descriptor"), py::arg("size"), "Binary (H, W) mask of a built-in glyph or a glyph PNG.");
  mod.def("builtin_glyph_ids", &builtin_glyph_ids);

  mod.def(
      "distance_transform",
      [](const U8Array& mask, bool to_foreground) {
        auto d = distance_transform(to_mask(mask), to_foreground ? DistanceTarget::foreground : DistanceTarget::background);
        py::array_t<double> a({d.height, d.width});
        std::copy(d.values.begin(), d.values.end(), a.mutable_data());
        return a;
      },
      py::arg("mask"), py::arg("to_foreground") = true, "Euclidean distance of every pixel to the target set.");

  mod.def(
      "encode_glyph",
      [](const U8Array& mask, double radius) { return from_rgb(encode_distance_channels(to_mask(mask), radius).rgb); },
      py::arg("mask"), py::arg("saturation_radius") = 0.0, "Three-channel distance encoding of a mask.");

  mod.def(
      "synthesize_effects",
      [](const U8Array& glyph, std::uint64_t style_seed) {
        auto style = synthetic_style("style", style_seed);
        return from_rgb(synthesize_effects(to_glyph(glyph), style.foreground, style.background).rgb);
      },
      py::arg("glyph"), py::arg("style_seed"), "Renders a glyph (mask or encoded image) in a synthetic style.");

  mod.def(
      "generate_dataset",
      [](const std::filesystem::path& root, int styles, std::vector<std::string> glyphs, int size, std::uint64_t seed,
         std::vector<std::string> test) {
        GenerateOptions o{styles, std::move(glyphs), size, seed, {test.begin(), test.end()}};
        return generate_dataset(root, o).entry_count();
      },
      py::arg("root"), py::arg("styles"), py::arg("glyphs"), py::arg("size") = 320, py::arg("seed") = 0,
      py::arg("test") = std::vector<std::string>{}, "Writes a procedural dataset; returns the number of effects images.");

  mod.def(
      "train",
      [](const std::filesystem::path& data, const std::filesystem::path& out, const std::string& stages,
         const std::string& network, std::uint64_t seed) {
        TrainConfig c;
        c.stages = parse_stages(stages);
        const int max_res = c.stages.back().resolution;
        c.network = network == "desk" ? desk_network(max_res) : reference_network(max_res);
        c.seed = seed;
        py::gil_scoped_release release;
        return run(c, load_index(data).subset(false), {out, {}, {}, {}}).step;
      },
      py::arg("data"), py::arg("out"), py::arg("stages"), py::arg("network") = "desk", py::arg("seed") = 0,
      "Trains on a dataset directory; writes out/final.ckpt and out/metrics.jsonl. Returns the step count.");

  mod.def(
      "finetune",
      [](const std::filesystem::path& ckpt, const U8Array& style, std::optional<U8Array> glyph,
         const std::filesystem::path& out, std::int64_t steps, int crop_size, int crops, int batch, double lr,
         std::uint64_t seed) {
        auto model = load_model(ckpt);
        auto y = to_rgb(style);
        auto cfg = oneshot_config(steps, std::min(crop_size, y.width), crops, batch, lr, seed);
        std::optional<GlyphImage> x;
        if (glyph) x = to_glyph(*glyph);
        cfg.mode = x ? OneShotMode::supervised : OneShotMode::unsupervised;
        py::gil_scoped_release release;
        OneShotResult r = x ? finetune_supervised(model, *x, y, cfg) : finetune_unsupervised(model, y, cfg);
        save_checkpoint(r.state, out);
        std::vector<std::string> reports;
        for (const auto& rep : r.reports) reports.push_back(rep.to_json().dump());
        return reports;
      },
      py::arg("ckpt"), py::arg("style"), py::arg("glyph") = py::none(), py::arg("out"), py::arg("steps") = 300,
      py::arg("crop_size") = 256, py::arg("crops") = 64, py::arg("batch") = 8, py::arg("lr") = 2e-4,
      py::arg("seed") = 0,
      "One-shot finetuning (supervised when a glyph is given). Returns one JSON loss report per step.");

  py::class_<Model>(mod, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def_property_readonly("stage", &Model::stage)
      .def_property_readonly("config", &Model::config)
      .def("stylize", &Model::stylize, py::arg("glyph"), py::arg("style"))
      .def("destylize", &Model::destylize, py::arg("style"), py::arg("strict") = false)
      .def("exchange", &Model::exchange, py::arg("a"), py::arg("b"))
      .def("interpolate", &Model::interpolate, py::arg("glyph"), py::arg("styles"), py::arg("weights"))
      .def("masked_stylize", &Model::masked_stylize, py::arg("style"), py::arg("glyph"), py::arg("strokes"),
           py::arg("steps") = 300, py::arg("crop_size") = 256, py::arg("crops") = 64, py::arg("batch") = 8,
           py::arg("lr") = 2e-4, py::arg("seed") = 0);
}
