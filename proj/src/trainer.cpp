#include "tetgan/trainer.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "tetgan/log.hpp"

namespace tetgan {

int default_batch(int resolution) {
  if (resolution <= 64) return 32;
  if (resolution <= 128) return 16;
  return 8;
}

std::vector<StagePlan> parse_stages(const std::string& text) {
  std::vector<StagePlan> plan;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    std::vector<std::string> fields;
    std::stringstream parts(item);
    std::string f;
    while (std::getline(parts, f, ':')) fields.push_back(f);
    if (fields.size() < 2 || fields.size() > 3) throw ValidationError("bad stage '" + item + "', expected RES:STEPS[:BATCH]");
    try {
      StagePlan s;
      s.resolution = std::stoi(fields[0]);
      s.steps = std::stoll(fields[1]);
      s.batch = fields.size() == 3 ? std::stoi(fields[2]) : default_batch(s.resolution);
      plan.push_back(s);
    } catch (const std::logic_error&) {
      throw ValidationError("bad stage '" + item + "'");
    }
  }
  if (plan.empty()) throw ValidationError("empty stage plan");
  return plan;
}

namespace {

NetworkConfig tail_network(int max_resolution, const std::vector<int64_t>& widths, int64_t style, int64_t critic) {
  if (!std::has_single_bit(static_cast<unsigned>(max_resolution)) || max_resolution < 8) {
    throw ValidationError("max resolution must be a power of two >= 8");
  }
  NetworkConfig c;
  c.max_resolution = max_resolution;
  c.base_resolution = std::min(64, max_resolution);
  const int n = std::countr_zero(static_cast<unsigned>(max_resolution / c.bottleneck_resolution));
  if (n > static_cast<int>(widths.size())) throw ValidationError("max resolution above 256 has no default widths");
  c.channels.assign(widths.end() - n, widths.end());
  c.style_feature_channels = style;
  c.critic_channels = critic;
  return c;
}

}  // namespace

NetworkConfig reference_network(int max_resolution) {
  return tail_network(max_resolution, {64, 128, 256, 512, 512, 512}, 512, 64);
}

NetworkConfig desk_network(int max_resolution) {
  return tail_network(max_resolution, {16, 32, 64, 128, 128, 128}, 128, 32);
}

void TrainConfig::validate() const {
  network.validate();
  if (stages.empty()) throw ValidationError("empty stage plan");
  if (stages.front().resolution != network.base_resolution) {
    throw ValidationError("first stage must run at the base resolution " + std::to_string(network.base_resolution));
  }
  for (size_t i = 0; i < stages.size(); ++i) {
    if (i > 0 && stages[i].resolution != 2 * stages[i - 1].resolution) {
      throw ValidationError("stage resolutions must double from one stage to the next");
    }
    if (stages[i].resolution > network.max_resolution) throw ValidationError("stage above max resolution");
    if (stages[i].steps < 0 || stages[i].batch < 1) throw ValidationError("stage steps must be >= 0 and batch >= 1");
  }
  if (!(learning_rate > 0) || !(fade_fraction > 0 && fade_fraction <= 1) || critic_steps < 1) {
    throw ValidationError("invalid optimizer schedule");
  }
  if (crop_size != 0 && crop_size < stages.back().resolution) {
    throw ValidationError("crop size is below the last stage resolution");
  }
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : stages) st.push_back({{"resolution", s.resolution}, {"steps", s.steps}, {"batch", s.batch}});
  return {{"network", network.to_json()},
          {"stages", st},
          {"learning_rate", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"fade_fraction", fade_fraction},
          {"critic_steps", critic_steps},
          {"seed", seed},
          {"checkpoint_interval", checkpoint_interval},
          {"augment_probability", augment_probability},
          {"crop_size", crop_size},
          {"weights",
           {{"rec", weights.rec},
            {"dfeat", weights.dfeat},
            {"dpix", weights.dpix},
            {"dadv", weights.dadv},
            {"spix", weights.spix},
            {"sadv", weights.sadv},
            {"srec", weights.srec},
            {"gp", weights.gp}}}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.network = NetworkConfig::from_json(j.at("network"));
  c.stages.clear();
  for (const auto& s : j.at("stages")) c.stages.push_back({s.at("resolution"), s.at("steps"), s.at("batch")});
  c.learning_rate = j.at("learning_rate");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.fade_fraction = j.at("fade_fraction");
  c.critic_steps = j.at("critic_steps");
  c.seed = j.at("seed");
  c.checkpoint_interval = j.at("checkpoint_interval");
  c.augment_probability = j.at("augment_probability");
  c.crop_size = j.at("crop_size");
  const auto& w = j.at("weights");
  c.weights = {w.at("rec"), w.at("dfeat"), w.at("dpix"), w.at("dadv"), w.at("spix"), w.at("sadv"), w.at("srec"),
               w.at("gp")};
  return c;
}

namespace {

std::vector<torch::Tensor> tensors_of(const NamedTensors& named) {
  std::vector<torch::Tensor> out;
  out.reserve(named.size());
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

void attach_optimizers(TrainState& s) {
  auto opts = torch::optim::AdamOptions(s.config.learning_rate).betas({s.config.beta1, s.config.beta2});
  s.generator_optimizer = std::make_unique<torch::optim::Adam>(tensors_of(s.model->generator_parameters()), opts);
  s.critic_optimizer = std::make_unique<torch::optim::Adam>(tensors_of(s.model->critic_parameters()), opts);
}

double item(const torch::Tensor& t) { return t.defined() ? t.item<double>() : 0.0; }

void set_requires_grad(const NamedTensors& params, bool on) {
  for (const auto& [name, t] : params) t.requires_grad_(on);
}

// Drops lines written after the checkpoint was taken (e.g. by a run that died later).
void truncate_metrics(const std::filesystem::path& path, std::int64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::string kept, line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("step") || j["step"].get<std::int64_t>() > step) break;
    kept += line + '\n';
  }
  in.close();
  std::ofstream(path, std::ios::trunc) << kept;
}

}  // namespace

TrainState make_state(const TrainConfig& config) {
  config.validate();
  TrainState s;
  s.config = config;
  s.model = build(config.network, config.seed);
  s.rng.seed(mix_seed(config.seed, 1));
  attach_optimizers(s);
  return s;
}

TrainState make_state(const TrainConfig& config, const ModelSet& model) {
  if (config.network.hash() != model->config.hash()) throw ValidationError("config hash mismatch");
  TrainState s;
  s.config = config;
  s.model = clone_model(model);
  s.model->train();
  s.rng.seed(mix_seed(config.seed, 1));
  attach_optimizers(s);
  return s;
}

NonFiniteLoss::NonFiniteLoss(const std::string& phase, const nlohmann::json& d)
    : Error("non-finite loss in " + phase + " phase: " + d.dump()), diagnostics(d) {}

TripletBatch to_batch(const std::vector<TrainingTriplet>& triplets) {
  std::vector<const RgbImage*> xs, ys, yps;
  for (const auto& t : triplets) {
    xs.push_back(&t.x.rgb);
    ys.push_back(&t.y.rgb);
    yps.push_back(&t.y_prime.rgb);
  }
  return {stack_images(xs), stack_images(ys), stack_images(yps)};
}

TripletBatch sample_batch(TripletSampler& sampler, int batch, Rng& rng) {
  std::vector<TrainingTriplet> triplets;
  triplets.reserve(batch);
  for (int i = 0; i < batch; ++i) triplets.push_back(sampler.sample(rng));
  return to_batch(triplets);
}

void critic_phase(TrainState& s, const TripletBatch& b, const GeneratorPass& pass, LossReport& r) {
  for (int k = 0; k < s.config.critic_steps; ++k) {
    s.generator_optimizer->zero_grad();
    s.critic_optimizer->zero_grad();
    auto t = critic_losses(*s.model, b, pass, s.config.weights, s.rng);
    r.dadv_d = item(t.dadv_d);
    r.sadv_d = item(t.sadv_d);
    r.gp_x = item(t.gp_x);
    r.gp_y = item(t.gp_y);
    r.total_d = item(t.total);
    if (!std::isfinite(r.total_d)) throw NonFiniteLoss("critic", r.to_json());
    t.total.backward();
    s.critic_optimizer->step();
  }
}

void generator_phase(TrainState& s, const TripletBatch& b, const GeneratorPass& pass, LossReport& r) {
  s.generator_optimizer->zero_grad();
  s.critic_optimizer->zero_grad();
  const auto critics = s.model->critic_parameters();
  set_requires_grad(critics, false);
  try {
    auto t = generator_losses(*s.model, b, pass, s.config.weights);
    r.rec = item(t.rec);
    r.dfeat = item(t.dfeat);
    r.dpix = item(t.dpix);
    r.spix = item(t.spix);
    r.dadv_g = item(t.dadv_g);
    r.sadv_g = item(t.sadv_g);
    if (t.srec.defined()) r.srec = item(t.srec);
    r.total_g = item(t.total);
    if (!std::isfinite(r.total_g)) throw NonFiniteLoss("generator", r.to_json());
    t.total.backward();
  } catch (...) {
    set_requires_grad(critics, true);
    throw;
  }
  set_requires_grad(critics, true);
  s.generator_optimizer->step();
}

LossReport train_step(TrainState& s, const TripletBatch& b, bool style_reconstruction) {
  s.model->train();
  s.model->check_resolution(b.x);
  LossReport r;
  auto pass = run_generators(*s.model, b, style_reconstruction);
  critic_phase(s, b, pass, r);
  generator_phase(s, b, pass, r);
  if (!r.finite()) throw NonFiniteLoss("report", r.to_json());
  ++s.step;
  ++s.stage_step;
  return r;
}

double fade_alpha_for(const TrainConfig& c, int stage_index, std::int64_t stage_step) {
  if (stage_index == 0) return 1.0;
  const double span = c.fade_fraction * static_cast<double>(c.stages.at(stage_index).steps);
  if (span <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(stage_step) / span);
}

TrainState run(const TrainConfig& config, const DatasetIndex& index, const RunOptions& options) {
  config.validate();
  if (index.entry_count() == 0) throw ValidationError("empty dataset");
  std::filesystem::create_directories(options.out_dir);

  TrainState s = options.resume ? load_checkpoint(*options.resume, &config.network) : make_state(config);
  if (options.resume) {
    // Stage plan and optimizer settings come from the caller; progress from the checkpoint.
    s.config = config;
    if (s.stage_index >= static_cast<int>(config.stages.size()) ||
        s.model->stage != config.stages[s.stage_index].resolution) {
      throw ValidationError("checkpoint stage does not fit the stage plan");
    }
    log::info("resuming at step ", s.step, " (stage ", s.model->stage, ", step ", s.stage_step, " of stage)");
  }

  if (options.resume) truncate_metrics(options.out_dir / "metrics.jsonl", s.step);
  std::ofstream metrics(options.out_dir / "metrics.jsonl", options.resume ? std::ios::app : std::ios::trunc);
  if (!metrics) throw Error("cannot open metrics log in " + options.out_dir.string());

  while (true) {
    const StagePlan& plan = config.stages[s.stage_index];
    std::unique_ptr<TripletSampler> sampler;
    if (s.stage_step < plan.steps) {
      sampler = std::make_unique<TripletSampler>(index, plan.resolution, config.augment_probability, config.crop_size);
      log::info("stage ", plan.resolution, "x", plan.resolution, ": ", plan.steps, " steps, batch ", plan.batch);
    }
    while (s.stage_step < plan.steps) {
      if (options.stop_after && s.step >= *options.stop_after) return s;
      if (s.stage_index > 0) s.model->set_fade_alpha(fade_alpha_for(config, s.stage_index, s.stage_step));
      auto batch = sample_batch(*sampler, plan.batch, s.rng);
      auto report = train_step(s, batch);
      auto line = report.to_json();
      line["step"] = s.step;
      line["stage"] = s.model->stage;
      line["alpha"] = s.model->fade_alpha;
      metrics << line.dump() << '\n';
      metrics.flush();
      if (options.on_step) options.on_step(s, report);
      if (s.step % 50 == 0) log::info("step ", s.step, " total_g ", report.total_g, " total_d ", report.total_d);
      if (config.checkpoint_interval > 0 && s.step % config.checkpoint_interval == 0) {
        save_checkpoint(s, options.out_dir / ("step-" + std::to_string(s.step) + ".ckpt"));
      }
    }
    s.model->fade_alpha = 1.0;
    if (s.stage_index + 1 >= static_cast<int>(config.stages.size())) break;
    s.model->grow();
    ++s.stage_index;
    s.stage_step = 0;
  }
  save_checkpoint(s, options.out_dir / "final.ckpt");
  return s;
}

}  // namespace tetgan
