#include <cstring>
#include <fstream>
#include <sstream>

#include "tetgan/trainer.hpp"

namespace tetgan {

namespace {

// Layout: header line, decimal JSON length line, JSON metadata, then the raw
// little-endian bytes of every tensor listed in metadata["tensors"].

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat: return "float32";
    case torch::kDouble: return "float64";
    case torch::kLong: return "int64";
    case torch::kInt: return "int32";
    default: throw Error(std::string("unsupported tensor dtype ") + c10::toString(t));
  }
}

torch::ScalarType dtype_from(const std::string& s) {
  if (s == "float32") return torch::kFloat;
  if (s == "float64") return torch::kDouble;
  if (s == "int64") return torch::kLong;
  if (s == "int32") return torch::kInt;
  throw Error("checkpoint: unknown dtype " + s);
}

struct Writer {
  nlohmann::json entries = nlohmann::json::array();
  std::vector<torch::Tensor> tensors;
  std::int64_t offset = 0;

  void add(const std::string& name, const torch::Tensor& t) {
    auto c = t.detach().contiguous().cpu();
    const auto bytes = static_cast<std::int64_t>(c.nbytes());
    entries.push_back({{"name", name}, {"dtype", dtype_name(c.scalar_type())}, {"shape", c.sizes().vec()},
                       {"offset", offset}, {"bytes", bytes}});
    offset += bytes;
    tensors.push_back(c);
  }
};

void add_adam(Writer& w, nlohmann::json& meta, const std::string& prefix, const torch::optim::Adam& opt,
              const NamedTensors& params) {
  nlohmann::json steps = nlohmann::json::object();
  const auto& state = opt.state();
  for (const auto& [name, p] : params) {
    auto it = state.find(p.unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& st = static_cast<const torch::optim::AdamParamState&>(*it->second);
    steps[name] = st.step();
    w.add(prefix + "/" + name + "/exp_avg", st.exp_avg());
    w.add(prefix + "/" + name + "/exp_avg_sq", st.exp_avg_sq());
    if (st.max_exp_avg_sq().defined()) w.add(prefix + "/" + name + "/max_exp_avg_sq", st.max_exp_avg_sq());
  }
  meta[prefix] = steps;
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_adam(torch::optim::Adam& opt, const nlohmann::json& steps, const std::string& prefix,
                  const NamedTensors& params, const std::map<std::string, torch::Tensor>& blobs) {
  auto& state = opt.state();
  state.clear();
  for (const auto& [name, p] : params) {
    if (!steps.contains(name)) continue;
    auto st = std::make_unique<torch::optim::AdamParamState>();
    st->step(steps.at(name).get<std::int64_t>());
    st->exp_avg(blobs.at(prefix + "/" + name + "/exp_avg").clone());
    st->exp_avg_sq(blobs.at(prefix + "/" + name + "/exp_avg_sq").clone());
    auto m = blobs.find(prefix + "/" + name + "/max_exp_avg_sq");
    if (m != blobs.end()) st->max_exp_avg_sq(m->second.clone());
    state[p.unsafeGetTensorImpl()] = std::move(st);
  }
}

}  // namespace

void save_checkpoint(const TrainState& s, const std::filesystem::path& path) {
  Writer w;
  nlohmann::json meta;
  meta["config"] = s.model->config.to_json();
  meta["config_hash"] = s.model->config.hash();
  meta["train_config"] = s.config.to_json();
  meta["stage"] = s.model->stage;
  meta["fade_alpha"] = s.model->fade_alpha;
  meta["step"] = s.step;
  meta["stage_index"] = s.stage_index;
  meta["stage_step"] = s.stage_step;
  meta["rng"] = rng_state(s.rng);
  meta["sharing"] = s.model->sharing_table();
  for (const auto& [name, t] : s.model->state_tensors()) w.add("model/" + name, t);
  if (s.generator_optimizer) add_adam(w, meta, "adam_generator", *s.generator_optimizer, s.model->generator_parameters());
  if (s.critic_optimizer) add_adam(w, meta, "adam_critic", *s.critic_optimizer, s.model->critic_parameters());
  meta["tensors"] = w.entries;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    const auto text = meta.dump();
    out << kCheckpointHeader << '\n' << text.size() << '\n' << text;
    for (const auto& t : w.tensors) out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

struct Loaded {
  nlohmann::json meta;
  std::map<std::string, torch::Tensor> blobs;
};

Loaded read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  std::string header, length;
  if (!std::getline(in, header) || header != kCheckpointHeader) throw ValidationError("not a TETGAN checkpoint");
  if (!std::getline(in, length)) throw ValidationError("truncated checkpoint");
  Loaded l;
  try {
    std::string text(std::stoull(length), '\0');
    in.read(text.data(), static_cast<std::streamsize>(text.size()));
    l.meta = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  const auto base = in.tellg();
  for (const auto& e : l.meta.at("tensors")) {
    auto t = torch::empty(e.at("shape").get<std::vector<std::int64_t>>(),
                          torch::TensorOptions().dtype(dtype_from(e.at("dtype"))));
    const auto bytes = e.at("bytes").get<std::int64_t>();
    if (bytes != static_cast<std::int64_t>(t.nbytes())) throw ValidationError("corrupt checkpoint tensor size");
    in.seekg(base + static_cast<std::streamoff>(e.at("offset").get<std::int64_t>()));
    in.read(static_cast<char*>(t.data_ptr()), bytes);
    if (!in) throw ValidationError("truncated checkpoint");
    l.blobs.emplace(e.at("name").get<std::string>(), t);
  }
  return l;
}

ModelSet restore_model(const Loaded& l, const NetworkConfig* expected) {
  auto cfg = NetworkConfig::from_json(l.meta.at("config"));
  if (cfg.hash() != l.meta.at("config_hash").get<std::string>()) throw ValidationError("config hash mismatch");
  if (expected && expected->hash() != cfg.hash()) throw ValidationError("config hash mismatch");
  ModelSet m(cfg);
  torch::NoGradGuard no_grad;
  for (auto& [name, t] : m->state_tensors()) {
    auto it = l.blobs.find("model/" + name);
    if (it == l.blobs.end()) throw ValidationError("checkpoint lacks tensor " + name);
    if (it->second.sizes() != t.sizes()) throw ValidationError("checkpoint shape mismatch for " + name);
    t.copy_(it->second);
  }
  m->stage = l.meta.at("stage");
  cfg.first_level(m->stage);
  m->fade_alpha = l.meta.at("fade_alpha");
  return m;
}

}  // namespace

TrainState load_checkpoint(const std::filesystem::path& path, const NetworkConfig* expected) {
  auto l = read_file(path);
  TrainState s;
  s.model = restore_model(l, expected);
  s.config = TrainConfig::from_json(l.meta.at("train_config"));
  s.step = l.meta.at("step");
  s.stage_index = l.meta.at("stage_index");
  s.stage_step = l.meta.at("stage_step");
  std::istringstream rs(l.meta.at("rng").get<std::string>());
  rs >> s.rng;
  auto opts = torch::optim::AdamOptions(s.config.learning_rate).betas({s.config.beta1, s.config.beta2});
  auto gp = s.model->generator_parameters();
  auto cp = s.model->critic_parameters();
  std::vector<torch::Tensor> gt, ct;
  for (auto& [n, t] : gp) gt.push_back(t);
  for (auto& [n, t] : cp) ct.push_back(t);
  s.generator_optimizer = std::make_unique<torch::optim::Adam>(gt, opts);
  s.critic_optimizer = std::make_unique<torch::optim::Adam>(ct, opts);
  if (l.meta.contains("adam_generator")) restore_adam(*s.generator_optimizer, l.meta["adam_generator"], "adam_generator", gp, l.blobs);
  if (l.meta.contains("adam_critic")) restore_adam(*s.critic_optimizer, l.meta["adam_critic"], "adam_critic", cp, l.blobs);
  s.model->train();
  return s;
}

ModelSet load_model(const std::filesystem::path& path) {
  auto m = restore_model(read_file(path), nullptr);
  m->eval();
  return m;
}

}  // namespace tetgan
