#include "tetgan/model.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <bit>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "tetgan/image.hpp"

namespace tetgan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

bool power_of_two(int v) { return v > 0 && std::has_single_bit(static_cast<unsigned>(v)); }
int log2i(int v) { return std::countr_zero(static_cast<unsigned>(v)); }

const char* norm_name(NormKind k) { return k == NormKind::batch ? "batch" : "instance"; }
NormKind norm_from(const std::string& s) {
  if (s == "batch") return NormKind::batch;
  if (s == "instance") return NormKind::instance;
  throw ValidationError("unknown normalization '" + s + "'");
}

nn::Conv2d conv(int64_t in, int64_t out, int64_t k, int64_t stride, int64_t pad, bool bias = true) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding(pad).bias(bias));
}

nn::ConvTranspose2d deconv(int64_t in, int64_t out, bool bias = true) {
  return nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1).bias(bias));
}

torch::Tensor lrelu(const torch::Tensor& x) { return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2)); }

torch::Tensor blend(const torch::Tensor& fresh, const torch::Tensor& old, double alpha) {
  return fresh * alpha + old * (1.0 - alpha);
}

torch::Tensor downsample2x(const torch::Tensor& x) { return F::avg_pool2d(x, F::AvgPool2dFuncOptions(2)); }

NamedTensors unique_tensors(const std::vector<std::pair<std::string, torch::Tensor>>& all) {
  std::set<const void*> seen;
  NamedTensors out;
  for (const auto& [name, t] : all) {
    if (seen.insert(t.unsafeGetTensorImpl()).second) out.emplace_back(name, t);
  }
  return out;
}

NamedTensors prefixed(const std::string& prefix, const nn::Module& m) {
  NamedTensors out;
  for (const auto& p : m.named_parameters(true)) out.emplace_back(prefix + "." + p.key(), p.value());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// NetworkConfig
// ---------------------------------------------------------------------------

int NetworkConfig::first_level(int resolution) const {
  if (!power_of_two(resolution) || resolution < base_resolution || resolution > max_resolution) {
    throw ValidationError("resolution " + std::to_string(resolution) + " outside [" + std::to_string(base_resolution) +
                          ", " + std::to_string(max_resolution) + "]");
  }
  return log2i(max_resolution / resolution);
}

bool NetworkConfig::has_skip(int level) const {
  return level < levels() - 1 && level < levels() - shared_encoder_blocks;
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("inconsistent network config: " + m); };
  if (!power_of_two(base_resolution) || !power_of_two(max_resolution) || !power_of_two(bottleneck_resolution)) {
    fail("resolutions must be powers of two");
  }
  if (base_resolution > max_resolution) fail("base resolution exceeds max resolution");
  if (bottleneck_resolution >= base_resolution) fail("bottleneck must be below the base resolution");
  if (levels() != log2i(max_resolution / bottleneck_resolution)) {
    fail("channel schedule needs log2(max_resolution / bottleneck_resolution) entries");
  }
  const int base_levels = log2i(base_resolution / bottleneck_resolution);
  if (shared_encoder_blocks < 0 || shared_encoder_blocks >= base_levels) fail("shared encoder blocks");
  if (shared_decoder_blocks < 0 || shared_decoder_blocks >= base_levels) fail("shared decoder blocks");
  for (auto c : channels)
    if (c <= 0) fail("channel widths must be positive");
  if (style_feature_channels <= 0 || critic_channels <= 0) fail("channel widths must be positive");
  if (patchgan_blocks < 1 || (base_resolution >> patchgan_blocks) < 3) fail("too many PatchGAN blocks for base resolution");
}

nlohmann::json NetworkConfig::to_json() const {
  return {{"base_resolution", base_resolution},
          {"max_resolution", max_resolution},
          {"bottleneck_resolution", bottleneck_resolution},
          {"channels", channels},
          {"shared_encoder_blocks", shared_encoder_blocks},
          {"shared_decoder_blocks", shared_decoder_blocks},
          {"style_feature_channels", style_feature_channels},
          {"patchgan_blocks", patchgan_blocks},
          {"critic_channels", critic_channels},
          {"content_x_norm", norm_name(content_x_norm)},
          {"content_y_norm", norm_name(content_y_norm)},
          {"style_norm", norm_name(style_norm)},
          {"decoder_norm", norm_name(decoder_norm)}};
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.base_resolution = j.at("base_resolution");
  c.max_resolution = j.at("max_resolution");
  c.bottleneck_resolution = j.at("bottleneck_resolution");
  c.channels = j.at("channels").get<std::vector<int64_t>>();
  c.shared_encoder_blocks = j.at("shared_encoder_blocks");
  c.shared_decoder_blocks = j.at("shared_decoder_blocks");
  c.style_feature_channels = j.at("style_feature_channels");
  c.patchgan_blocks = j.at("patchgan_blocks");
  c.critic_channels = j.at("critic_channels");
  c.content_x_norm = norm_from(j.at("content_x_norm"));
  c.content_y_norm = norm_from(j.at("content_y_norm"));
  c.style_norm = norm_from(j.at("style_norm"));
  c.decoder_norm = norm_from(j.at("decoder_norm"));
  return c;
}

std::string NetworkConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

Norm2dImpl::Norm2dImpl(NormKind k, int64_t channels) : kind(k) {
  if (kind == NormKind::batch) {
    batch = register_module("batch", nn::BatchNorm2d(channels));
  } else {
    instance = register_module("instance", nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(true)));
  }
}

torch::Tensor Norm2dImpl::forward(const torch::Tensor& x) {
  return kind == NormKind::batch ? batch->forward(x) : instance->forward(x);
}

EncoderImpl::EncoderImpl(const NetworkConfig& c, NormKind norm, int64_t out_channels,
                         const std::vector<nn::Conv2d>& shared)
    : cfg(c) {
  const int n = cfg.levels();
  for (int l = 0; l < n; ++l) {
    const int64_t in = l == 0 ? cfg.channels[0] : cfg.channels[l - 1];
    const int64_t out = l == n - 1 ? out_channels : cfg.channels[l];
    const auto idx = std::to_string(l);
    from_rgb.push_back(register_module("from_rgb_" + idx, conv(3, in, 1, 1, 0)));
    const bool reuse = l < static_cast<int>(shared.size()) && !shared[l].is_empty();
    convs.push_back(register_module("conv_" + idx, reuse ? shared[l] : conv(in, out, 4, 2, 1)));
    norms.push_back(register_module("norm_" + idx, Norm2d(norm, out)));
  }
}

EncoderOutput EncoderImpl::forward(const torch::Tensor& x, int first, double alpha) {
  const int n = cfg.levels();
  EncoderOutput out;
  out.skips.resize(n);
  auto block = [&](int l, const torch::Tensor& h) {
    auto r = torch::relu(norms[l]->forward(convs[l]->forward(h)));
    if (cfg.has_skip(l)) out.skips[l] = r;
    return r;
  };
  torch::Tensor h;
  int start = first;
  if (alpha < 1.0 && first < n - 1) {
    auto fresh = block(first, from_rgb[first]->forward(x));
    auto old = from_rgb[first + 1]->forward(downsample2x(x));
    h = blend(fresh, old, alpha);
    start = first + 1;
  } else {
    h = from_rgb[first]->forward(x);
  }
  for (int l = start; l < n; ++l) h = block(l, h);
  out.feature = h;
  return out;
}

DecoderImpl::DecoderImpl(const NetworkConfig& c, NormKind norm, bool style_conditioned,
                         const std::vector<nn::ConvTranspose2d>& shared)
    : cfg(c) {
  const int n = cfg.levels();
  auto out_ch = [&](int l) { return l == 0 ? cfg.channels[0] : cfg.channels[l - 1]; };
  deconvs.resize(n, nn::ConvTranspose2d{nullptr});
  norms.resize(n, Norm2d{nullptr});
  to_rgb.resize(n, nn::Conv2d{nullptr});
  // Registered innermost first so names follow the order of evaluation.
  for (int l = n - 1; l >= 0; --l) {
    const int64_t in = (l == n - 1 ? cfg.channels[n - 1] : out_ch(l + 1)) + (cfg.has_skip(l) ? cfg.channels[l] : 0);
    const auto idx = std::to_string(l);
    const bool reuse = l < static_cast<int>(shared.size()) && !shared[l].is_empty();
    deconvs[l] = register_module("deconv_" + idx, reuse ? shared[l] : deconv(in, out_ch(l)));
    if (l == n - 1 && style_conditioned) {
      style_deconv = register_module("style_deconv", deconv(cfg.style_feature_channels, out_ch(l), false));
    }
    norms[l] = register_module("norm_" + idx, Norm2d(norm, out_ch(l)));
    to_rgb[l] = register_module("to_rgb_" + idx, conv(out_ch(l), 3, 1, 1, 0));
  }
}

DecoderOutput DecoderImpl::forward(const EncoderOutput& content, const torch::Tensor& style, int first,
                                   double alpha) {
  const int n = cfg.levels();
  const int last_shared = n - cfg.shared_decoder_blocks;
  DecoderOutput out;
  torch::Tensor h = content.feature;
  torch::Tensor previous;
  if (cfg.shared_decoder_blocks == 0) out.shared_feature = h;
  for (int l = n - 1; l >= first; --l) {
    auto in = cfg.has_skip(l) ? torch::cat({h, content.skips.at(l)}, 1) : h;
    auto z = deconvs[l]->forward(in);
    if (l == n - 1 && !style_deconv.is_empty()) {
      if (!style.defined()) throw ValidationError("style-conditioned decoder needs a style feature");
      z = z + style_deconv->forward(style);
    }
    previous = h;
    h = lrelu(norms[l]->forward(z));
    if (l == last_shared) out.shared_feature = h;
  }
  auto image = torch::tanh(to_rgb[first]->forward(h));
  if (alpha < 1.0 && first < n - 1) {
    auto old = upsample2x(torch::tanh(to_rgb[first + 1]->forward(previous)));
    image = blend(image, old, alpha);
  }
  out.image = image;
  return out;
}

CriticImpl::CriticImpl(const NetworkConfig& c, int64_t in_channels) : cfg(c) {
  const int grown = log2i(cfg.max_resolution / cfg.base_resolution);
  const int total = grown + cfg.patchgan_blocks;
  const int64_t d = cfg.critic_channels;
  auto width = [&](int k) { return k < grown ? d : d * std::min<int64_t>(int64_t{1} << (k - grown), 8); };
  for (int k = 0; k < total; ++k) {
    const int64_t in = k == 0 ? d : width(k - 1);
    const auto idx = std::to_string(k);
    if (k <= grown) from_rgb.push_back(register_module("from_rgb_" + idx, conv(in_channels, in, 1, 1, 0)));
    convs.push_back(register_module("conv_" + idx, conv(in, width(k), 4, 2, 1)));
  }
  const int64_t last = width(total - 1);
  const int64_t wide = std::min(last * 2, d * 8);
  tail = register_module("tail", conv(last, wide, 4, 1, 1));
  out = register_module("out", conv(wide, 1, 4, 1, 1));
}

torch::Tensor CriticImpl::forward(const torch::Tensor& x, int entry, double alpha) {
  const int grown = static_cast<int>(from_rgb.size()) - 1;
  const int total = static_cast<int>(convs.size());
  torch::Tensor h;
  int start = entry;
  if (alpha < 1.0 && entry < grown) {
    auto fresh = lrelu(convs[entry]->forward(from_rgb[entry]->forward(x)));
    auto old = from_rgb[entry + 1]->forward(downsample2x(x));
    h = blend(fresh, old, alpha);
    start = entry + 1;
  } else {
    h = from_rgb[entry]->forward(x);
  }
  for (int k = start; k < total; ++k) h = lrelu(convs[k]->forward(h));
  return out->forward(lrelu(tail->forward(h)));
}

torch::Tensor upsample2x(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kNearest)
                               .recompute_scale_factor(false));
}

// ---------------------------------------------------------------------------
// ModelSet
// ---------------------------------------------------------------------------

ModelSetImpl::ModelSetImpl(NetworkConfig cfg) : config(std::move(cfg)) {
  config.validate();
  stage = config.base_resolution;
  const int n = config.levels();
  const int64_t content_channels = config.channels[n - 1];

  content_x = register_module("content_x", Encoder(config, config.content_x_norm, content_channels));
  std::vector<nn::Conv2d> shared_convs(n, nn::Conv2d{nullptr});
  for (int l = n - config.shared_encoder_blocks; l < n; ++l) shared_convs[l] = content_x->convs[l];
  content_y = register_module("content_y", Encoder(config, config.content_y_norm, content_channels, shared_convs));
  style = register_module("style", Encoder(config, config.style_norm, config.style_feature_channels));

  glyph_decoder = register_module("glyph_decoder", Decoder(config, config.decoder_norm, false));
  std::vector<nn::ConvTranspose2d> shared_deconvs(n, nn::ConvTranspose2d{nullptr});
  for (int l = n - config.shared_decoder_blocks; l < n; ++l) shared_deconvs[l] = glyph_decoder->deconvs[l];
  effects_decoder = register_module("effects_decoder", Decoder(config, config.decoder_norm, true, shared_deconvs));

  glyph_critic = register_module("glyph_critic", Critic(config, 6));
  effects_critic = register_module("effects_critic", Critic(config, 9));
}

void ModelSetImpl::check_resolution(const torch::Tensor& t) const {
  if (t.dim() != 4 || t.size(1) != 3 || t.size(2) != stage || t.size(3) != stage) {
    throw ValidationError("resolution mismatch: expected [B,3," + std::to_string(stage) + "," + std::to_string(stage) +
                          "] input");
  }
}

EncoderOutput ModelSetImpl::encode_content_x(const torch::Tensor& x) {
  check_resolution(x);
  return content_x->forward(x, first_level(), fade_alpha);
}

EncoderOutput ModelSetImpl::encode_content_y(const torch::Tensor& y) {
  check_resolution(y);
  return content_y->forward(y, first_level(), fade_alpha);
}

torch::Tensor ModelSetImpl::encode_style(const torch::Tensor& y) {
  check_resolution(y);
  return style->forward(y, first_level(), fade_alpha).feature;
}

DecoderOutput ModelSetImpl::decode_glyph(const EncoderOutput& content) {
  return glyph_decoder->forward(content, {}, first_level(), fade_alpha);
}

DecoderOutput ModelSetImpl::decode_styled(const EncoderOutput& content, const torch::Tensor& s) {
  if (s.dim() != 4 || s.size(1) != config.style_feature_channels || s.size(2) != content.feature.size(2) ||
      s.size(3) != content.feature.size(3)) {
    throw ValidationError("style feature shape does not match the content feature");
  }
  return effects_decoder->forward(content, s, first_level(), fade_alpha);
}

torch::Tensor ModelSetImpl::discriminate_x(const torch::Tensor& x_candidate, const torch::Tensor& y_condition) {
  check_resolution(x_candidate);
  check_resolution(y_condition);
  return glyph_critic->forward(torch::cat({x_candidate, y_condition}, 1), first_level(), fade_alpha);
}

torch::Tensor ModelSetImpl::discriminate_y(const torch::Tensor& y_candidate, const torch::Tensor& x_condition,
                                           const torch::Tensor& y_prime_condition) {
  check_resolution(y_candidate);
  check_resolution(x_condition);
  check_resolution(y_prime_condition);
  return effects_critic->forward(torch::cat({x_condition, y_candidate, y_prime_condition}, 1), first_level(),
                                 fade_alpha);
}

void ModelSetImpl::grow() {
  if (stage >= config.max_resolution) throw ValidationError("already at max resolution");
  stage *= 2;
  fade_alpha = 0.0;
}

void ModelSetImpl::set_fade_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("fade alpha must lie in [0,1]");
  if (alpha < 1.0 && stage == config.base_resolution) throw ValidationError("no fade-in at the base resolution");
  fade_alpha = alpha;
}

NamedTensors ModelSetImpl::generator_parameters() const {
  NamedTensors all;
  for (const auto& [name, m] : std::initializer_list<std::pair<const char*, const nn::Module*>>{
           {"content_x", content_x.get()},
           {"content_y", content_y.get()},
           {"style", style.get()},
           {"glyph_decoder", glyph_decoder.get()},
           {"effects_decoder", effects_decoder.get()}}) {
    auto p = prefixed(name, *m);
    all.insert(all.end(), p.begin(), p.end());
  }
  return unique_tensors(all);
}

NamedTensors ModelSetImpl::critic_parameters() const {
  auto all = prefixed("glyph_critic", *glyph_critic);
  auto y = prefixed("effects_critic", *effects_critic);
  all.insert(all.end(), y.begin(), y.end());
  return unique_tensors(all);
}

NamedTensors ModelSetImpl::state_tensors() const {
  auto all = generator_parameters();
  auto critics = critic_parameters();
  all.insert(all.end(), critics.begin(), critics.end());
  NamedTensors buffers;
  for (const auto& b : named_buffers(true)) buffers.emplace_back(b.key(), b.value());
  all.insert(all.end(), buffers.begin(), buffers.end());
  return unique_tensors(all);
}

std::vector<std::pair<std::string, std::string>> ModelSetImpl::sharing_table() const {
  std::unordered_map<const void*, std::string> canonical;
  std::vector<std::pair<std::string, std::string>> table;
  for (const auto& p : named_parameters(true)) {
    auto [it, inserted] = canonical.emplace(p.value().unsafeGetTensorImpl(), p.key());
    if (!inserted) table.emplace_back(p.key(), it->second);
  }
  return table;
}

ModelSet build(const NetworkConfig& cfg, std::uint64_t seed) {
  ModelSet m(cfg);
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  torch::NoGradGuard no_grad;
  auto params = m->generator_parameters();
  auto critics = m->critic_parameters();
  params.insert(params.end(), critics.begin(), critics.end());
  for (auto& [name, t] : params) {
    if (t.dim() >= 2) {
      t.normal_(0.0, 0.02, gen);
    } else if (name.find(".norm_") != std::string::npos && name.ends_with(".weight")) {
      t.normal_(1.0, 0.02, gen);
    } else {
      t.zero_();
    }
  }
  return m;
}

void copy_state(const ModelSet& src, ModelSet& dst) {
  if (src->config.hash() != dst->config.hash()) throw ValidationError("config hash mismatch");
  torch::NoGradGuard no_grad;
  auto from = src->state_tensors();
  auto to = dst->state_tensors();
  if (from.size() != to.size()) throw Error("state tensor count mismatch");
  for (size_t i = 0; i < from.size(); ++i) {
    if (from[i].first != to[i].first) throw Error("state tensor order mismatch at " + from[i].first);
    to[i].second.copy_(from[i].second);
  }
  dst->stage = src->stage;
  dst->fade_alpha = src->fade_alpha;
}

ModelSet clone_model(const ModelSet& m) {
  ModelSet copy(m->config);
  copy_state(m, copy);
  copy->train(m->is_training());
  return copy;
}

}  // namespace tetgan
