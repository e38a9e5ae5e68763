#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace tetgan {

enum class NormKind { batch, instance };

/// Architecture hyper-parameters. `channels` lists encoder widths per
/// resolution level from the full (max) resolution down to the bottleneck,
/// so its length is log2(max_resolution / bottleneck_resolution).
struct NetworkConfig {
  int base_resolution = 64;
  int max_resolution = 256;
  int bottleneck_resolution = 4;
  std::vector<int64_t> channels{64, 128, 256, 512, 512, 512};
  int shared_encoder_blocks = 2;
  int shared_decoder_blocks = 2;
  int64_t style_feature_channels = 512;
  int patchgan_blocks = 3;
  int64_t critic_channels = 64;
  NormKind content_x_norm = NormKind::batch;
  NormKind content_y_norm = NormKind::instance;
  NormKind style_norm = NormKind::batch;
  NormKind decoder_norm = NormKind::batch;

  int levels() const { return static_cast<int>(channels.size()); }
  /// Index of the outermost level active at `resolution` (0 = max_resolution).
  int first_level(int resolution) const;
  /// Levels whose encoder output feeds the matching decoder level.
  bool has_skip(int level) const;

  void validate() const;
  nlohmann::json to_json() const;
  static NetworkConfig from_json(const nlohmann::json& j);
  /// FNV-1a of the canonical JSON form, as 16 hex digits.
  std::string hash() const;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Batch or instance normalization with a learned affine transform.
struct Norm2dImpl : torch::nn::Module {
  Norm2dImpl(NormKind kind, int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

  NormKind kind;
  torch::nn::BatchNorm2d batch{nullptr};
  torch::nn::InstanceNorm2d instance{nullptr};
};
TORCH_MODULE(Norm2d);

struct EncoderOutput {
  torch::Tensor feature;
  /// Per-level block outputs; only levels with skips are populated.
  std::vector<torch::Tensor> skips;
};

/// Stack of stride-2 Convolution-Norm-ReLU blocks with one 1x1 input
/// projection per level for progressive entry.
struct EncoderImpl : torch::nn::Module {
  EncoderImpl(const NetworkConfig& cfg, NormKind norm, int64_t out_channels,
              const std::vector<torch::nn::Conv2d>& shared = {});
  EncoderOutput forward(const torch::Tensor& x, int first_level, double alpha);

  NetworkConfig cfg;
  std::vector<torch::nn::Conv2d> from_rgb;
  std::vector<torch::nn::Conv2d> convs;
  std::vector<Norm2d> norms;
};
TORCH_MODULE(Encoder);

struct DecoderOutput {
  torch::Tensor image;
  /// Activation after the last shared block.
  torch::Tensor shared_feature;
};

/// Stack of stride-2 Deconvolution-Norm-LeakyReLU blocks with a tanh output
/// projection per level. With `style_conditioned`, the innermost block acts
/// on the channel concatenation of content and style features, written as
/// deconv(content) + style_deconv(style) so the content half can be shared.
struct DecoderImpl : torch::nn::Module {
  DecoderImpl(const NetworkConfig& cfg, NormKind norm, bool style_conditioned,
              const std::vector<torch::nn::ConvTranspose2d>& shared = {});
  DecoderOutput forward(const EncoderOutput& content, const torch::Tensor& style, int first_level, double alpha);

  NetworkConfig cfg;
  std::vector<torch::nn::ConvTranspose2d> deconvs;
  std::vector<Norm2d> norms;
  std::vector<torch::nn::Conv2d> to_rgb;
  torch::nn::ConvTranspose2d style_deconv{nullptr};
};
TORCH_MODULE(Decoder);

/// PatchGAN critic without normalization and without output nonlinearity.
struct CriticImpl : torch::nn::Module {
  CriticImpl(const NetworkConfig& cfg, int64_t in_channels);
  torch::Tensor forward(const torch::Tensor& x, int entry, double alpha);

  NetworkConfig cfg;
  std::vector<torch::nn::Conv2d> from_rgb;
  std::vector<torch::nn::Conv2d> convs;
  torch::nn::Conv2d tail{nullptr};
  torch::nn::Conv2d out{nullptr};
};
TORCH_MODULE(Critic);

// ---------------------------------------------------------------------------
// The full network set
// ---------------------------------------------------------------------------

/// The mappings every objective is written against. ModelSetImpl implements
/// it; tests substitute analytic stand-ins.
class Networks {
 public:
  virtual ~Networks() = default;
  virtual EncoderOutput encode_content_x(const torch::Tensor& x) = 0;
  virtual EncoderOutput encode_content_y(const torch::Tensor& y) = 0;
  virtual torch::Tensor encode_style(const torch::Tensor& y) = 0;
  virtual DecoderOutput decode_glyph(const EncoderOutput& content) = 0;
  virtual DecoderOutput decode_styled(const EncoderOutput& content, const torch::Tensor& style) = 0;
  virtual torch::Tensor discriminate_x(const torch::Tensor& x_candidate, const torch::Tensor& y_condition) = 0;
  virtual torch::Tensor discriminate_y(const torch::Tensor& y_candidate, const torch::Tensor& x_condition,
                                       const torch::Tensor& y_prime_condition) = 0;
};

using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

/// Content encoders for glyph and effects images, style encoder, glyph and
/// effects decoders, and the two critics. The innermost convolutions of the
/// two content encoders and the innermost deconvolutions of the two decoders
/// are single modules registered in both owners.
struct ModelSetImpl : torch::nn::Module, Networks {
  explicit ModelSetImpl(NetworkConfig cfg);

  EncoderOutput encode_content_x(const torch::Tensor& x) override;
  EncoderOutput encode_content_y(const torch::Tensor& y) override;
  torch::Tensor encode_style(const torch::Tensor& y) override;
  DecoderOutput decode_glyph(const EncoderOutput& content) override;
  DecoderOutput decode_styled(const EncoderOutput& content, const torch::Tensor& style) override;
  /// Score map of a glyph candidate conditioned on its effects image.
  torch::Tensor discriminate_x(const torch::Tensor& x_candidate, const torch::Tensor& y_condition) override;
  /// Score map of an effects candidate conditioned on the glyph and the style example.
  torch::Tensor discriminate_y(const torch::Tensor& y_candidate, const torch::Tensor& x_condition,
                               const torch::Tensor& y_prime_condition) override;

  /// Activates the next outer level and starts its fade-in at alpha = 0.
  void grow();
  void set_fade_alpha(double alpha);

  /// Unique trainable tensors of encoders and decoders, in a stable order.
  NamedTensors generator_parameters() const;
  /// Unique trainable tensors of the critics.
  NamedTensors critic_parameters() const;
  /// Every unique parameter and buffer, keyed by stable names.
  NamedTensors state_tensors() const;
  /// (alias, canonical name) for every parameter reachable under two names.
  std::vector<std::pair<std::string, std::string>> sharing_table() const;

  void check_resolution(const torch::Tensor& t) const;
  int first_level() const { return config.first_level(stage); }

  NetworkConfig config;
  int stage;
  double fade_alpha = 1.0;

  Encoder content_x{nullptr};
  Encoder content_y{nullptr};
  Encoder style{nullptr};
  Decoder glyph_decoder{nullptr};
  Decoder effects_decoder{nullptr};
  Critic glyph_critic{nullptr};
  Critic effects_critic{nullptr};
};
TORCH_MODULE(ModelSet);

/// Builds all networks with weights drawn from normal(0, 0.02) under `seed`.
ModelSet build(const NetworkConfig& cfg, std::uint64_t seed);

/// Deep copy preserving the sharing topology.
ModelSet clone_model(const ModelSet& m);

/// Copies every state tensor of `src` into `dst` (configs must match).
void copy_state(const ModelSet& src, ModelSet& dst);

/// Nearest-neighbour 2x upsampling used by the fade-in blend.
torch::Tensor upsample2x(const torch::Tensor& x);

}  // namespace tetgan
