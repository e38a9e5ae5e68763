#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "tetgan/dataset.hpp"
#include "tetgan/losses.hpp"
#include "tetgan/model.hpp"

namespace tetgan {

struct StagePlan {
  int resolution = 64;
  std::int64_t steps = 0;
  int batch = 32;
};

/// Batch size of the reference schedule: 32, 16 and 8 for 64, 128 and 256.
int default_batch(int resolution);

/// Parses "64:S1,128:S2,256:S3"; an optional third field overrides the batch
/// size ("64:500:8").
std::vector<StagePlan> parse_stages(const std::string& text);

/// Reference widths: the innermost log2(max/4) entries of 64,128,256,512,512,512.
NetworkConfig reference_network(int max_resolution);
/// Narrow variant for CPU-sized experiments.
NetworkConfig desk_network(int max_resolution);

struct TrainConfig {
  NetworkConfig network = reference_network(256);
  std::vector<StagePlan> stages{{64, 0, 32}, {128, 0, 16}, {256, 0, 8}};
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  /// Portion of each post-first stage over which alpha ramps 0 -> 1.
  double fade_fraction = 0.5;
  int critic_steps = 1;
  std::uint64_t seed = 0;
  /// Steps between checkpoints written by run(); 0 writes only the final one.
  std::int64_t checkpoint_interval = 0;
  LossWeights weights;
  double augment_probability = kAugmentProbability;
  /// Training window cut from larger dataset images before downsampling
  /// (320 px sources give 256 px crops); 0 disables cropping.
  int crop_size = 256;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainState {
  TrainConfig config;
  ModelSet model{nullptr};
  std::unique_ptr<torch::optim::Adam> generator_optimizer;
  std::unique_ptr<torch::optim::Adam> critic_optimizer;
  std::int64_t step = 0;
  int stage_index = 0;
  std::int64_t stage_step = 0;
  Rng rng;
};

/// Fresh model (seeded from config.seed) and optimizers at the first stage.
TrainState make_state(const TrainConfig& config);
/// Wraps an existing model (deep-copied) with fresh optimizers.
TrainState make_state(const TrainConfig& config, const ModelSet& model);

/// Raised before any optimizer step when a loss is NaN or infinite.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(const std::string& phase, const nlohmann::json& diagnostics);
  nlohmann::json diagnostics;
};

/// Draws `batch` triplets and stacks them into tensors.
TripletBatch sample_batch(TripletSampler& sampler, int batch, Rng& rng);
TripletBatch to_batch(const std::vector<TrainingTriplet>& triplets);

/// Critic update on detached generator outputs. Fills the critic fields of `report`.
void critic_phase(TrainState& s, const TripletBatch& b, const GeneratorPass& pass, LossReport& report);
/// Encoder/decoder update with the critics frozen. Fills the generator fields of `report`.
void generator_phase(TrainState& s, const TripletBatch& b, const GeneratorPass& pass, LossReport& report);

/// One critic update followed by one generator update on the same batch.
/// `style_reconstruction` adds the style autoencoder term.
LossReport train_step(TrainState& s, const TripletBatch& b, bool style_reconstruction = false);

/// Alpha for step `stage_step` of stage `stage_index`.
double fade_alpha_for(const TrainConfig& c, int stage_index, std::int64_t stage_step);

struct RunOptions {
  std::filesystem::path out_dir;
  /// Continue from this checkpoint instead of a fresh model.
  std::optional<std::filesystem::path> resume;
  /// Stop after this many global steps (for interrupted-run tests).
  std::optional<std::int64_t> stop_after;
  /// Called after every step.
  std::function<void(const TrainState&, const LossReport&)> on_step;
};

/// Executes the stage plan on `index`, writing metrics.jsonl and checkpoints
/// into out_dir. Returns the state after the last step; the final
/// checkpoint is out_dir/final.ckpt.
TrainState run(const TrainConfig& config, const DatasetIndex& index, const RunOptions& options);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr const char* kCheckpointHeader = "TETGAN-CKPT-1";

/// Writes model tensors, optimizer moments, counters and rng state
/// atomically (temporary file then rename).
void save_checkpoint(const TrainState& s, const std::filesystem::path& path);

/// Restores a state. With `expected`, its config hash must match the stored one.
TrainState load_checkpoint(const std::filesystem::path& path, const NetworkConfig* expected = nullptr);

/// Loads only the networks, in evaluation mode.
ModelSet load_model(const std::filesystem::path& path);

}  // namespace tetgan
