#pragma once

#include <filesystem>
#include <string>

#include <torch/torch.h>

#include "tetgan/dataset.hpp"
#include "tetgan/model.hpp"
#include "tetgan/trainer.hpp"

namespace tetgan::testing {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

/// Small network: base 8, max `max_resolution`, bottleneck 2.
NetworkConfig tiny_network(int max_resolution = 8);

/// Narrow single-stage network at 64, the smallest size the applications accept.
NetworkConfig narrow64();

/// TrainConfig over tiny_network with the given stage plan.
TrainConfig tiny_train(int max_resolution, std::vector<StagePlan> stages, std::uint64_t seed = 3);

/// Random batch in [-1,1] at `side`.
TripletBatch random_batch(int batch, int side, std::uint64_t seed);

/// Bitwise tensor equality (same dtype, shape and bytes).
bool same_bits(const torch::Tensor& a, const torch::Tensor& b);

/// True when every state tensor of both models is bitwise identical.
bool same_state(const ModelSet& a, const ModelSet& b);

/// Aligned glyph/effects pair of a built-in glyph in a synthetic style.
std::pair<GlyphImage, RgbImage> synthetic_pair(const std::string& glyph, std::uint64_t style_seed, int side);

/// Binary written by the tools target, for CLI tests.
std::filesystem::path cli_binary();

}  // namespace tetgan::testing
