#pragma once

#include <functional>
#include <optional>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "tetgan/dataset.hpp"
#include "tetgan/model.hpp"

namespace tetgan {

struct LossWeights {
  double rec = 100.0;
  double dfeat = 100.0;
  double dpix = 100.0;
  double dadv = 1.0;
  double spix = 100.0;
  double sadv = 1.0;
  double srec = 100.0;
  double gp = 10.0;
};

/// Unweighted loss terms of one step plus the two weighted totals.
/// `dadv_d` / `sadv_d` are the critic objectives (negated Wasserstein gap
/// plus lambda_gp times the penalty); `srec` is present only when the style
/// autoencoder term is active.
struct LossReport {
  double rec = 0, dfeat = 0, dpix = 0, dadv_g = 0, dadv_d = 0, spix = 0, sadv_g = 0, sadv_d = 0;
  std::optional<double> srec;
  double gp_x = 0, gp_y = 0, total_g = 0, total_d = 0;

  nlohmann::json to_json() const;
  bool finite() const;
  /// Recomputes total_g from the parts.
  double weighted_generator_total(const LossWeights& w) const;
  double weighted_critic_total(const LossWeights& w) const;
};

/// Images of one batch at the model's stage resolution, in [-1,1].
struct TripletBatch {
  torch::Tensor x;
  torch::Tensor y;
  torch::Tensor y_prime;
};

/// Mean absolute difference over all elements.
torch::Tensor l1(const torch::Tensor& a, const torch::Tensor& b);

/// Every generator-side forward pass one training step needs.
struct GeneratorPass {
  EncoderOutput content_x;           // E_X(x)
  EncoderOutput content_y;           // E^c_Y(y)
  torch::Tensor style_prime;         // E^s_Y(y')
  DecoderOutput reconstruction;      // G_X(E_X(x))
  DecoderOutput destylized;          // G_X(E^c_Y(y))
  DecoderOutput stylized;            // G_Y(E_X(x), E^s_Y(y'))
  std::optional<DecoderOutput> self_stylized;  // G_Y(E^c_Y(y), E^s_Y(y))
};

GeneratorPass run_generators(Networks& m, const TripletBatch& b, bool with_style_reconstruction);

/// Raw (unweighted) generator terms, and their weighted sum in `total`.
struct GeneratorTerms {
  torch::Tensor rec, dfeat, dpix, spix, dadv_g, sadv_g, srec, total;
};

GeneratorTerms generator_losses(Networks& m, const TripletBatch& b, const GeneratorPass& pass, const LossWeights& w);

struct CriticTerms {
  torch::Tensor gap_x, gap_y, gp_x, gp_y;
  torch::Tensor dadv_d, sadv_d;  // -gap + lambda_gp * gp
  torch::Tensor total;
};

/// Critic objectives on detached generator outputs.
CriticTerms critic_losses(Networks& m, const TripletBatch& b, const GeneratorPass& pass, const LossWeights& w,
                          Rng& rng);

using CriticFn = std::function<torch::Tensor(const torch::Tensor&)>;

/// Mean over the batch of (||grad critic(x_hat)||_2 - 1)^2 with
/// x_hat = eps * real + (1 - eps) * fake and eps ~ U[0,1) per element.
/// Patch score maps are averaged per sample before differentiation, and the
/// result stays differentiable w.r.t. the critic's parameters.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               Rng& rng);

// Weighted single-objective entry points.
torch::Tensor rec_loss(Networks& m, const torch::Tensor& x, const LossWeights& w = {});
torch::Tensor feat_loss(Networks& m, const torch::Tensor& x, const torch::Tensor& y, const LossWeights& w = {});
torch::Tensor dpix_loss(Networks& m, const torch::Tensor& x, const torch::Tensor& y, const LossWeights& w = {});
torch::Tensor spix_loss(Networks& m, const torch::Tensor& x, const torch::Tensor& y, const torch::Tensor& y_prime,
                        const LossWeights& w = {});
torch::Tensor srec_loss(Networks& m, const torch::Tensor& y, const LossWeights& w = {});

struct AdversarialLosses {
  torch::Tensor critic;     // -gap + lambda_gp * gp, minimized by the critic
  torch::Tensor generator;  // -E[D(fake)], minimized by the generator side
  torch::Tensor gap;        // E[D(real)] - E[D(fake)]
  torch::Tensor gp;
};

AdversarialLosses desty_adv_losses(Networks& m, const torch::Tensor& x, const torch::Tensor& y, Rng& rng,
                                   const LossWeights& w = {});
AdversarialLosses sty_adv_losses(Networks& m, const torch::Tensor& x, const torch::Tensor& y,
                                 const torch::Tensor& y_prime, Rng& rng, const LossWeights& w = {});

}  // namespace tetgan
