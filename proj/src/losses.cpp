#include "tetgan/losses.hpp"

#include <cmath>

namespace tetgan {

nlohmann::json LossReport::to_json() const {
  nlohmann::json j{{"rec", rec},       {"dfeat", dfeat},   {"dpix", dpix},     {"dadv_g", dadv_g},
                   {"dadv_d", dadv_d}, {"spix", spix},     {"sadv_g", sadv_g}, {"sadv_d", sadv_d},
                   {"gp_x", gp_x},     {"gp_y", gp_y},     {"total_g", total_g}, {"total_d", total_d}};
  if (srec) j["srec"] = *srec;
  return j;
}

bool LossReport::finite() const {
  for (double v : {rec, dfeat, dpix, dadv_g, dadv_d, spix, sadv_g, sadv_d, gp_x, gp_y, total_g, total_d}) {
    if (!std::isfinite(v)) return false;
  }
  return !srec || std::isfinite(*srec);
}

double LossReport::weighted_generator_total(const LossWeights& w) const {
  double t = w.rec * rec + w.dfeat * dfeat + w.dpix * dpix + w.dadv * dadv_g + w.spix * spix + w.sadv * sadv_g;
  if (srec) t += w.srec * *srec;
  return t;
}

double LossReport::weighted_critic_total(const LossWeights& w) const { return w.dadv * dadv_d + w.sadv * sadv_d; }

torch::Tensor l1(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ValidationError("l1: shape mismatch");
  return (a - b).abs().mean();
}

GeneratorPass run_generators(Networks& m, const TripletBatch& b, bool with_style_reconstruction) {
  GeneratorPass p;
  p.content_x = m.encode_content_x(b.x);
  p.content_y = m.encode_content_y(b.y);
  p.style_prime = m.encode_style(b.y_prime);
  p.reconstruction = m.decode_glyph(p.content_x);
  p.destylized = m.decode_glyph(p.content_y);
  p.stylized = m.decode_styled(p.content_x, p.style_prime);
  if (with_style_reconstruction) p.self_stylized = m.decode_styled(p.content_y, m.encode_style(b.y));
  return p;
}

GeneratorTerms generator_losses(Networks& m, const TripletBatch& b, const GeneratorPass& pass, const LossWeights& w) {
  GeneratorTerms t;
  t.rec = l1(pass.reconstruction.image, b.x);
  // The autoencoder's shared feature is a fixed target for the destylizer.
  t.dfeat = l1(pass.destylized.shared_feature, pass.reconstruction.shared_feature.detach());
  t.dpix = l1(pass.destylized.image, b.x);
  t.spix = l1(pass.stylized.image, b.y);
  t.dadv_g = -m.discriminate_x(pass.destylized.image, b.y).mean();
  t.sadv_g = -m.discriminate_y(pass.stylized.image, b.x, b.y_prime).mean();
  t.total = w.rec * t.rec + w.dfeat * t.dfeat + w.dpix * t.dpix + w.dadv * t.dadv_g + w.spix * t.spix +
            w.sadv * t.sadv_g;
  if (pass.self_stylized) {
    t.srec = l1(pass.self_stylized->image, b.y);
    t.total = t.total + w.srec * t.srec;
  }
  return t;
}

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               Rng& rng) {
  if (real.sizes() != fake.sizes()) throw ValidationError("gradient_penalty: real/fake shape mismatch");
  const int64_t batch = real.size(0);
  std::vector<double> eps(batch);
  for (auto& e : eps) e = uniform01(rng);
  auto shape = std::vector<int64_t>(real.dim(), 1);
  shape[0] = batch;
  auto e = torch::tensor(eps, torch::TensorOptions().dtype(torch::kDouble)).to(real.dtype()).view(shape);
  auto x_hat = (e * real.detach() + (1 - e) * fake.detach()).requires_grad_(true);
  auto score = critic(x_hat).reshape({batch, -1}).mean(1).sum();
  auto grads = torch::autograd::grad({score}, {x_hat}, {}, /*retain_graph=*/true, /*create_graph=*/true,
                                     /*allow_unused=*/true);
  auto g = grads[0].defined() ? grads[0] : torch::zeros_like(x_hat);
  auto norm = g.reshape({batch, -1}).norm(2, 1);
  return (norm - 1).pow(2).mean();
}

CriticTerms critic_losses(Networks& m, const TripletBatch& b, const GeneratorPass& pass, const LossWeights& w,
                          Rng& rng) {
  CriticTerms t;
  auto fake_x = pass.destylized.image.detach();
  auto fake_y = pass.stylized.image.detach();

  t.gap_x = m.discriminate_x(b.x, b.y).mean() - m.discriminate_x(fake_x, b.y).mean();
  t.gp_x = gradient_penalty([&](const torch::Tensor& c) { return m.discriminate_x(c, b.y); }, b.x, fake_x, rng);
  t.dadv_d = -t.gap_x + w.gp * t.gp_x;

  t.gap_y = m.discriminate_y(b.y, b.x, b.y_prime).mean() - m.discriminate_y(fake_y, b.x, b.y_prime).mean();
  t.gp_y = gradient_penalty([&](const torch::Tensor& c) { return m.discriminate_y(c, b.x, b.y_prime); }, b.y, fake_y,
                            rng);
  t.sadv_d = -t.gap_y + w.gp * t.gp_y;

  t.total = w.dadv * t.dadv_d + w.sadv * t.sadv_d;
  return t;
}

torch::Tensor rec_loss(Networks& m, const torch::Tensor& x, const LossWeights& w) {
  return w.rec * l1(m.decode_glyph(m.encode_content_x(x)).image, x);
}

torch::Tensor feat_loss(Networks& m, const torch::Tensor& x, const torch::Tensor& y, const LossWeights& w) {
  auto z = m.decode_glyph(m.encode_content_x(x)).shared_feature.detach();
  return w.dfeat * l1(m.decode_glyph(m.encode_content_y(y)).shared_feature, z);
}

torch::Tensor dpix_loss(Networks& m, const torch::Tensor& x, const torch::Tensor& y, const LossWeights& w) {
  return w.dpix * l1(m.decode_glyph(m.encode_content_y(y)).image, x);
}

torch::Tensor spix_loss(Networks& m, const torch::Tensor& x, const torch::Tensor& y, const torch::Tensor& y_prime,
                        const LossWeights& w) {
  return w.spix * l1(m.decode_styled(m.encode_content_x(x), m.encode_style(y_prime)).image, y);
}

torch::Tensor srec_loss(Networks& m, const torch::Tensor& y, const LossWeights& w) {
  return w.srec * l1(m.decode_styled(m.encode_content_y(y), m.encode_style(y)).image, y);
}

AdversarialLosses desty_adv_losses(Networks& m, const torch::Tensor& x, const torch::Tensor& y, Rng& rng,
                                   const LossWeights& w) {
  auto fake = m.decode_glyph(m.encode_content_y(y)).image;
  AdversarialLosses out;
  out.gap = m.discriminate_x(x, y).mean() - m.discriminate_x(fake.detach(), y).mean();
  out.gp = gradient_penalty([&](const torch::Tensor& c) { return m.discriminate_x(c, y); }, x, fake, rng);
  out.critic = -out.gap + w.gp * out.gp;
  out.generator = -m.discriminate_x(fake, y).mean();
  return out;
}

AdversarialLosses sty_adv_losses(Networks& m, const torch::Tensor& x, const torch::Tensor& y,
                                 const torch::Tensor& y_prime, Rng& rng, const LossWeights& w) {
  auto fake = m.decode_styled(m.encode_content_x(x), m.encode_style(y_prime)).image;
  AdversarialLosses out;
  out.gap = m.discriminate_y(y, x, y_prime).mean() - m.discriminate_y(fake.detach(), x, y_prime).mean();
  out.gp = gradient_penalty([&](const torch::Tensor& c) { return m.discriminate_y(c, x, y_prime); }, y, fake, rng);
  out.critic = -out.gap + w.gp * out.gp;
  out.generator = -m.discriminate_y(fake, x, y_prime).mean();
  return out;
}

}  // namespace tetgan
