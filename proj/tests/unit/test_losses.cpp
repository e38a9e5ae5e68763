#include "doctest_torch.hpp"

#include "support.hpp"
#include "tetgan/losses.hpp"

using namespace tetgan;
using namespace tetgan::testing;

namespace {

// Encoders pass images through unchanged; decoders add constant offsets;
// critics are fixed linear maps. Everything is in double precision.
struct OffsetNetworks : Networks {
  double glyph_offset = 0.0;
  double effects_offset = 0.0;
  torch::Tensor wx, wy;

  EncoderOutput encode_content_x(const torch::Tensor& x) override { return {x, {}}; }
  EncoderOutput encode_content_y(const torch::Tensor& y) override { return {y, {}}; }
  torch::Tensor encode_style(const torch::Tensor& y) override { return y; }
  DecoderOutput decode_glyph(const EncoderOutput& c) override { return {c.feature + glyph_offset, c.feature}; }
  DecoderOutput decode_styled(const EncoderOutput& c, const torch::Tensor& s) override {
    return {0 * c.feature + s + effects_offset, c.feature};
  }
  torch::Tensor discriminate_x(const torch::Tensor& x, const torch::Tensor& y) override {
    return (torch::cat({x, y}, 1) * wx).sum({1, 2, 3}, true);
  }
  torch::Tensor discriminate_y(const torch::Tensor& y, const torch::Tensor& x, const torch::Tensor& yp) override {
    return (torch::cat({x, y, yp}, 1) * wy).sum({1, 2, 3}, true);
  }
};

const auto kDouble = torch::TensorOptions().dtype(torch::kDouble);

torch::Tensor rand_image(int b, int side) { return torch::rand({b, 3, side, side}, kDouble) * 2 - 1; }

// Smooth nonlinear patch critic for penalty checks.
torch::Tensor bumpy_critic(const torch::Tensor& z, const torch::Tensor& w) {
  return torch::tanh(z * w).pow(2).sum(1, true) + (z * w).sin();
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("l1") {
    auto a = torch::randn({2, 3, 4, 4}, kDouble);
    auto b = torch::randn({2, 3, 4, 4}, kDouble);
    CHECK(l1(a, a).item<double>() == 0.0);
    CHECK(l1(a, b).item<double>() == doctest::Approx(l1(b, a).item<double>()).epsilon(1e-15));
    CHECK(l1(a, b).item<double>() >= 0.0);
    CHECK_THROWS_AS(l1(a, b[0]), ValidationError);
  }

  TEST_CASE("constant plug-ins") {
    torch::manual_seed(1);
    OffsetNetworks m;
    auto x = rand_image(2, 8);
    auto y = x.clone();
    LossWeights w;
    CHECK(rec_loss(m, x, w).item<double>() == 0.0);
    CHECK(feat_loss(m, x, y, w).item<double>() == 0.0);
    CHECK(dpix_loss(m, x, y, w).item<double>() == 0.0);
    CHECK(spix_loss(m, x, y, y, w).item<double>() == 0.0);
    CHECK(srec_loss(m, y, w).item<double>() == 0.0);
    m.glyph_offset = 0.01;
    m.effects_offset = -0.02;
    CHECK(rec_loss(m, x, w).item<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dpix_loss(m, x, y, w).item<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spix_loss(m, x, y, y, w).item<double>() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(srec_loss(m, y, w).item<double>() == doctest::Approx(2.0).epsilon(1e-12));
    // The feature target ignores decoder offsets.
    CHECK(feat_loss(m, x, y, w).item<double>() == 0.0);
    LossWeights half = w;
    half.rec = 50;
    CHECK(rec_loss(m, x, half).item<double>() == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("adversarial terms with linear critics") {
    torch::manual_seed(2);
    OffsetNetworks m;
    m.wx = torch::zeros({1, 6, 8, 8}, kDouble);
    m.wy = torch::zeros({1, 9, 8, 8}, kDouble);
    auto x = rand_image(3, 8);
    auto y = rand_image(3, 8);
    Rng rng(4);
    LossWeights w;
    auto d = desty_adv_losses(m, x, y, rng, w);
    CHECK(d.gap.item<double>() == 0.0);
    CHECK(d.gp.item<double>() == doctest::Approx(1.0));
    CHECK(d.critic.item<double>() == doctest::Approx(w.gp));
    auto s = sty_adv_losses(m, x, y, y, rng, w);
    CHECK(s.gap.item<double>() == 0.0);
    CHECK(s.gp.item<double>() == doctest::Approx(1.0));

    // Perfect generator: fakes equal reals, so the gap vanishes for any critic.
    m.wy = torch::randn({1, 9, 8, 8}, kDouble);
    s = sty_adv_losses(m, x, y, y, rng, w);
    CHECK(std::abs(s.gap.item<double>()) < 1e-12);
  }

  TEST_CASE("gradient penalty of linear critics") {
    auto real = rand_image(4, 6);
    auto fake = rand_image(4, 6);
    Rng rng(5);
    for (double norm : {1.0, 3.0, 0.5}) {
      auto w = torch::randn({1, 3, 6, 6}, kDouble);
      w = w * (norm / w.norm().item<double>());
      auto critic = [&](const torch::Tensor& z) { return (z * w).sum({1, 2, 3}); };
      CHECK(gradient_penalty(critic, real, fake, rng).item<double>() == doctest::Approx((norm - 1) * (norm - 1)));
    }
    CHECK_THROWS_AS(gradient_penalty([](const torch::Tensor& z) { return z; }, real, fake[0], rng), ValidationError);
  }

  TEST_CASE("gradient penalty agrees with finite differences") {
    auto real = rand_image(2, 4);
    auto fake = rand_image(2, 4);
    auto w = torch::randn({1, 3, 4, 4}, kDouble);
    auto critic = [&](const torch::Tensor& z) { return bumpy_critic(z, w); };
    Rng rng(17);
    Rng replay = rng;
    const double gp = gradient_penalty(critic, real, fake, rng).item<double>();

    // Same interpolation points, numerically differentiated.
    double expected = 0;
    const double h = 1e-6;
    for (int b = 0; b < 2; ++b) {
      const double e = uniform01(replay);
      auto point = (e * real[b] + (1 - e) * fake[b]).unsqueeze(0).contiguous();
      auto score = [&](const torch::Tensor& z) { return critic(z).mean().item<double>(); };
      auto flat = point.view(-1);
      double sq = 0;
      for (int64_t i = 0; i < flat.numel(); ++i) {
        const double v = flat[i].item<double>();
        flat[i] = v + h;
        const double up = score(point);
        flat[i] = v - h;
        const double down = score(point);
        flat[i] = v;
        const double g = (up - down) / (2 * h);
        sq += g * g;
      }
      expected += (std::sqrt(sq) - 1) * (std::sqrt(sq) - 1) / 2;
    }
    CHECK(gp == doctest::Approx(expected).epsilon(1e-6));
  }

  TEST_CASE("gradient penalty is symmetric in distribution") {
    auto real = rand_image(1, 4);
    auto fake = rand_image(1, 4);
    auto w = torch::randn({1, 3, 4, 4}, kDouble) * 2;
    auto critic = [&](const torch::Tensor& z) { return bumpy_critic(z, w); };
    Rng rng(31);
    const int n = 1000;
    double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
    for (int i = 0; i < n; ++i) {
      const double a = gradient_penalty(critic, real, fake, rng).item<double>();
      const double b = gradient_penalty(critic, fake, real, rng).item<double>();
      s1 += a, q1 += a * a, s2 += b, q2 += b * b;
    }
    const double m1 = s1 / n, m2 = s2 / n;
    const double se = std::sqrt((q1 / n - m1 * m1) / n + (q2 / n - m2 * m2) / n);
    CHECK(se > 0);
    CHECK(std::abs(m1 - m2) <= 3 * se);
  }

  TEST_CASE("penalty is differentiable in the critic parameters") {
    auto real = rand_image(2, 4);
    auto fake = rand_image(2, 4);
    auto w = torch::randn({1, 3, 4, 4}, kDouble).requires_grad_(true);
    Rng rng(3);
    auto gp = gradient_penalty([&](const torch::Tensor& z) { return bumpy_critic(z, w); }, real, fake, rng);
    gp.backward();
    REQUIRE(w.grad().defined());
    CHECK(w.grad().abs().sum().item<double>() > 0);
  }

  TEST_CASE("feature loss does not reach the glyph encoder's own layers") {
    auto m = build(tiny_network(8), 3);
    auto b = random_batch(2, 8, 9);
    feat_loss(*m, b.x, b.y).backward();
    const int n = m->config.levels();
    auto zero_or_none = [](const torch::Tensor& g) { return !g.defined() || g.abs().max().item<float>() == 0.0f; };
    for (int l = 0; l < n - m->config.shared_encoder_blocks; ++l) {
      CHECK(zero_or_none(m->content_x->convs[l]->weight.grad()));
      CHECK(zero_or_none(m->content_x->norms[l]->batch->weight.grad()));
    }
    for (const auto& p : m->content_x->from_rgb) CHECK(zero_or_none(p->weight.grad()));
    // The shared block and the effects encoder do learn from it.
    CHECK_FALSE(zero_or_none(m->content_x->convs[n - 1]->weight.grad()));
    CHECK_FALSE(zero_or_none(m->content_y->convs[0]->weight.grad()));
  }

  TEST_CASE("generator total is the weighted sum of its terms") {
    auto m = build(tiny_network(8), 4);
    auto b = random_batch(3, 8, 2);
    LossWeights w;
    w.dadv = 0.7;
    w.srec = 30;
    for (bool srec : {false, true}) {
      auto pass = run_generators(*m, b, srec);
      auto t = generator_losses(*m, b, pass, w);
      double want = w.rec * t.rec.item<double>() + w.dfeat * t.dfeat.item<double>() + w.dpix * t.dpix.item<double>() +
                    w.dadv * t.dadv_g.item<double>() + w.spix * t.spix.item<double>() + w.sadv * t.sadv_g.item<double>();
      CHECK(t.srec.defined() == srec);
      if (srec) want += w.srec * t.srec.item<double>();
      CHECK(t.total.item<double>() == doctest::Approx(want).epsilon(1e-5));
      for (const auto* term : {&t.rec, &t.dfeat, &t.dpix, &t.spix}) CHECK(term->item<double>() >= 0);

      Rng rng(1);
      auto c = critic_losses(*m, b, pass, w, rng);
      CHECK(c.gp_x.item<double>() >= 0);
      CHECK(c.gp_y.item<double>() >= 0);
      CHECK(c.dadv_d.item<double>() == doctest::Approx(-c.gap_x.item<double>() + w.gp * c.gp_x.item<double>()));
      CHECK(c.total.item<double>() ==
            doctest::Approx(w.dadv * c.dadv_d.item<double>() + w.sadv * c.sadv_d.item<double>()));
    }
  }

  TEST_CASE("loss report serialization") {
    LossReport r;
    r.rec = 1;
    r.total_g = 2;
    auto j = r.to_json();
    CHECK(j.at("rec") == 1.0);
    CHECK_FALSE(j.contains("srec"));
    r.srec = 0.5;
    CHECK(r.to_json().at("srec") == 0.5);
    CHECK(r.finite());
    r.dpix = NAN;
    CHECK_FALSE(r.finite());
  }
}
