#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "snce/gradcheck.hpp"
#include "snce/nce_loss.hpp"

using namespace snce;

namespace {

using Vec = std::vector<double>;

Vec random_vec(std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec v(kEmbeddingDim);
  for (auto& x : v) x = n(gen);
  return v;
}

Vec axis(double value) {
  Vec v(kEmbeddingDim, 0.0);
  v[0] = value;
  return v;
}

/// Scene with a primary and four neighbors, all present for 12 frames.
Sample five_agent_sample() {
  std::vector<TrackRecord> r;
  for (std::int64_t f = 0; f < 12; ++f) {
    for (std::int64_t a = 0; a < 5; ++a) r.push_back({f, a, 0.3 * f + a, 1.5 * a - 0.1 * f});
  }
  return Sample{build_scene(r, 0.4), 0, 8, 4, 0};
}

}  // namespace

TEST_CASE("identical keys give ln(N + 1)") {
  std::mt19937_64 gen(1);
  const Vec q = random_vec(gen);
  const Vec k = random_vec(gen);
  for (std::size_t n : {1u, 7u, 32u}) {
    const std::vector<Vec> negs(n, k);
    CHECK(infonce(q, k, negs, 0.1).loss == doctest::Approx(std::log(n + 1.0)).epsilon(1e-13));
  }
}

TEST_CASE("no negatives gives zero loss") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = infonce(random_vec(gen, 10.0), random_vec(gen), {}, 0.1);
    CHECK(t.loss == 0.0);
    CHECK(t.positive_probability == 1.0);
    for (double g : t.grad_query) CHECK(g == 0.0);
  }
}

TEST_CASE("hand example: ln(1 + e^-2)") {
  const auto t = infonce(axis(1.0), axis(1.0), {axis(-1.0)}, 1.0);
  CHECK(t.loss == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-14));
  CHECK(t.loss == doctest::Approx(0.1269).epsilon(1e-3));
}

TEST_CASE("property: probabilities, loss consistency and strict positivity") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec q = random_vec(gen, 2.0);
    const Vec pos = random_vec(gen, 2.0);
    std::vector<Vec> negs;
    const std::size_t n = 1 + gen() % 40;
    for (std::size_t j = 0; j < n; ++j) negs.push_back(random_vec(gen, 2.0));
    const auto t = infonce(q, pos, negs, 0.1 + 0.4 * (trial % 5));
    const double total = std::accumulate(t.probabilities.begin(), t.probabilities.end(), 0.0);
    CHECK(std::abs(total - 1.0) < 1e-12);
    if (t.positive_probability > 1e-300) CHECK(std::abs(t.loss + std::log(t.positive_probability)) < 1e-12);
    // Strictly positive until the positive key saturates the softmax in double precision.
    CHECK(t.loss >= 0.0);
    if (t.positive_probability < 1.0 - 1e-12) CHECK(t.loss > 0.0);
  }
}

TEST_CASE("property: gradients match the closed forms") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    const double tau = 0.1 + 0.1 * (trial % 5);
    const Vec q = random_vec(gen);
    const Vec pos = random_vec(gen);
    std::vector<Vec> negs;
    for (int j = 0; j < 6; ++j) negs.push_back(random_vec(gen));
    const auto t = infonce(q, pos, negs, tau);
    for (std::size_t d = 0; d < q.size(); ++d) {
      // (E_p[k] - k+) / tau
      double expect = t.probabilities[0] * pos[d];
      for (std::size_t j = 0; j < negs.size(); ++j) expect += t.probabilities[j + 1] * negs[j][d];
      expect = (expect - pos[d]) / tau;
      CHECK(t.grad_query[d] == doctest::Approx(expect).epsilon(1e-12));
      CHECK(t.grad_keys[0][d] == doctest::Approx((t.probabilities[0] - 1.0) * q[d] / tau).epsilon(1e-12));
      CHECK(t.grad_keys[3][d] == doctest::Approx(t.probabilities[3] * q[d] / tau).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: monotone in the positive and negative logits") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    // Moderate logits so a 0.05 step is visible above rounding.
    const Vec q = random_vec(gen, 0.5);
    Vec pos = random_vec(gen, 0.5);
    std::vector<Vec> negs;
    for (int j = 0; j < 5; ++j) negs.push_back(random_vec(gen, 0.5));
    const double base = infonce(q, pos, negs, 0.5).loss;

    // Moving a key along q raises its logit by step * |q|^2 / tau.
    Vec up = pos;
    for (std::size_t d = 0; d < q.size(); ++d) up[d] += 0.05 * q[d];
    CHECK(infonce(q, up, negs, 0.5).loss < base);

    auto bumped = negs;
    for (std::size_t d = 0; d < q.size(); ++d) bumped[2][d] += 0.05 * q[d];
    CHECK(infonce(q, pos, bumped, 0.5).loss > base);
  }
}

TEST_CASE("property: max-shifted softmax equals the naive form on moderate logits") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double tau = 0.1 + 0.05 * (trial % 10);
    std::vector<double> logits(12);
    for (auto& z : logits) z = u(gen);
    // With q = e1 and k_j = tau * z_j * e1 the logits are exactly z_j.
    const Vec q = axis(1.0);
    std::vector<Vec> negs;
    for (std::size_t j = 1; j < logits.size(); ++j) negs.push_back(axis(tau * logits[j]));
    const auto t = infonce(q, axis(tau * logits[0]), negs, tau);
    std::vector<double> scaled;
    for (std::size_t j = 0; j < logits.size(); ++j) scaled.push_back((tau * logits[j]) / tau);
    const auto naive = oracle::naive_softmax(scaled);
    for (std::size_t j = 0; j < naive.size(); ++j) CHECK(std::abs(t.probabilities[j] - naive[j]) < 1e-10);
    CHECK(std::abs(t.loss + std::log(naive[0])) < 1e-10);
  }
}

TEST_CASE("large logits at tau = 0.1 stay finite") {
  const auto t = infonce(axis(30.0), axis(-20.0), {axis(25.0), axis(10.0)}, 0.1);
  CHECK(std::isfinite(t.loss));
  // Logits -6000 (positive), 7500 and 3000: loss = 7500 + 6000 + log(1 + e^-4500 + e^-13500).
  CHECK(t.loss == doctest::Approx(13500.0).epsilon(1e-14));
  CHECK(t.probabilities[1] == 1.0);
  CHECK(log_sum_exp(std::vector<double>{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("non-finite logit names the offending key") {
  Vec bad = axis(1.0);
  bad[0] = std::numeric_limits<double>::infinity();
  try {
    infonce(axis(1.0), axis(1.0), {axis(0.5), bad}, 0.1);
    FAIL("expected rejection");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("key 2") != std::string::npos);
  }
}

TEST_CASE("zero heads give ln 33 per offset for four neighbors") {
  const Sample s = five_agent_sample();
  Rng rng(9);
  NceConfig cfg;
  const auto bundles = build_key_bundles(s, cfg.horizon, AugmentConfig{}, rng);
  const auto key = KeyHead::zeros(64);
  const Vec q(kEmbeddingDim, 0.0);
  for (const auto& b : bundles) REQUIRE(b.negatives.size() == 32);
  const auto r = snce_loss(q, bundles, key, s.anchor(), cfg);
  CHECK(std::abs(r.loss - std::log(33.0)) < 1e-9);
  CHECK(r.loss == doctest::Approx(3.4965).epsilon(1e-4));
  CHECK(r.active_bundles == 4);

  cfg.mode = DenominatorMode::joint;
  const auto j = snce_loss(q, bundles, key, s.anchor(), cfg);
  CHECK(std::abs(j.loss - std::log(4.0 * 33.0)) < 1e-9);
}

TEST_CASE("every bundle empty gives zero loss and zero gradients") {
  std::vector<KeyBundle> bundles(4);
  for (std::size_t i = 0; i < 4; ++i) bundles[i].horizon_offset = i + 1;
  Rng rng(3);
  const auto key = KeyHead::random(16, rng);
  for (const auto mode : {DenominatorMode::per_horizon, DenominatorMode::joint}) {
    NceConfig cfg;
    cfg.mode = mode;
    const auto r = snce_loss(axis(2.0), bundles, key, {0, 0}, cfg);
    CHECK(r.loss == 0.0);
    CHECK(r.active_bundles == 0);
    for (double g : r.grad_query) CHECK(g == 0.0);
    CHECK(r.grad_key_head.all_zero());
  }
}

TEST_CASE("snce_loss checks bundle offsets against the horizon") {
  const Sample s = five_agent_sample();
  Rng rng(2);
  const auto key = KeyHead::zeros(8);
  NceConfig cfg;
  const auto three = build_key_bundles(s, 3, AugmentConfig{}, rng);
  CHECK_THROWS_AS(snce_loss(axis(1.0), three, key, s.anchor(), cfg), std::invalid_argument);
  auto four = build_key_bundles(s, 4, AugmentConfig{}, rng);
  std::swap(four[0], four[1]);
  CHECK_THROWS_AS(snce_loss(axis(1.0), four, key, s.anchor(), cfg), std::invalid_argument);
}

TEST_CASE("forward-only evaluation reports the same loss") {
  const Sample s = five_agent_sample();
  Rng rng(8);
  const auto key = KeyHead::random(16, rng);
  const auto bundles = build_key_bundles(s, 4, AugmentConfig{}, rng);
  std::mt19937_64 gen(1);
  const Vec q = random_vec(gen);
  for (const auto mode : {DenominatorMode::per_horizon, DenominatorMode::joint}) {
    NceConfig cfg;
    cfg.mode = mode;
    CHECK(snce_loss(q, bundles, key, s.anchor(), cfg, true).loss ==
          snce_loss(q, bundles, key, s.anchor(), cfg, false).loss);
  }
}

TEST_CASE("NceConfig validation and mode names") {
  NceConfig c;
  CHECK_NOTHROW(c.validate());
  c.temperature = 0.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.horizon = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.contrastive_weight = -1.0;
  CHECK_THROWS(c.validate());
  CHECK(denominator_mode_from_string(to_string(DenominatorMode::joint)) == DenominatorMode::joint);
  CHECK_THROWS(denominator_mode_from_string("pooled"));
}

TEST_CASE("Social-NCE gradient check: pass, tau mutation fails, zero weight still passes") {
  GradCheckOptions opt;
  opt.seed = 3;
  for (const auto mode : {DenominatorMode::per_horizon, DenominatorMode::joint}) {
    NceConfig cfg;
    cfg.mode = mode;
    CHECK(all_passed(snce_grad_check(opt, cfg)));

    NceConfig mutated = cfg;
    mutated.temperature *= 1.1;
    const auto bad = snce_grad_check(opt, cfg, &mutated);
    CHECK_FALSE(all_passed(bad));

    NceConfig zero_weight = cfg;
    zero_weight.contrastive_weight = 0.0;
    CHECK(all_passed(snce_grad_check(opt, zero_weight)));
  }
}
