#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "snce/augmentation.hpp"

using namespace snce;

namespace {

AugmentConfig fixed_ring(double rho) {
  AugmentConfig c;
  c.rho_min = rho;
  c.rho_max = rho;
  c.noise_weight = 0.0;
  return c;
}

/// Primary walks along y = -3; agent 1 stands still at `neighbor`.
ScenePtr pair_scene(AgentState neighbor, std::size_t frames = 6) {
  std::vector<TrackRecord> r;
  for (std::size_t f = 0; f < frames; ++f) {
    r.push_back({static_cast<std::int64_t>(f), 0, 0.5 * f, -3.0});
    r.push_back({static_cast<std::int64_t>(f), 1, neighbor.x, neighbor.y});
  }
  return build_scene(r, 0.4);
}

}  // namespace

TEST_CASE("negative at p = 0 lies rho to the right of the neighbor") {
  const Sample s{pair_scene({1.0, 0.0}), 0, 2, 3, 0};
  Rng rng(1);
  const auto negs = negative_keys(s, 1, fixed_ring(0.2), rng);
  REQUIRE(negs.size() == 8);
  CHECK(negs[0].x == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(negs[0].y == doctest::Approx(0.0));
}

TEST_CASE("unit ring around the origin hits the eight compass points") {
  const Sample s{pair_scene({0.0, 0.0}), 0, 2, 3, 0};
  Rng rng(2);
  const auto negs = negative_keys(s, 2, fixed_ring(1.0), rng);
  const double r = std::sqrt(0.5);
  const std::vector<AgentState> expected{{1, 0}, {r, r}, {0, 1}, {-r, r}, {-1, 0}, {-r, -r}, {0, -1}, {r, -r}};
  REQUIRE(negs.size() == expected.size());
  for (std::size_t p = 0; p < negs.size(); ++p) {
    CHECK(std::abs(negs[p].x - expected[p].x) < 1e-15);
    CHECK(std::abs(negs[p].y - expected[p].y) < 1e-15);
  }
}

TEST_CASE("property: noiseless negatives sit on exact rings, counts match brute force") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t agents = std::uniform_int_distribution<std::size_t>(2, 5)(gen);
    const auto scene = oracle::random_scene(gen, 10, agents);
    const Sample s{scene, 0, 4, 6, 0};
    const double rho = std::uniform_real_distribution<double>(0.1, 3.0)(gen);
    const std::size_t dt = std::uniform_int_distribution<std::size_t>(1, 6)(gen);
    Rng rng(gen());
    const auto negs = negative_keys(s, dt, fixed_ring(rho), rng);

    // Brute force: which agents other than the primary are present at t + dt.
    const std::size_t frame = s.current_frame() + dt;
    std::vector<AgentState> sources;
    for (std::size_t a = 1; a < agents; ++a) {
      if (scene->present(frame, a)) sources.push_back(*scene->at(frame, a));
    }
    REQUIRE(negs.size() == 8 * sources.size());
    for (std::size_t j = 0; j < sources.size(); ++j) {
      std::vector<double> angles;
      for (std::size_t p = 0; p < 8; ++p) {
        const auto d = negs[8 * j + p] - sources[j];
        CHECK(std::abs(std::hypot(d.x, d.y) - rho) < 1e-12);
        double a = std::atan2(d.y, d.x);
        if (a < -1e-9) a += 2.0 * std::numbers::pi;
        angles.push_back(std::max(a, 0.0));
      }
      std::sort(angles.begin(), angles.end());
      for (std::size_t p = 0; p < 8; ++p) CHECK(std::abs(angles[p] - 0.25 * std::numbers::pi * p) < 1e-12);
    }
  }
}

TEST_CASE("statistics: rho is uniform and noise has the configured scale") {
  const Sample s{pair_scene({0.0, 0.0}), 0, 2, 3, 0};
  SUBCASE("rho uniform on [0.1, 0.5]") {
    AugmentConfig cfg;
    cfg.rho_min = 0.1;
    cfg.rho_max = 0.5;
    cfg.noise_weight = 0.0;
    Rng rng(123);
    std::vector<double> rhos;
    while (rhos.size() < 100000) {
      for (const auto& n : negative_keys(s, 1, cfg, rng)) rhos.push_back(std::hypot(n.x, n.y));
    }
    CHECK(oracle::ks_uniform(rhos, 0.1, 0.5) < 0.01);
  }
  SUBCASE("per-axis noise standard deviation") {
    AugmentConfig cfg = fixed_ring(1.0);
    cfg.noise_weight = 0.3;
    Rng rng(321);
    std::vector<double> ex;
    std::vector<double> ey;
    while (ex.size() < 100000) {
      const auto negs = negative_keys(s, 1, cfg, rng);
      for (std::size_t p = 0; p < negs.size(); ++p) {
        const double theta = 2.0 * std::numbers::pi * p / 8.0;
        ex.push_back(negs[p].x - std::cos(theta));
        ey.push_back(negs[p].y - std::sin(theta));
      }
    }
    CHECK(std::abs(oracle::sample_sd(ex) / 0.3 - 1.0) < 0.02);
    CHECK(std::abs(oracle::sample_sd(ey) / 0.3 - 1.0) < 0.02);
  }
}

TEST_CASE("positive key") {
  std::vector<TrackRecord> r;
  for (std::int64_t f = 0; f < 6; ++f) {
    r.push_back({f, 0, 1.0 * f, 0.0});
    r.push_back({f, 1, 0.0, 5.0});
  }
  r[2 * 3].x = 3.5;
  r[2 * 3].y = -1.0;
  const Sample s{build_scene(r, 0.4), 0, 2, 4, 0};

  Rng a(9);
  CHECK(positive_key(s, 2, fixed_ring(1.0), a) == AgentState{3.5, -1.0});

  AugmentConfig noisy;
  Rng r1(77);
  Rng r2(77);
  Rng r3(78);
  const auto p1 = positive_key(s, 2, noisy, r1);
  const auto p2 = positive_key(s, 2, noisy, r2);
  const auto p3 = positive_key(s, 2, noisy, r3);
  CHECK(p1 == p2);
  CHECK_FALSE(p1 == p3);
}

TEST_CASE("build_key_bundles") {
  const Sample s{pair_scene({2.0, 2.0}, 10), 0, 4, 4, 0};
  Rng rng(4);
  const auto four = build_key_bundles(s, 4, AugmentConfig{}, rng);
  REQUIRE(four.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(four[i].horizon_offset == i + 1);
    CHECK(four[i].negatives.size() == 8);
    CHECK(four[i].source_neighbor == std::vector<std::size_t>(8, 1));
  }
  CHECK(build_key_bundles(s, 1, AugmentConfig{}, rng).size() == 1);
  CHECK_THROWS_AS(build_key_bundles(s, 5, AugmentConfig{}, rng), std::invalid_argument);
  CHECK_THROWS_AS(build_key_bundles(s, 0, AugmentConfig{}, rng), std::invalid_argument);
}

TEST_CASE("bundles without neighbors carry no negatives") {
  std::vector<TrackRecord> r;
  for (std::int64_t f = 0; f < 8; ++f) r.push_back({f, 0, 1.0 * f, 0.0});
  for (std::int64_t f = 0; f < 4; ++f) r.push_back({f, 1, 0.0, 1.0});
  const Sample s{build_scene(r, 0.4), 0, 4, 4, 0};
  Rng rng(3);
  for (const auto& b : build_key_bundles(s, 4, AugmentConfig{}, rng)) {
    CHECK(b.negatives.empty());
    CHECK(std::isfinite(b.positive.x));
  }
}

TEST_CASE("AugmentConfig validation") {
  AugmentConfig c;
  CHECK_NOTHROW(c.validate());
  c.rho_min = 0.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.rho_min = 3.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.noise_weight = -0.1;
  CHECK_THROWS(c.validate());
  c = {};
  c.n_directions = 0;
  CHECK_THROWS(c.validate());
}
