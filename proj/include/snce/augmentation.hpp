#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "snce/random.hpp"
#include "snce/scene.hpp"

namespace snce {

/// Social negative sampling parameters. Ring radii are drawn uniformly in
/// [rho_min, rho_max] for every negative; noise is isotropic Gaussian with
/// per-axis standard deviation `noise_weight` meters.
struct AugmentConfig {
  double rho_min = 0.2;
  double rho_max = 2.5;
  double noise_weight = 0.2;
  std::size_t n_directions = 8;
  std::uint64_t rng_seed = 0;

  void validate() const;
  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

/// Keys for one horizon offset: the positive and its negatives. `source_neighbor`
/// runs parallel to `negatives` and holds the scene agent index each came from.
struct KeyBundle {
  std::size_t horizon_offset = 0;
  AgentState positive;
  std::vector<AgentState> negatives;
  std::vector<std::size_t> source_neighbor;
};

/// Ring negatives around every neighbor present at t + delta_t: for each
/// neighbor and each direction p, s_j + rho (cos 2pi p/n, sin 2pi p/n) + noise.
/// Returns an empty list when no neighbor is present.
std::vector<AgentState> negative_keys(const Sample& sample, std::size_t delta_t, const AugmentConfig& cfg,
                                      Rng& rng);

/// Ground-truth primary position at t + delta_t plus noise.
AgentState positive_key(const Sample& sample, std::size_t delta_t, const AugmentConfig& cfg, Rng& rng);

/// One bundle per offset 1..horizon. Throws if horizon exceeds pred_len.
std::vector<KeyBundle> build_key_bundles(const Sample& sample, std::size_t horizon, const AugmentConfig& cfg,
                                         Rng& rng);

}  // namespace snce
