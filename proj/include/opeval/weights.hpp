#pragma once

#include <cstdint>
#include <vector>

#include "opeval/core.hpp"
#include "opeval/exact.hpp"

namespace opeval::weights {

// Empirical per-logger divergence estimates with bookkeeping for the
// zero-divergence floor.
struct EstimatedDivergenceProfile {
  std::vector<double> estimates;
  std::vector<std::int64_t> sample_sizes;
  std::vector<bool> floor_hit;  // estimate at or below the floor before flooring

  bool any_floor_hit() const {
    for (bool f : floor_hit) {
      if (f) return true;
    }
    return false;
  }
};

// Unbiased sample variance (divisor n-1, two-pass) of the importance-weighted
// values reward * target(y|x) / p over one logger's records. Needs n >= 2
// (DomainError "insufficient-samples").
double estimate_divergence(const LoggerDataset& logger, const TabularPolicy& target);

// estimate_divergence per logger, with floor flags filled in.
EstimatedDivergenceProfile estimate_profile(const MultiLoggerDataset& dataset,
                                            const TabularPolicy& target);

// Plugs the estimates into the optimal-weight formula. Any floored estimate is
// an error (DomainError "zero-divergence-estimate"); callers wanting a
// fallback catch it and use exact::uniform_weights.
exact::WeightVector estimate_weights(const MultiLoggerDataset& dataset,
                                     const TabularPolicy& target);

exact::WeightVector weights_from_profile(const EstimatedDivergenceProfile& profile);

}  // namespace opeval::weights
