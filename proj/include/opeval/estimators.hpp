#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opeval/core.hpp"
#include "opeval/exact.hpp"

namespace opeval::estimators {

// One estimate plus enough context to audit it: the per-logger pieces sum to
// the estimate (they are stored after scaling, so the sum is literal), and
// weighted runs record the lambda they used.
struct EstimateReport {
  std::string estimator_name;
  double estimate = 0.0;
  std::optional<exact::WeightVector> weights_used;
  std::vector<double> per_logger_contribution;
  std::int64_t total_records = 0;
};

// (1/n) sum_ij reward * target(y|x) / p. Records where target(y|x) == 0
// contribute exactly zero.
EstimateReport naive_ips(const MultiLoggerDataset& dataset, const TabularPolicy& target);

// Same sum with the sample-size weighted average policy replacing the logged
// propensity. Needs stored policies on every logger.
EstimateReport balanced_ips(const MultiLoggerDataset& dataset, const TabularPolicy& target);

// sum_i lambda_i sum_j reward * target(y|x) / p.
EstimateReport weighted_ips(const MultiLoggerDataset& dataset, const TabularPolicy& target,
                            const exact::WeightVector& weights);

// Weighted with lambda* from the supplied divergence profile.
EstimateReport weighted_ips_optimal(const MultiLoggerDataset& dataset, const TabularPolicy& target,
                                    const exact::DivergenceProfile& profile);

// Sub-dataset holding exactly the loggers named in keep_ids, preserving the
// dataset's original logger order.
MultiLoggerDataset drop_loggers(const MultiLoggerDataset& dataset,
                                const std::vector<std::string>& keep_ids);

}  // namespace opeval::estimators
