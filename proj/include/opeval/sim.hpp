#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opeval/core.hpp"
#include "opeval/exact.hpp"

namespace opeval::sim {

enum class EstimatorKind { naive, balanced, weighted };

enum class WeightSource { exact_optimal, estimated, explicit_lambda };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::naive;
  WeightSource source = WeightSource::exact_optimal;  // weighted only
  std::vector<double> lambda;                         // explicit_lambda only

  std::string label() const;
};

struct SimulationConfig {
  Environment env;
  TabularPolicy target;
  std::vector<TabularPolicy> loggers;
  std::vector<std::int64_t> sizes;
  EstimatorSpec estimator;
  std::int64_t replicates = 0;
  std::uint64_t master_seed = 0;
  bool keep_estimates = false;
  // Estimated weights only: replicates whose divergence estimate degenerates
  // use uniform weights instead of failing the whole run. At small n a log can
  // land on a single importance value, so long runs need this to survive.
  bool fallback_naive = false;
};

struct ReplicationSummary {
  double empirical_mean = 0.0;
  std::optional<double> empirical_variance;  // absent when replicates < 2
  std::optional<double> standard_error;
  double exact_utility = 0.0;
  double exact_variance = 0.0;
  std::int64_t replicates = 0;
  std::string estimator_label;
  std::optional<std::vector<double>> per_replicate_estimates;
  std::optional<std::int64_t> fallback_replicates;  // set when fallback_naive applies
};

// Draws `count` records from Pr(x) and policy(y|x) by inverse-CDF over the
// stored order, rewards from the utility table, propensities from the policy.
// Record j's draws depend only on (seed, j), nothing else.
LoggerDataset sample_bandit_log(const Environment& env, const TabularPolicy& policy,
                                std::int64_t count, std::uint64_t seed,
                                const std::string& logger_id);

// Inverse-CDF draw from one policy row; first index whose cumulative sum
// exceeds u wins, entries with zero probability are never chosen.
std::size_t sample_categorical(const std::vector<double>& probs, double u);

// R independent replicates: replicate r draws every logger's log from child
// seed (master_seed, r, logger index), applies the configured estimator, and
// the summary pairs the empirical moments with the matching closed-form
// values. Fails carry the replicate index in their message; with
// fallback_naive set, degenerate weight estimates switch that replicate to
// uniform weights instead, counted in fallback_replicates.
ReplicationSummary replicate(const SimulationConfig& config);

// (1 - mix) * uniform + mix * base.
TabularPolicy make_policy_family(const Environment& env, const TabularPolicy& base, double mix);

struct SweepRow {
  double mix = 0.0;
  double v1 = 0.0;
  double r1 = 0.0;
  double ratio_drop = 0.0;
  double ratio_bal = 0.0;
  double ratio_weight = 0.0;
  double ratio_weight_vs_bal = 0.0;
};

// Exact-variance grid over family members (rows) and relative sizes r1
// (columns flattened into rows): n1 = round-half-even(r1 * base_n2),
// n2 = base_n2. All four ratios are closed-form, no sampling.
std::vector<SweepRow> sweep(const Environment& env, const TabularPolicy& target,
                            const TabularPolicy& logger2, const std::vector<TabularPolicy>& family,
                            const std::vector<double>& mixes, const std::vector<double>& r1_grid,
                            std::int64_t base_n2);

}  // namespace opeval::sim
