#pragma once

#include <cstdint>
#include <vector>

#include "opeval/core.hpp"

namespace opeval::exact {

// Divergence below this is treated as exactly zero (optimal weights and the
// reduction ratio are undefined there).
inline constexpr double kZeroDivergenceFloor = 1e-12;

// Negative closed-form divergences up to this magnitude are rounding artifacts
// and clamp to zero; anything more negative is an internal inconsistency.
inline constexpr double kNegativeClampTolerance = 1e-9;

// Per-logger divergences sigma^2(target || pi_i) plus the sample sizes, with
// the relative forms v_i = sigma_i^2 / sigma_m^2 and r_i = n_i / n_m (last
// logger as reference) precomputed when defined.
struct DivergenceProfile {
  std::vector<double> divergences;
  std::vector<std::int64_t> sample_sizes;
  std::vector<double> relative_divergences;  // empty when sigma_m^2 is at the floor
  std::vector<double> relative_sizes;
};

// Per-logger coefficients lambda_i with lambda_i >= 0 and
// sum_i lambda_i * n_i = 1 (within 1e-10).
struct WeightVector {
  std::vector<double> weights;
  std::vector<std::int64_t> sample_sizes;
};

inline constexpr double kWeightSumTolerance = 1e-10;

// Throws DomainError "invalid-weights" when the lambda invariants fail.
void validate_weights(const WeightVector& weights);

// lambda_i = 1/n for every logger; the weighted estimator with these weights
// is the naive estimator.
WeightVector uniform_weights(const std::vector<std::int64_t>& sizes);

// U(pi) = sum_{x,y} Pr(x) pi(y|x) delta(x,y).
double exact_utility(const TabularPolicy& policy, const Environment& env);

// sigma^2(target || logger) = sum_{x,y} (delta * target)^2 / logger * Pr(x) - U(target)^2.
// Cells with delta * target == 0 are skipped; elsewhere the logger must have
// positive probability (DomainError "support-violation").
double divergence(const TabularPolicy& target, const TabularPolicy& logger,
                  const Environment& env);

// Rows proportional to delta(x,y) * target(y|x). Every row needs nonnegative
// entries and a positive sum (DomainError "negative-or-zero-row").
TabularPolicy optimal_importance_policy(const TabularPolicy& target, const Environment& env);

// Builds the profile from closed-form divergences.
DivergenceProfile make_divergence_profile(const TabularPolicy& target,
                                          const std::vector<TabularPolicy>& loggers,
                                          const std::vector<std::int64_t>& sizes,
                                          const Environment& env);

// Fills in the relative vectors of a profile whose divergences/sizes are
// already set (used when divergences come from estimation rather than the
// closed form).
void finish_profile(DivergenceProfile& profile);

// Var of the naive estimator: (1/n^2) sum_i n_i sigma_i^2.
double naive_variance(const TabularPolicy& target, const std::vector<TabularPolicy>& loggers,
                      const std::vector<std::int64_t>& sizes, const Environment& env);

// Var of the balanced estimator, with the sample-size weighted average policy
// as the importance denominator.
double balanced_variance(const TabularPolicy& target, const std::vector<TabularPolicy>& loggers,
                         const std::vector<std::int64_t>& sizes, const Environment& env);

// Var of the weighted estimator: sum_i lambda_i^2 n_i sigma_i^2.
double weighted_variance(const DivergenceProfile& profile, const WeightVector& weights);

// lambda_i* = 1 / (sigma_i^2 * sum_j n_j / sigma_j^2). Requires every
// divergence above the floor (DomainError "zero-divergence").
WeightVector optimal_weights(const DivergenceProfile& profile);

// gamma = Var_weight* / Var_naive = (sum r_i)^2 / ((sum r_i v_i)(sum r_i / v_i)),
// always in (0, 1].
double reduction_ratio(const DivergenceProfile& profile);

}  // namespace opeval::exact
