#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opeval/errors.hpp"

namespace opeval {

// Dense row-major matrix, sized once. Small enough here that anything fancier
// would be noise.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Finite contextual bandit problem: context distribution Pr(x) and the reward
// table delta(x, y), both indexed by position in the label vectors.
struct Environment {
  std::vector<std::string> contexts;
  std::vector<std::string> actions;
  std::vector<double> prior;  // Pr(x), length contexts.size()
  Matrix utility;             // delta(x, y), contexts.size() x actions.size()

  std::size_t num_contexts() const noexcept { return contexts.size(); }
  std::size_t num_actions() const noexcept { return actions.size(); }
};

// Stochastic policy pi(y | x) as one probability row per context.
struct TabularPolicy {
  std::string name;
  Matrix probs;  // contexts x actions, rows sum to 1

  double prob(std::size_t x, std::size_t y) const { return probs(x, y); }
};

// One logged interaction. Indices are zero-based positions into the
// environment's label vectors; propensity is the logger's probability of the
// logged action at logging time.
struct LogRecord {
  std::int64_t context = 0;
  std::int64_t action = 0;
  double reward = 0.0;
  double propensity = 0.0;
};

// Everything collected under one logging policy. The policy itself is
// optional: plain logs only carry propensities.
struct LoggerDataset {
  std::string logger_id;
  std::optional<TabularPolicy> policy;
  std::vector<LogRecord> records;

  std::int64_t size() const noexcept { return static_cast<std::int64_t>(records.size()); }
};

struct MultiLoggerDataset {
  std::vector<LoggerDataset> loggers;

  std::size_t num_loggers() const noexcept { return loggers.size(); }
  std::int64_t total_records() const noexcept {
    std::int64_t n = 0;
    for (const auto& l : loggers) n += l.size();
    return n;
  }
  std::vector<std::int64_t> sizes() const {
    std::vector<std::int64_t> out;
    out.reserve(loggers.size());
    for (const auto& l : loggers) out.push_back(l.size());
    return out;
  }
};

inline constexpr double kSumTolerance = 1e-12;         // prior/policy row sums
inline constexpr double kPropensityTolerance = 1e-9;   // logged p vs stored policy

// Structural checks: matching dimensions, prior a distribution within
// kSumTolerance, utilities finite. Throws ValidationError.
void validate_environment(const Environment& env);

// Row-stochastic within kSumTolerance, entries in [0, 1], dimensions matching
// env. Throws ValidationError.
void validate_policy(const TabularPolicy& policy, const Environment& env);

// Support in the off-policy sense: wherever delta(x,y) * target(y|x) != 0 the
// logger must place positive probability.
bool has_support(const TabularPolicy& logger, const TabularPolicy& target,
                 const Environment& env);

// Sample-size weighted mixture pi_avg(y|x) = sum_i n_i pi_i(y|x) / n.
TabularPolicy average_policy(const std::vector<TabularPolicy>& policies,
                             const std::vector<std::int64_t>& sizes);

// Dataset flavor: every logger needs a stored policy. Throws DomainError
// "missing-policy" otherwise.
TabularPolicy average_policy(const MultiLoggerDataset& dataset);

// Record-level checks against the environment: indices in range, propensities
// in (0, 1], rewards finite, logger ids unique and non-empty. Where a logger
// carries a stored policy, each record's propensity must match it within
// kPropensityTolerance and, when strict_rewards is set, the reward must match
// the utility table within kSumTolerance.
void validate_dataset(const MultiLoggerDataset& dataset, const Environment& env,
                      bool strict_rewards = false);

}  // namespace opeval
