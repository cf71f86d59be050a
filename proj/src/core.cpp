#include "opeval/core.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "opeval/numeric.hpp"

namespace opeval {

namespace {

std::string cell_name(const Environment& env, std::size_t x, std::size_t y) {
  std::ostringstream os;
  os << "(" << env.contexts[x] << ", " << env.actions[y] << ")";
  return os.str();
}

}  // namespace

void validate_environment(const Environment& env) {
  if (env.contexts.empty() || env.actions.empty()) {
    throw ValidationError("dimension-mismatch", "environment needs at least one context and one action");
  }
  if (env.prior.size() != env.contexts.size()) {
    std::ostringstream os;
    os << "prior has " << env.prior.size() << " entries for " << env.contexts.size() << " contexts";
    throw ValidationError("dimension-mismatch", os.str());
  }
  if (env.utility.rows() != env.contexts.size() || env.utility.cols() != env.actions.size()) {
    std::ostringstream os;
    os << "utility is " << env.utility.rows() << "x" << env.utility.cols() << ", expected "
       << env.contexts.size() << "x" << env.actions.size();
    throw ValidationError("dimension-mismatch", os.str());
  }
  KahanSum total;
  for (std::size_t x = 0; x < env.prior.size(); ++x) {
    double p = env.prior[x];
    if (!std::isfinite(p) || p < 0.0) {
      std::ostringstream os;
      os << "prior[" << x << "] = " << p;
      throw ValidationError("non-normalized-prior", os.str());
    }
    total.add(p);
  }
  if (std::abs(total.value() - 1.0) > kSumTolerance) {
    std::ostringstream os;
    os << "prior sums to " << total.value();
    throw ValidationError("non-normalized-prior", os.str());
  }
  for (std::size_t x = 0; x < env.utility.rows(); ++x) {
    for (std::size_t y = 0; y < env.utility.cols(); ++y) {
      if (!std::isfinite(env.utility(x, y))) {
        throw ValidationError("non-finite-utility", "utility at " + cell_name(env, x, y));
      }
    }
  }
}

void validate_policy(const TabularPolicy& policy, const Environment& env) {
  if (policy.probs.rows() != env.num_contexts() || policy.probs.cols() != env.num_actions()) {
    std::ostringstream os;
    os << "policy '" << policy.name << "' is " << policy.probs.rows() << "x" << policy.probs.cols()
       << ", expected " << env.num_contexts() << "x" << env.num_actions();
    throw ValidationError("dimension-mismatch", os.str());
  }
  for (std::size_t x = 0; x < policy.probs.rows(); ++x) {
    KahanSum row;
    for (std::size_t y = 0; y < policy.probs.cols(); ++y) {
      double p = policy.probs(x, y);
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        std::ostringstream os;
        os << "policy '" << policy.name << "' has probability " << p << " at " << cell_name(env, x, y);
        throw ValidationError("non-normalized-policy", os.str());
      }
      row.add(p);
    }
    if (std::abs(row.value() - 1.0) > kSumTolerance) {
      std::ostringstream os;
      os << "policy '" << policy.name << "' row for context " << env.contexts[x] << " sums to "
         << row.value();
      throw ValidationError("non-normalized-policy", os.str());
    }
  }
}

bool has_support(const TabularPolicy& logger, const TabularPolicy& target,
                 const Environment& env) {
  validate_policy(logger, env);
  validate_policy(target, env);
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    for (std::size_t y = 0; y < env.num_actions(); ++y) {
      if (env.utility(x, y) * target.prob(x, y) != 0.0 && logger.prob(x, y) <= 0.0) {
        return false;
      }
    }
  }
  return true;
}

TabularPolicy average_policy(const std::vector<TabularPolicy>& policies,
                             const std::vector<std::int64_t>& sizes) {
  if (policies.empty()) {
    throw ValidationError("dimension-mismatch", "average of zero policies");
  }
  if (policies.size() != sizes.size()) {
    std::ostringstream os;
    os << policies.size() << " policies but " << sizes.size() << " sizes";
    throw ValidationError("length-mismatch", os.str());
  }
  std::int64_t n = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 0) {
      std::ostringstream os;
      os << "size[" << i << "] = " << sizes[i];
      throw ValidationError("invalid-count", os.str());
    }
    n += sizes[i];
  }
  if (n <= 0) {
    throw ValidationError("invalid-count", "total sample size is zero");
  }
  const std::size_t rows = policies.front().probs.rows();
  const std::size_t cols = policies.front().probs.cols();
  for (const auto& p : policies) {
    if (p.probs.rows() != rows || p.probs.cols() != cols) {
      throw ValidationError("dimension-mismatch", "policy '" + p.name + "' shape differs in average");
    }
  }
  TabularPolicy avg;
  avg.name = "average";
  if (policies.size() == 1) {
    // One logger: the mixture is the policy itself. Returning it untouched
    // keeps the balanced estimator bit-identical to naive in that case.
    avg.probs = policies.front().probs;
    return avg;
  }
  avg.probs = Matrix(rows, cols);
  for (std::size_t x = 0; x < rows; ++x) {
    for (std::size_t y = 0; y < cols; ++y) {
      KahanSum s;
      for (std::size_t i = 0; i < policies.size(); ++i) {
        s.add(static_cast<double>(sizes[i]) * policies[i].prob(x, y));
      }
      avg.probs(x, y) = s.value() / static_cast<double>(n);
    }
  }
  return avg;
}

TabularPolicy average_policy(const MultiLoggerDataset& dataset) {
  std::vector<TabularPolicy> policies;
  std::vector<std::int64_t> sizes;
  policies.reserve(dataset.loggers.size());
  for (const auto& logger : dataset.loggers) {
    if (!logger.policy.has_value()) {
      throw DomainError("missing-policy", "logger '" + logger.logger_id + "' has no stored policy");
    }
    policies.push_back(*logger.policy);
    sizes.push_back(logger.size());
  }
  return average_policy(policies, sizes);
}

void validate_dataset(const MultiLoggerDataset& dataset, const Environment& env,
                      bool strict_rewards) {
  if (dataset.loggers.empty()) {
    throw ValidationError("empty-dataset", "dataset has no loggers");
  }
  std::set<std::string> seen;
  for (const auto& logger : dataset.loggers) {
    if (logger.logger_id.empty()) {
      throw ValidationError("empty-dataset", "logger with empty id");
    }
    if (!seen.insert(logger.logger_id).second) {
      throw ValidationError("duplicate-logger-id", "logger '" + logger.logger_id + "' appears twice");
    }
    if (logger.policy.has_value()) {
      validate_policy(*logger.policy, env);
    }
    for (std::size_t j = 0; j < logger.records.size(); ++j) {
      const LogRecord& r = logger.records[j];
      std::ostringstream where;
      where << "logger '" << logger.logger_id << "' record " << j;
      if (r.context < 0 || r.context >= static_cast<std::int64_t>(env.num_contexts()) ||
          r.action < 0 || r.action >= static_cast<std::int64_t>(env.num_actions())) {
        std::ostringstream os;
        os << where.str() << " has indices (" << r.context << ", " << r.action << ") outside "
           << env.num_contexts() << "x" << env.num_actions();
        throw ValidationError("dimension-mismatch", os.str());
      }
      if (!std::isfinite(r.propensity) || r.propensity <= 0.0 || r.propensity > 1.0) {
        std::ostringstream os;
        os << where.str() << " has propensity " << r.propensity;
        throw ValidationError("invalid-propensity", os.str());
      }
      if (!std::isfinite(r.reward)) {
        std::ostringstream os;
        os << where.str() << " has non-finite reward";
        throw ValidationError("non-finite-utility", os.str());
      }
      const auto x = static_cast<std::size_t>(r.context);
      const auto y = static_cast<std::size_t>(r.action);
      if (logger.policy.has_value()) {
        double stored = logger.policy->prob(x, y);
        if (std::abs(stored - r.propensity) > kPropensityTolerance) {
          std::ostringstream os;
          os << where.str() << " logs propensity " << r.propensity << " but stored policy gives "
             << stored << " at " << "(" << env.contexts[x] << ", " << env.actions[y] << ")";
          throw ValidationError("propensity-mismatch", os.str());
        }
      }
      if (strict_rewards && std::abs(env.utility(x, y) - r.reward) > kSumTolerance) {
        std::ostringstream os;
        os << where.str() << " logs reward " << r.reward << " but utility table gives "
           << env.utility(x, y);
        throw ValidationError("reward-mismatch", os.str());
      }
    }
  }
}

}  // namespace opeval
