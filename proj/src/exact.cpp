#include "opeval/exact.hpp"

#include <cmath>
#include <sstream>

#include "opeval/numeric.hpp"

namespace opeval::exact {

namespace {

void check_lengths(std::size_t loggers, std::size_t sizes) {
  if (loggers != sizes) {
    std::ostringstream os;
    os << loggers << " loggers but " << sizes << " sizes";
    throw ValidationError("length-mismatch", os.str());
  }
}

std::int64_t positive_total(const std::vector<std::int64_t>& sizes) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] <= 0) {
      std::ostringstream os;
      os << "size[" << i << "] = " << sizes[i];
      throw ValidationError("invalid-count", os.str());
    }
    n += sizes[i];
  }
  return n;
}

[[noreturn]] void support_violation(const Environment& env, const std::string& logger_name,
                                    std::size_t x, std::size_t y) {
  std::ostringstream os;
  os << "policy '" << logger_name << "' has zero probability at (" << env.contexts[x] << ", "
     << env.actions[y] << ") where delta * target is nonzero";
  throw DomainError("support-violation", os.str());
}

}  // namespace

void validate_weights(const WeightVector& weights) {
  if (weights.weights.size() != weights.sample_sizes.size()) {
    std::ostringstream os;
    os << weights.weights.size() << " weights but " << weights.sample_sizes.size() << " sizes";
    throw DomainError("length-mismatch", os.str());
  }
  if (weights.weights.empty()) {
    throw DomainError("invalid-weights", "empty weight vector");
  }
  KahanSum s;
  for (std::size_t i = 0; i < weights.weights.size(); ++i) {
    double l = weights.weights[i];
    if (!std::isfinite(l) || l < 0.0) {
      std::ostringstream os;
      os << "lambda[" << i << "] = " << l;
      throw DomainError("invalid-weights", os.str());
    }
    s.add(l * static_cast<double>(weights.sample_sizes[i]));
  }
  if (std::abs(s.value() - 1.0) > kWeightSumTolerance) {
    std::ostringstream os;
    os << "sum of lambda_i * n_i is " << s.value();
    throw DomainError("invalid-weights", os.str());
  }
}

WeightVector uniform_weights(const std::vector<std::int64_t>& sizes) {
  std::int64_t n = positive_total(sizes);
  WeightVector w;
  w.sample_sizes = sizes;
  w.weights.assign(sizes.size(), 1.0 / static_cast<double>(n));
  return w;
}

double exact_utility(const TabularPolicy& policy, const Environment& env) {
  validate_environment(env);
  validate_policy(policy, env);
  KahanSum s;
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    for (std::size_t y = 0; y < env.num_actions(); ++y) {
      s.add(env.prior[x] * policy.prob(x, y) * env.utility(x, y));
    }
  }
  return s.value();
}

double divergence(const TabularPolicy& target, const TabularPolicy& logger,
                  const Environment& env) {
  validate_environment(env);
  validate_policy(target, env);
  validate_policy(logger, env);
  double u = exact_utility(target, env);
  KahanSum s;
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    for (std::size_t y = 0; y < env.num_actions(); ++y) {
      double num = env.utility(x, y) * target.prob(x, y);
      if (num == 0.0) continue;
      if (logger.prob(x, y) <= 0.0) support_violation(env, logger.name, x, y);
      s.add(num * num / logger.prob(x, y) * env.prior[x]);
    }
  }
  double var = s.value() - u * u;
  if (var < 0.0) {
    if (var >= -kNegativeClampTolerance) return 0.0;
    std::ostringstream os;
    os << "divergence for '" << logger.name << "' came out " << var;
    throw DomainError("internal-consistency", os.str());
  }
  return var;
}

TabularPolicy optimal_importance_policy(const TabularPolicy& target, const Environment& env) {
  validate_environment(env);
  validate_policy(target, env);
  TabularPolicy imp;
  imp.name = target.name + "-importance";
  imp.probs = Matrix(env.num_contexts(), env.num_actions());
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    KahanSum row;
    for (std::size_t y = 0; y < env.num_actions(); ++y) {
      double v = env.utility(x, y) * target.prob(x, y);
      if (v < 0.0) {
        std::ostringstream os;
        os << "delta * target is " << v << " at (" << env.contexts[x] << ", " << env.actions[y] << ")";
        throw DomainError("negative-or-zero-row", os.str());
      }
      imp.probs(x, y) = v;
      row.add(v);
    }
    double total = row.value();
    if (total <= 0.0) {
      throw DomainError("negative-or-zero-row",
                        "delta * target sums to zero for context " + env.contexts[x]);
    }
    for (std::size_t y = 0; y < env.num_actions(); ++y) {
      imp.probs(x, y) /= total;
    }
  }
  return imp;
}

DivergenceProfile make_divergence_profile(const TabularPolicy& target,
                                          const std::vector<TabularPolicy>& loggers,
                                          const std::vector<std::int64_t>& sizes,
                                          const Environment& env) {
  check_lengths(loggers.size(), sizes.size());
  positive_total(sizes);
  DivergenceProfile p;
  p.sample_sizes = sizes;
  p.divergences.reserve(loggers.size());
  for (const auto& logger : loggers) {
    p.divergences.push_back(divergence(target, logger, env));
  }
  finish_profile(p);
  return p;
}

void finish_profile(DivergenceProfile& profile) {
  profile.relative_divergences.clear();
  profile.relative_sizes.clear();
  if (profile.divergences.empty()) return;
  double ref_sigma = profile.divergences.back();
  double ref_n = static_cast<double>(profile.sample_sizes.back());
  if (ref_sigma <= kZeroDivergenceFloor || ref_n <= 0.0) return;
  for (std::size_t i = 0; i < profile.divergences.size(); ++i) {
    profile.relative_divergences.push_back(profile.divergences[i] / ref_sigma);
    profile.relative_sizes.push_back(static_cast<double>(profile.sample_sizes[i]) / ref_n);
  }
}

double naive_variance(const TabularPolicy& target, const std::vector<TabularPolicy>& loggers,
                      const std::vector<std::int64_t>& sizes, const Environment& env) {
  check_lengths(loggers.size(), sizes.size());
  double n = static_cast<double>(positive_total(sizes));
  KahanSum s;
  for (std::size_t i = 0; i < loggers.size(); ++i) {
    s.add(static_cast<double>(sizes[i]) * divergence(target, loggers[i], env));
  }
  return s.value() / (n * n);
}

double balanced_variance(const TabularPolicy& target, const std::vector<TabularPolicy>& loggers,
                         const std::vector<std::int64_t>& sizes, const Environment& env) {
  check_lengths(loggers.size(), sizes.size());
  double n = static_cast<double>(positive_total(sizes));
  validate_environment(env);
  validate_policy(target, env);
  TabularPolicy avg = average_policy(loggers, sizes);
  KahanSum total;
  for (std::size_t i = 0; i < loggers.size(); ++i) {
    KahanSum second_moment;
    KahanSum mean;
    for (std::size_t x = 0; x < env.num_contexts(); ++x) {
      for (std::size_t y = 0; y < env.num_actions(); ++y) {
        double num = env.utility(x, y) * target.prob(x, y);
        if (num == 0.0) continue;
        double denom = avg.prob(x, y);
        if (denom <= 0.0) support_violation(env, avg.name, x, y);
        double ratio = num / denom;
        double mass = loggers[i].prob(x, y) * env.prior[x];
        second_moment.add(ratio * ratio * mass);
        mean.add(ratio * mass);
      }
    }
    double m = mean.value();
    total.add(static_cast<double>(sizes[i]) * (second_moment.value() - m * m));
  }
  return total.value() / (n * n);
}

double weighted_variance(const DivergenceProfile& profile, const WeightVector& weights) {
  if (profile.divergences.size() != weights.weights.size()) {
    std::ostringstream os;
    os << profile.divergences.size() << " divergences but " << weights.weights.size() << " weights";
    throw DomainError("length-mismatch", os.str());
  }
  validate_weights(weights);
  for (std::size_t i = 0; i < profile.sample_sizes.size(); ++i) {
    if (profile.sample_sizes[i] != weights.sample_sizes[i]) {
      std::ostringstream os;
      os << "profile size[" << i << "] = " << profile.sample_sizes[i] << " but weights carry "
         << weights.sample_sizes[i];
      throw DomainError("invalid-weights", os.str());
    }
  }
  KahanSum s;
  for (std::size_t i = 0; i < profile.divergences.size(); ++i) {
    double l = weights.weights[i];
    s.add(l * l * static_cast<double>(profile.sample_sizes[i]) * profile.divergences[i]);
  }
  return s.value();
}

WeightVector optimal_weights(const DivergenceProfile& profile) {
  if (profile.divergences.empty()) {
    throw DomainError("zero-divergence", "empty divergence profile");
  }
  for (std::size_t i = 0; i < profile.divergences.size(); ++i) {
    if (profile.divergences[i] <= kZeroDivergenceFloor) {
      std::ostringstream os;
      os << "divergence[" << i << "] = " << profile.divergences[i]
         << " is at or below the floor " << kZeroDivergenceFloor;
      throw DomainError("zero-divergence", os.str());
    }
  }
  KahanSum precision;
  for (std::size_t i = 0; i < profile.divergences.size(); ++i) {
    precision.add(static_cast<double>(profile.sample_sizes[i]) / profile.divergences[i]);
  }
  double total = precision.value();
  WeightVector w;
  w.sample_sizes = profile.sample_sizes;
  w.weights.reserve(profile.divergences.size());
  for (std::size_t i = 0; i < profile.divergences.size(); ++i) {
    w.weights.push_back(1.0 / (profile.divergences[i] * total));
  }
  return w;
}

double reduction_ratio(const DivergenceProfile& profile) {
  for (std::size_t i = 0; i < profile.divergences.size(); ++i) {
    if (profile.divergences[i] <= kZeroDivergenceFloor) {
      std::ostringstream os;
      os << "divergence[" << i << "] = " << profile.divergences[i]
         << " is at or below the floor " << kZeroDivergenceFloor;
      throw DomainError("zero-divergence", os.str());
    }
  }
  DivergenceProfile p = profile;
  if (p.relative_divergences.empty()) finish_profile(p);
  KahanSum r_sum, rv_sum, rv_inv_sum;
  for (std::size_t i = 0; i < p.relative_sizes.size(); ++i) {
    double r = p.relative_sizes[i];
    double v = p.relative_divergences[i];
    r_sum.add(r);
    rv_sum.add(r * v);
    rv_inv_sum.add(r / v);
  }
  double num = r_sum.value();
  return num * num / (rv_sum.value() * rv_inv_sum.value());
}

}  // namespace opeval::exact
