#include "opeval/sim.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "opeval/estimators.hpp"
#include "opeval/numeric.hpp"
#include "opeval/rng.hpp"
#include "opeval/weights.hpp"

namespace opeval::sim {

std::string EstimatorSpec::label() const {
  switch (kind) {
    case EstimatorKind::naive:
      return "naive";
    case EstimatorKind::balanced:
      return "balanced";
    case EstimatorKind::weighted:
      switch (source) {
        case WeightSource::exact_optimal:
          return "weighted-optimal";
        case WeightSource::estimated:
          return "weighted-estimated";
        case WeightSource::explicit_lambda:
          return "weighted-explicit";
      }
  }
  return "unknown";
}

std::size_t sample_categorical(const std::vector<double>& probs, double u) {
  double cum = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] > 0.0) last_positive = k;
    cum += probs[k];
    if (u < cum) return k;
  }
  // u landed past the accumulated total (rounding); take the last viable index.
  if (last_positive == probs.size()) {
    throw DomainError("negative-or-zero-row", "categorical draw over an all-zero row");
  }
  return last_positive;
}

LoggerDataset sample_bandit_log(const Environment& env, const TabularPolicy& policy,
                                std::int64_t count, std::uint64_t seed,
                                const std::string& logger_id) {
  if (count < 1) {
    std::ostringstream os;
    os << "record count " << count << " for logger '" << logger_id << "'";
    throw ValidationError("invalid-count", os.str());
  }
  validate_environment(env);
  validate_policy(policy, env);
  LoggerDataset out;
  out.logger_id = logger_id;
  out.policy = policy;
  out.records.reserve(static_cast<std::size_t>(count));
  std::vector<double> row(env.num_actions());
  for (std::int64_t j = 0; j < count; ++j) {
    const auto cj = static_cast<std::uint64_t>(j);
    std::size_t x = sample_categorical(env.prior, rng::uniform(seed, cj, 0));
    for (std::size_t y = 0; y < env.num_actions(); ++y) row[y] = policy.prob(x, y);
    std::size_t y = sample_categorical(row, rng::uniform(seed, cj, 1));
    LogRecord r;
    r.context = static_cast<std::int64_t>(x);
    r.action = static_cast<std::int64_t>(y);
    r.reward = env.utility(x, y);
    r.propensity = policy.prob(x, y);
    out.records.push_back(r);
  }
  return out;
}

namespace {

struct ExactReference {
  double utility = 0.0;
  double variance = 0.0;
  std::optional<exact::WeightVector> fixed_weights;  // set unless weights are estimated
};

ExactReference exact_reference(const SimulationConfig& config) {
  ExactReference ref;
  ref.utility = exact::exact_utility(config.target, config.env);
  switch (config.estimator.kind) {
    case EstimatorKind::naive:
      ref.variance = exact::naive_variance(config.target, config.loggers, config.sizes, config.env);
      break;
    case EstimatorKind::balanced:
      ref.variance =
          exact::balanced_variance(config.target, config.loggers, config.sizes, config.env);
      break;
    case EstimatorKind::weighted: {
      exact::DivergenceProfile profile =
          exact::make_divergence_profile(config.target, config.loggers, config.sizes, config.env);
      if (config.estimator.source == WeightSource::explicit_lambda) {
        exact::WeightVector w;
        w.weights = config.estimator.lambda;
        w.sample_sizes = config.sizes;
        ref.variance = exact::weighted_variance(profile, w);
        ref.fixed_weights = w;
      } else {
        // Estimated weights converge to lambda*, so the optimal-weight
        // variance is the reference in both remaining modes.
        exact::WeightVector w = exact::optimal_weights(profile);
        ref.variance = exact::weighted_variance(profile, w);
        if (config.estimator.source == WeightSource::exact_optimal) ref.fixed_weights = w;
      }
      break;
    }
  }
  return ref;
}

double run_estimator(const SimulationConfig& config, const MultiLoggerDataset& data,
                     const ExactReference& ref, std::int64_t& fallback_count) {
  switch (config.estimator.kind) {
    case EstimatorKind::naive:
      return estimators::naive_ips(data, config.target).estimate;
    case EstimatorKind::balanced:
      return estimators::balanced_ips(data, config.target).estimate;
    case EstimatorKind::weighted:
      if (config.estimator.source == WeightSource::estimated) {
        exact::WeightVector w;
        try {
          w = weights::estimate_weights(data, config.target);
        } catch (const DomainError& e) {
          if (!config.fallback_naive || e.kind() != "zero-divergence-estimate") throw;
          w = exact::uniform_weights(data.sizes());
          ++fallback_count;
        }
        return estimators::weighted_ips(data, config.target, w).estimate;
      }
      return estimators::weighted_ips(data, config.target, *ref.fixed_weights).estimate;
  }
  throw DomainError("internal-consistency", "unhandled estimator kind");
}

}  // namespace

ReplicationSummary replicate(const SimulationConfig& config) {
  if (config.replicates < 1) {
    std::ostringstream os;
    os << "replicate count " << config.replicates;
    throw ValidationError("invalid-count", os.str());
  }
  if (config.loggers.size() != config.sizes.size()) {
    std::ostringstream os;
    os << config.loggers.size() << " loggers but " << config.sizes.size() << " sizes";
    throw ValidationError("length-mismatch", os.str());
  }
  validate_environment(config.env);
  validate_policy(config.target, config.env);
  for (const auto& logger : config.loggers) validate_policy(logger, config.env);

  ExactReference ref = exact_reference(config);

  const auto R = static_cast<std::size_t>(config.replicates);
  std::vector<double> estimates(R, 0.0);
  std::int64_t fallback_count = 0;
  for (std::size_t r = 0; r < R; ++r) {
    try {
      std::uint64_t rep_seed = rng::child_seed(config.master_seed, static_cast<std::uint64_t>(r));
      MultiLoggerDataset data;
      data.loggers.reserve(config.loggers.size());
      for (std::size_t i = 0; i < config.loggers.size(); ++i) {
        data.loggers.push_back(sample_bandit_log(config.env, config.loggers[i], config.sizes[i],
                                                 rng::child_seed(rep_seed, i),
                                                 config.loggers[i].name));
      }
      estimates[r] = run_estimator(config, data, ref, fallback_count);
    } catch (const ValidationError& e) {
      std::ostringstream os;
      os << "replicate " << r << ": " << e.what();
      throw ValidationError(e.kind(), os.str());
    } catch (const DomainError& e) {
      std::ostringstream os;
      os << "replicate " << r << ": " << e.what();
      throw DomainError(e.kind(), os.str());
    }
  }

  ReplicationSummary summary;
  summary.replicates = config.replicates;
  summary.estimator_label = config.estimator.label();
  if (config.fallback_naive && config.estimator.kind == EstimatorKind::weighted &&
      config.estimator.source == WeightSource::estimated) {
    summary.fallback_replicates = fallback_count;
  }
  summary.exact_utility = ref.utility;
  summary.exact_variance = ref.variance;
  summary.empirical_mean = compensated_total(estimates) / static_cast<double>(R);
  if (R >= 2) {
    KahanSum squares;
    for (double e : estimates) {
      double d = e - summary.empirical_mean;
      squares.add(d * d);
    }
    double var = squares.value() / static_cast<double>(R - 1);
    summary.empirical_variance = var;
    summary.standard_error = std::sqrt(var / static_cast<double>(R));
  }
  if (config.keep_estimates) summary.per_replicate_estimates = std::move(estimates);
  return summary;
}

TabularPolicy make_policy_family(const Environment& env, const TabularPolicy& base, double mix) {
  if (!(mix >= 0.0 && mix <= 1.0)) {
    std::ostringstream os;
    os << "mix " << mix << " outside [0, 1]";
    throw ValidationError("mix-out-of-range", os.str());
  }
  validate_environment(env);
  validate_policy(base, env);
  double u = 1.0 / static_cast<double>(env.num_actions());
  TabularPolicy out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s@mix=%.3g", base.name.c_str(), mix);
  out.name = buf;
  out.probs = Matrix(env.num_contexts(), env.num_actions());
  for (std::size_t x = 0; x < env.num_contexts(); ++x) {
    for (std::size_t y = 0; y < env.num_actions(); ++y) {
      out.probs(x, y) = (1.0 - mix) * u + mix * base.prob(x, y);
    }
  }
  return out;
}

std::vector<SweepRow> sweep(const Environment& env, const TabularPolicy& target,
                            const TabularPolicy& logger2, const std::vector<TabularPolicy>& family,
                            const std::vector<double>& mixes, const std::vector<double>& r1_grid,
                            std::int64_t base_n2) {
  if (family.empty() || r1_grid.empty()) {
    throw ValidationError("empty-grid", "sweep needs at least one family member and one r1 value");
  }
  if (family.size() != mixes.size()) {
    std::ostringstream os;
    os << family.size() << " family members but " << mixes.size() << " mix labels";
    throw ValidationError("length-mismatch", os.str());
  }
  if (base_n2 < 1) {
    std::ostringstream os;
    os << "base n2 " << base_n2;
    throw ValidationError("invalid-count", os.str());
  }
  double sigma2 = exact::divergence(target, logger2, env);
  std::vector<SweepRow> rows;
  rows.reserve(family.size() * r1_grid.size());
  for (std::size_t f = 0; f < family.size(); ++f) {
    double sigma1 = exact::divergence(target, family[f], env);
    for (double r1 : r1_grid) {
      std::int64_t n1 = round_half_even(r1 * static_cast<double>(base_n2));
      if (n1 < 1) {
        std::ostringstream os;
        os << "r1 = " << r1 << " with base n2 = " << base_n2 << " rounds to zero records";
        throw ValidationError("invalid-count", os.str());
      }
      std::vector<TabularPolicy> both{family[f], logger2};
      std::vector<std::int64_t> sizes{n1, base_n2};
      double naive_both = exact::naive_variance(target, both, sizes, env);
      double naive_d2 = exact::naive_variance(target, {logger2}, {base_n2}, env);
      double bal = exact::balanced_variance(target, both, sizes, env);
      exact::DivergenceProfile profile = exact::make_divergence_profile(target, both, sizes, env);
      double wopt = exact::weighted_variance(profile, exact::optimal_weights(profile));
      SweepRow row;
      row.mix = mixes[f];
      row.v1 = sigma2 > 0.0 ? sigma1 / sigma2 : 0.0;
      row.r1 = static_cast<double>(n1) / static_cast<double>(base_n2);
      row.ratio_drop = naive_d2 / naive_both;
      row.ratio_bal = bal / naive_both;
      row.ratio_weight = wopt / naive_both;
      row.ratio_weight_vs_bal = wopt / bal;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace opeval::sim
