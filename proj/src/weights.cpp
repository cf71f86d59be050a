#include "opeval/weights.hpp"

#include <sstream>

#include "opeval/numeric.hpp"

namespace opeval::weights {

double estimate_divergence(const LoggerDataset& logger, const TabularPolicy& target) {
  const std::int64_t n = logger.size();
  if (n < 2) {
    std::ostringstream os;
    os << "logger '" << logger.logger_id << "' has " << n << " records, need at least 2";
    throw DomainError("insufficient-samples", os.str());
  }
  std::vector<double> values;
  values.reserve(logger.records.size());
  for (std::size_t j = 0; j < logger.records.size(); ++j) {
    const LogRecord& r = logger.records[j];
    if (r.propensity <= 0.0) {
      std::ostringstream os;
      os << "logger '" << logger.logger_id << "' record " << j << " has propensity " << r.propensity;
      throw ValidationError("invalid-propensity", os.str());
    }
    double num = r.reward * target.prob(static_cast<std::size_t>(r.context),
                                        static_cast<std::size_t>(r.action));
    values.push_back(num == 0.0 ? 0.0 : num / r.propensity);
  }
  double mean = compensated_total(values) / static_cast<double>(n);
  KahanSum squares;
  for (double v : values) {
    double d = v - mean;
    squares.add(d * d);
  }
  return squares.value() / static_cast<double>(n - 1);
}

EstimatedDivergenceProfile estimate_profile(const MultiLoggerDataset& dataset,
                                            const TabularPolicy& target) {
  if (dataset.loggers.empty()) {
    throw DomainError("empty-dataset", "no loggers to estimate from");
  }
  EstimatedDivergenceProfile p;
  for (const auto& logger : dataset.loggers) {
    double est = estimate_divergence(logger, target);
    p.floor_hit.push_back(est <= exact::kZeroDivergenceFloor);
    p.estimates.push_back(est);
    p.sample_sizes.push_back(logger.size());
  }
  return p;
}

exact::WeightVector weights_from_profile(const EstimatedDivergenceProfile& profile) {
  for (std::size_t i = 0; i < profile.estimates.size(); ++i) {
    if (profile.floor_hit[i]) {
      std::ostringstream os;
      os << "estimated divergence[" << i << "] = " << profile.estimates[i]
         << " is at or below the floor " << exact::kZeroDivergenceFloor;
      throw DomainError("zero-divergence-estimate", os.str());
    }
  }
  exact::DivergenceProfile exact_profile;
  exact_profile.divergences = profile.estimates;
  exact_profile.sample_sizes = profile.sample_sizes;
  exact::finish_profile(exact_profile);
  return exact::optimal_weights(exact_profile);
}

exact::WeightVector estimate_weights(const MultiLoggerDataset& dataset,
                                     const TabularPolicy& target) {
  return weights_from_profile(estimate_profile(dataset, target));
}

}  // namespace opeval::weights
