#include "opeval/estimators.hpp"

#include <set>
#include <sstream>

#include "opeval/numeric.hpp"

namespace opeval::estimators {

namespace {

void check_records(const MultiLoggerDataset& dataset, const TabularPolicy& target) {
  if (dataset.loggers.empty() || dataset.total_records() == 0) {
    throw DomainError("empty-dataset", "no records to evaluate");
  }
  for (const auto& logger : dataset.loggers) {
    for (std::size_t j = 0; j < logger.records.size(); ++j) {
      const LogRecord& r = logger.records[j];
      if (r.context < 0 || r.context >= static_cast<std::int64_t>(target.probs.rows()) ||
          r.action < 0 || r.action >= static_cast<std::int64_t>(target.probs.cols())) {
        std::ostringstream os;
        os << "logger '" << logger.logger_id << "' record " << j << " has indices (" << r.context
           << ", " << r.action << ") outside the target policy's " << target.probs.rows() << "x"
           << target.probs.cols();
        throw ValidationError("dimension-mismatch", os.str());
      }
      if (r.propensity <= 0.0) {
        std::ostringstream os;
        os << "logger '" << logger.logger_id << "' record " << j << " has propensity "
           << r.propensity;
        throw ValidationError("invalid-propensity", os.str());
      }
    }
  }
}

// Shared core of all three estimators: per-logger compensated sums of
// reward * target / denominator in record order, scaled per logger, then
// summed in logger order. `avg` switches the denominator from the logged
// propensity to the average policy.
EstimateReport accumulate(const MultiLoggerDataset& dataset, const TabularPolicy& target,
                          const std::vector<double>& scales, const TabularPolicy* avg,
                          std::string name) {
  EstimateReport report;
  report.estimator_name = std::move(name);
  report.total_records = dataset.total_records();
  report.per_logger_contribution.reserve(dataset.loggers.size());
  KahanSum total;
  for (std::size_t i = 0; i < dataset.loggers.size(); ++i) {
    const LoggerDataset& logger = dataset.loggers[i];
    KahanSum sum;
    for (const LogRecord& r : logger.records) {
      const auto x = static_cast<std::size_t>(r.context);
      const auto y = static_cast<std::size_t>(r.action);
      double num = r.reward * target.prob(x, y);
      if (num == 0.0) continue;
      double denom = avg ? avg->prob(x, y) : r.propensity;
      if (avg && denom <= 0.0) {
        std::ostringstream os;
        os << "average policy is zero at (" << x << ", " << y << ") logged by '"
           << logger.logger_id << "'";
        throw DomainError("zero-average-propensity", os.str());
      }
      sum.add(num / denom);
    }
    double contribution = scales[i] * sum.value();
    report.per_logger_contribution.push_back(contribution);
    total.add(contribution);
  }
  report.estimate = total.value();
  return report;
}

}  // namespace

EstimateReport naive_ips(const MultiLoggerDataset& dataset, const TabularPolicy& target) {
  check_records(dataset, target);
  double inv_n = 1.0 / static_cast<double>(dataset.total_records());
  std::vector<double> scales(dataset.loggers.size(), inv_n);
  return accumulate(dataset, target, scales, nullptr, "naive");
}

EstimateReport balanced_ips(const MultiLoggerDataset& dataset, const TabularPolicy& target) {
  check_records(dataset, target);
  TabularPolicy avg = average_policy(dataset);
  double inv_n = 1.0 / static_cast<double>(dataset.total_records());
  std::vector<double> scales(dataset.loggers.size(), inv_n);
  return accumulate(dataset, target, scales, &avg, "balanced");
}

EstimateReport weighted_ips(const MultiLoggerDataset& dataset, const TabularPolicy& target,
                            const exact::WeightVector& weights) {
  check_records(dataset, target);
  if (weights.weights.size() != dataset.loggers.size()) {
    std::ostringstream os;
    os << dataset.loggers.size() << " loggers but " << weights.weights.size() << " weights";
    throw DomainError("length-mismatch", os.str());
  }
  exact::validate_weights(weights);
  for (std::size_t i = 0; i < dataset.loggers.size(); ++i) {
    if (weights.sample_sizes[i] != dataset.loggers[i].size()) {
      std::ostringstream os;
      os << "weights carry n[" << i << "] = " << weights.sample_sizes[i] << " but logger '"
         << dataset.loggers[i].logger_id << "' has " << dataset.loggers[i].size() << " records";
      throw DomainError("invalid-weights", os.str());
    }
  }
  EstimateReport report = accumulate(dataset, target, weights.weights, nullptr, "weighted");
  report.weights_used = weights;
  return report;
}

EstimateReport weighted_ips_optimal(const MultiLoggerDataset& dataset, const TabularPolicy& target,
                                    const exact::DivergenceProfile& profile) {
  exact::WeightVector w = exact::optimal_weights(profile);
  EstimateReport report = weighted_ips(dataset, target, w);
  report.estimator_name = "weighted-optimal";
  return report;
}

MultiLoggerDataset drop_loggers(const MultiLoggerDataset& dataset,
                                const std::vector<std::string>& keep_ids) {
  if (keep_ids.empty()) {
    throw DomainError("empty-keep-set", "no logger ids to keep");
  }
  std::set<std::string> keep(keep_ids.begin(), keep_ids.end());
  for (const auto& id : keep) {
    bool found = false;
    for (const auto& logger : dataset.loggers) {
      if (logger.logger_id == id) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw DomainError("unknown-logger-id", "logger '" + id + "' is not in the dataset");
    }
  }
  MultiLoggerDataset out;
  for (const auto& logger : dataset.loggers) {
    if (keep.count(logger.logger_id)) out.loggers.push_back(logger);
  }
  return out;
}

}  // namespace opeval::estimators
