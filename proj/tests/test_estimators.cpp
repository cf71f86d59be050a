#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "opeval/errors.hpp"
#include "opeval/estimators.hpp"
#include "opeval/exact.hpp"
#include "opeval/sim.hpp"

using namespace opeval;
using namespace testutil;

namespace {

// The checked-in two-record log: d1 saw (x1, y1) with payoff 10 at propensity
// 0.2, d2 saw (x1, y2) with payoff 1 at propensity 0.1.
MultiLoggerDataset toy_log() {
  MultiLoggerDataset data;
  LoggerDataset d1;
  d1.logger_id = "d1";
  d1.policy = toy_d1();
  d1.records.push_back({0, 0, 10.0, 0.2});
  data.loggers.push_back(d1);
  LoggerDataset d2;
  d2.logger_id = "d2";
  d2.policy = toy_d2();
  d2.records.push_back({0, 1, 1.0, 0.1});
  data.loggers.push_back(d2);
  return data;
}

}  // namespace

TEST_CASE("naive estimate on the toy log is (40 + 2) / 2") {
  estimators::EstimateReport r = estimators::naive_ips(toy_log(), toy_target());
  CHECK(std::abs(r.estimate - 21.0) <= 1e-12);
  CHECK(r.total_records == 2);
  CHECK(r.estimator_name == "naive");
  REQUIRE(r.per_logger_contribution.size() == 2);
  CHECK(std::abs(r.per_logger_contribution[0] - 20.0) <= 1e-12);
  CHECK(std::abs(r.per_logger_contribution[1] - 1.0) <= 1e-12);
}

TEST_CASE("balanced estimate replaces propensities by the mixture") {
  estimators::EstimateReport r = estimators::balanced_ips(toy_log(), toy_target());
  // (10*0.8/0.55 + 1*0.2/0.45) / 2 = 742/99.
  CHECK(std::abs(r.estimate - 742.0 / 99.0) <= 1e-12);
  CHECK(r.estimator_name == "balanced");
}

TEST_CASE("balanced needs stored policies") {
  MultiLoggerDataset data = toy_log();
  data.loggers[0].policy.reset();
  try {
    estimators::balanced_ips(data, toy_target());
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.kind() == "missing-policy");
  }
}

TEST_CASE("weighted estimate with the optimal coefficients") {
  Environment env = toy_env();
  exact::DivergenceProfile prof =
      exact::make_divergence_profile(toy_target(), {toy_d1(), toy_d2()}, {1, 1}, env);
  estimators::EstimateReport r = estimators::weighted_ips_optimal(toy_log(), toy_target(), prof);
  // lambda* = (96100/5784325, 1 - that); estimate = 40 l1 + 2 l2 = 2 + 38 l1.
  CHECK(std::abs(r.estimate - (2.0 + 38.0 * kToyLambda1)) <= 1e-12);
  CHECK(std::abs(r.estimate - 2.6313) <= 1e-4);
  CHECK(r.estimator_name == "weighted-optimal");
  REQUIRE(r.weights_used.has_value());
  CHECK(std::abs(r.weights_used->weights[0] - kToyLambda1) <= 1e-12);
}

TEST_CASE("weighted with uniform coefficients is bit-identical to naive") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomInstance inst = random_instance(seed);
    MultiLoggerDataset data;
    std::vector<std::int64_t> sizes;
    for (std::size_t i = 0; i < inst.loggers.size(); ++i) {
      std::int64_t count = 5 + static_cast<std::int64_t>(i);
      data.loggers.push_back(sim::sample_bandit_log(inst.env, inst.loggers[i], count,
                                                    rng::child_seed(seed, i),
                                                    inst.loggers[i].name));
      sizes.push_back(count);
    }
    double naive = estimators::naive_ips(data, inst.target).estimate;
    double weighted =
        estimators::weighted_ips(data, inst.target, exact::uniform_weights(sizes)).estimate;
    CHECK(naive == weighted);  // same arithmetic path, exact equality expected
  }
}

TEST_CASE("balanced on a single logger is bit-identical to naive") {
  for (std::uint64_t seed = 40; seed < 60; ++seed) {
    RandomInstance inst = random_instance(seed);
    MultiLoggerDataset data;
    data.loggers.push_back(
        sim::sample_bandit_log(inst.env, inst.loggers[0], 17, seed, inst.loggers[0].name));
    double naive = estimators::naive_ips(data, inst.target).estimate;
    double balanced = estimators::balanced_ips(data, inst.target).estimate;
    CHECK(naive == balanced);
  }
}

TEST_CASE("records the target never plays contribute exactly zero") {
  Environment env = toy_env();
  TabularPolicy avoiding = make_policy("t", {{0.0, 1.0}, {0.3, 0.7}});
  MultiLoggerDataset data;
  LoggerDataset d;
  d.logger_id = "d";
  d.records.push_back({0, 0, 10.0, 1e-9});  // huge importance ratio if divided
  data.loggers.push_back(d);
  estimators::EstimateReport r = estimators::naive_ips(data, avoiding);
  CHECK(r.estimate == 0.0);
}

TEST_CASE("estimate equals the sum of per-logger contributions") {
  for (std::uint64_t seed = 70; seed < 90; ++seed) {
    RandomInstance inst = random_instance(seed);
    MultiLoggerDataset data;
    for (std::size_t i = 0; i < inst.loggers.size(); ++i) {
      data.loggers.push_back(sim::sample_bandit_log(inst.env, inst.loggers[i], 9,
                                                    rng::child_seed(seed, i),
                                                    inst.loggers[i].name));
    }
    estimators::EstimateReport r = estimators::naive_ips(data, inst.target);
    KahanSum s;
    for (double c : r.per_logger_contribution) s.add(c);
    CHECK(std::abs(s.value() - r.estimate) <= 1e-12 * std::max(1.0, std::abs(r.estimate)));
    CHECK(r.total_records == static_cast<std::int64_t>(9 * inst.loggers.size()));
  }
}

TEST_CASE("estimator input checks") {
  SUBCASE("empty dataset") {
    MultiLoggerDataset data;
    try {
      estimators::naive_ips(data, toy_target());
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(e.kind() == "empty-dataset");
    }
  }
  SUBCASE("record indices outside the target table") {
    MultiLoggerDataset data = toy_log();
    data.loggers[0].records[0].context = 5;
    CHECK_THROWS_AS(estimators::naive_ips(data, toy_target()), ValidationError);
  }
  SUBCASE("nonpositive propensity") {
    MultiLoggerDataset data = toy_log();
    data.loggers[1].records[0].propensity = 0.0;
    try {
      estimators::naive_ips(data, toy_target());
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.kind() == "invalid-propensity");
    }
  }
  SUBCASE("weight vector invariants are enforced") {
    exact::WeightVector bad;
    bad.weights = {0.5, 0.2};
    bad.sample_sizes = {1, 1};
    try {
      estimators::weighted_ips(toy_log(), toy_target(), bad);
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(e.kind() == "invalid-weights");
    }
  }
  SUBCASE("weight vector length must match the loggers") {
    exact::WeightVector w = exact::uniform_weights({2});
    try {
      estimators::weighted_ips(toy_log(), toy_target(), w);
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(e.kind() == "length-mismatch");
    }
  }
  SUBCASE("weight sample sizes must match the logger record counts") {
    exact::WeightVector w = exact::uniform_weights({2, 2});
    try {
      estimators::weighted_ips(toy_log(), toy_target(), w);
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(e.kind() == "invalid-weights");
    }
  }
}

TEST_CASE("drop_loggers keeps requested loggers in original order") {
  MultiLoggerDataset data = toy_log();
  MultiLoggerDataset only_d2 = estimators::drop_loggers(data, {"d2"});
  REQUIRE(only_d2.loggers.size() == 1);
  CHECK(only_d2.loggers[0].logger_id == "d2");
  CHECK(std::abs(estimators::naive_ips(only_d2, toy_target()).estimate - 2.0) <= 1e-12);

  MultiLoggerDataset both = estimators::drop_loggers(data, {"d2", "d1"});
  REQUIRE(both.loggers.size() == 2);
  CHECK(both.loggers[0].logger_id == "d1");  // original order, not request order
  CHECK(both.loggers[1].logger_id == "d2");

  try {
    estimators::drop_loggers(data, {"nope"});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.kind() == "unknown-logger-id");
  }
  try {
    estimators::drop_loggers(data, {});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.kind() == "empty-keep-set");
  }
}

TEST_CASE("toy-instance enumeration: all three estimators are unbiased with the stated variance") {
  Environment env = toy_env();
  std::vector<TabularPolicy> loggers = {toy_d1(), toy_d2()};
  std::vector<std::int64_t> sizes = {1, 1};
  TabularPolicy target = toy_target();
  exact::DivergenceProfile prof = exact::make_divergence_profile(target, loggers, sizes, env);
  exact::WeightVector opt = exact::optimal_weights(prof);

  auto [naive_mean, naive_var] = enumerate_moments(
      env, loggers, sizes,
      [&](const MultiLoggerDataset& d) { return estimators::naive_ips(d, target).estimate; });
  CHECK(std::abs(naive_mean - 8.2) <= 1e-9);
  CHECK(std::abs(naive_var - kToyNaiveBoth) <= 1e-9);

  auto [bal_mean, bal_var] = enumerate_moments(
      env, loggers, sizes,
      [&](const MultiLoggerDataset& d) { return estimators::balanced_ips(d, target).estimate; });
  CHECK(std::abs(bal_mean - 8.2) <= 1e-9);
  CHECK(std::abs(bal_var - kToyBalanced) <= 1e-9);

  auto [w_mean, w_var] = enumerate_moments(env, loggers, sizes, [&](const MultiLoggerDataset& d) {
    return estimators::weighted_ips(d, target, opt).estimate;
  });
  CHECK(std::abs(w_mean - 8.2) <= 1e-9);
  CHECK(std::abs(w_var - kToyWeighted) <= 1e-9);
}
