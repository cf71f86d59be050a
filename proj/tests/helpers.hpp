#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <sys/wait.h>

#include "opeval/core.hpp"
#include "opeval/estimators.hpp"
#include "opeval/exact.hpp"
#include "opeval/numeric.hpp"
#include "opeval/rng.hpp"

namespace testutil {

using namespace opeval;

inline std::string data_path(const std::string& rel) {
  return std::string(OPEVAL_DATA_DIR) + "/" + rel;
}

// ---- Table 1 instance, constructed in code so tests do not depend on io ----

inline Environment toy_env() {
  Environment env;
  env.contexts = {"x1", "x2"};
  env.actions = {"y1", "y2"};
  env.prior = {0.5, 0.5};
  env.utility = Matrix(2, 2);
  env.utility(0, 0) = 10.0;
  env.utility(0, 1) = 1.0;
  env.utility(1, 0) = 1.0;
  env.utility(1, 1) = 10.0;
  return env;
}

inline TabularPolicy make_policy(std::string name, std::vector<std::vector<double>> rows) {
  TabularPolicy p;
  p.name = std::move(name);
  p.probs = Matrix(rows.size(), rows[0].size());
  for (std::size_t x = 0; x < rows.size(); ++x) {
    for (std::size_t y = 0; y < rows[x].size(); ++y) p.probs(x, y) = rows[x][y];
  }
  return p;
}

inline TabularPolicy toy_target() { return make_policy("target", {{0.8, 0.2}, {0.2, 0.8}}); }
inline TabularPolicy toy_d1() { return make_policy("d1", {{0.2, 0.8}, {0.8, 0.2}}); }
inline TabularPolicy toy_d2() { return make_policy("d2", {{0.9, 0.1}, {0.1, 0.9}}); }

// Frozen closed-form values for the toy instance (independently derived
// fractions; see the matching assertions for the arithmetic).
inline constexpr double kToyUtility = 8.2;                      // 41/5
inline constexpr double kToyDivergence1 = 252.81;               // 25281/100
inline constexpr double kToyDivergence2 = 961.0 / 225.0;        // 4.27111...
inline constexpr double kToyNaiveBoth = 231373.0 / 3600.0;      // 64.27027...
inline constexpr double kToyBalanced = (349.0 / 99.0) * (349.0 / 99.0);  // 12.42740...
inline constexpr double kToyWeighted = 24295041.0 / 5784325.0;  // 4.20015...
inline constexpr double kToyLambda1 = 96100.0 / 5784325.0;      // 0.0166138...

// ---- Random instances for property tests ----

struct RandomInstance {
  Environment env;
  TabularPolicy target;
  std::vector<TabularPolicy> loggers;
  std::vector<std::int64_t> sizes;
};

inline std::vector<double> random_simplex_row(std::uint64_t seed, std::uint64_t tag,
                                              std::size_t k) {
  std::vector<double> row(k);
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    row[j] = 0.05 + 0.95 * rng::uniform(seed, tag, j);
    total += row[j];
  }
  for (std::size_t j = 0; j < k; ++j) row[j] /= total;
  return row;
}

inline TabularPolicy random_policy(std::uint64_t seed, std::uint64_t tag, std::string name,
                                   std::size_t nx, std::size_t ny) {
  TabularPolicy p;
  p.name = std::move(name);
  p.probs = Matrix(nx, ny);
  for (std::size_t x = 0; x < nx; ++x) {
    std::vector<double> row = random_simplex_row(seed, tag * 1000 + x, ny);
    for (std::size_t y = 0; y < ny; ++y) p.probs(x, y) = row[y];
  }
  return p;
}

// Strictly positive policies, utilities in [0, 10], |X|,|Y| in [2,5], up to 4
// loggers with sizes in [1,5].
inline RandomInstance random_instance(std::uint64_t seed) {
  RandomInstance inst;
  auto nx = static_cast<std::size_t>(2 + rng::uniform(seed, 1, 0) * 3.9999);
  auto ny = static_cast<std::size_t>(2 + rng::uniform(seed, 1, 1) * 3.9999);
  auto m = static_cast<std::size_t>(1 + rng::uniform(seed, 1, 2) * 3.9999);
  inst.env.contexts.resize(nx);
  inst.env.actions.resize(ny);
  for (std::size_t x = 0; x < nx; ++x) inst.env.contexts[x] = "x" + std::to_string(x);
  for (std::size_t y = 0; y < ny; ++y) inst.env.actions[y] = "y" + std::to_string(y);
  inst.env.prior = random_simplex_row(seed, 2, nx);
  inst.env.utility = Matrix(nx, ny);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      inst.env.utility(x, y) = 10.0 * rng::uniform(seed, 3 + x, y);
    }
  }
  inst.target = random_policy(seed, 50, "target", nx, ny);
  for (std::size_t i = 0; i < m; ++i) {
    inst.loggers.push_back(random_policy(seed, 100 + i, "logger" + std::to_string(i), nx, ny));
    inst.sizes.push_back(1 + static_cast<std::int64_t>(rng::uniform(seed, 200, i) * 4.9999));
  }
  return inst;
}

// lambda_i >= 0 with sum lambda_i n_i = 1, bounded away from degenerate.
inline exact::WeightVector random_valid_weights(std::uint64_t seed, std::uint64_t tag,
                                                const std::vector<std::int64_t>& sizes) {
  std::vector<double> g(sizes.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    g[i] = 0.1 + 0.9 * rng::uniform(seed, tag, i);
    denom += g[i] * static_cast<double>(sizes[i]);
  }
  exact::WeightVector w;
  w.sample_sizes = sizes;
  for (std::size_t i = 0; i < sizes.size(); ++i) w.weights.push_back(g[i] / denom);
  return w;
}

// ---- Exhaustive enumeration oracle ----
//
// Iterates every possible joint log outcome (each record ranges over all
// (x, y) cells, weighted by Pr(x) * pi_i(y|x)) and returns the exact mean and
// variance of the supplied estimator under that distribution.
template <typename EstimatorFn>
std::pair<double, double> enumerate_moments(const Environment& env,
                                            const std::vector<TabularPolicy>& loggers,
                                            const std::vector<std::int64_t>& sizes,
                                            EstimatorFn est) {
  struct Slot {
    std::size_t logger;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < loggers.size(); ++i) {
    for (std::int64_t j = 0; j < sizes[i]; ++j) slots.push_back({i});
  }
  const std::size_t cells = env.num_contexts() * env.num_actions();
  std::vector<std::size_t> odo(slots.size(), 0);
  KahanSum mean, second;
  while (true) {
    double prob = 1.0;
    MultiLoggerDataset data;
    data.loggers.resize(loggers.size());
    for (std::size_t i = 0; i < loggers.size(); ++i) {
      data.loggers[i].logger_id = loggers[i].name;
      data.loggers[i].policy = loggers[i];
    }
    for (std::size_t s = 0; s < slots.size(); ++s) {
      std::size_t x = odo[s] / env.num_actions();
      std::size_t y = odo[s] % env.num_actions();
      const TabularPolicy& pol = loggers[slots[s].logger];
      prob *= env.prior[x] * pol.prob(x, y);
      LogRecord r;
      r.context = static_cast<std::int64_t>(x);
      r.action = static_cast<std::int64_t>(y);
      r.reward = env.utility(x, y);
      r.propensity = pol.prob(x, y);
      data.loggers[slots[s].logger].records.push_back(r);
    }
    if (prob > 0.0) {
      double v = est(data);
      mean.add(prob * v);
      second.add(prob * v * v);
    }
    std::size_t s = 0;
    for (; s < odo.size(); ++s) {
      if (++odo[s] < cells) break;
      odo[s] = 0;
    }
    if (s == odo.size()) break;
  }
  double m = mean.value();
  return {m, second.value() - m * m};
}

// ---- Misc ----

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline CliResult run_cli(const std::string& args, const std::string& tag) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path();
  fs::path out = dir / ("opeval_" + tag + "_out.txt");
  fs::path err = dir / ("opeval_" + tag + "_err.txt");
  std::string cmd = std::string(OPEVAL_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                    err.string();
  int rc = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  result.out = slurp(out);
  result.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return result;
}

inline std::string write_temp(const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p.string();
}

}  // namespace testutil
