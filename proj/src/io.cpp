#include "opeval/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "opeval/numeric.hpp"

namespace opeval::io {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("file-not-found", "cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("parse-error", path + ": " + e.what());
  }
}

const json& field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError("parse-error", path + ": missing field '" + key + "'");
  }
  return *it;
}

Matrix parse_matrix(const json& rows, const std::string& path, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw ValidationError("parse-error",
                          path + ": '" + std::string(what) + "' must be an array of rows");
  }
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t x = 0; x < rows.size(); ++x) {
    if (!rows[x].is_array() || rows[x].size() != m.cols()) {
      std::ostringstream os;
      os << path << ": '" << what << "' row " << x << " has ragged length";
      throw ValidationError("parse-error", os.str());
    }
    for (std::size_t y = 0; y < m.cols(); ++y) {
      if (!rows[x][y].is_number()) {
        std::ostringstream os;
        os << path << ": '" << what << "' entry (" << x << ", " << y << ") is not a number";
        throw ValidationError("parse-error", os.str());
      }
      m(x, y) = rows[x][y].get<double>();
    }
  }
  return m;
}

TabularPolicy parse_policy(const json& obj, const std::string& path) {
  if (!obj.is_object()) {
    throw ValidationError("parse-error", path + ": policy must be an object");
  }
  TabularPolicy p;
  const json& name = field(obj, "name", path);
  if (!name.is_string()) {
    throw ValidationError("parse-error", path + ": policy 'name' must be a string");
  }
  p.name = name.get<std::string>();
  p.probs = parse_matrix(field(obj, "probs", path), path, "probs");
  return p;
}

json manifest_json(const RunManifest& manifest) {
  json inputs = json::array();
  for (const auto& [path, digest] : manifest.inputs) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx", static_cast<unsigned long long>(digest));
    inputs.push_back(json{{"path", path}, {"digest", hex}});
  }
  json m{{"subcommand", manifest.subcommand}, {"inputs", inputs}, {"version", kToolVersion}};
  if (manifest.seed.has_value()) {
    m["seed"] = *manifest.seed;
  }
  return m;
}

std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

json weights_json(const exact::WeightVector& w) {
  return json{{"lambda", w.weights}, {"sample_sizes", w.sample_sizes}};
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void add_input(RunManifest& manifest, const std::string& path) {
  manifest.inputs.emplace_back(path, fnv1a64(read_file(path)));
}

Environment load_environment(const std::string& path) {
  json doc = parse_json(read_file(path), path);
  Environment env;
  const json& contexts = field(doc, "contexts", path);
  const json& actions = field(doc, "actions", path);
  if (!contexts.is_array() || !actions.is_array()) {
    throw ValidationError("parse-error", path + ": 'contexts'/'actions' must be arrays");
  }
  for (const auto& c : contexts) env.contexts.push_back(c.get<std::string>());
  for (const auto& a : actions) env.actions.push_back(a.get<std::string>());
  const json& prior = field(doc, "prior", path);
  if (!prior.is_array()) {
    throw ValidationError("parse-error", path + ": 'prior' must be an array");
  }
  for (const auto& p : prior) {
    if (!p.is_number()) {
      throw ValidationError("parse-error", path + ": 'prior' entries must be numbers");
    }
    env.prior.push_back(p.get<double>());
  }
  env.utility = parse_matrix(field(doc, "utility", path), path, "utility");
  validate_environment(env);
  return env;
}

TabularPolicy load_policy(const std::string& path) {
  return parse_policy(parse_json(read_file(path), path), path);
}

std::vector<TabularPolicy> load_policies(const std::string& path) {
  json doc = parse_json(read_file(path), path);
  if (!doc.is_array() || doc.empty()) {
    throw ValidationError("parse-error", path + ": expected a non-empty array of policies");
  }
  std::vector<TabularPolicy> out;
  out.reserve(doc.size());
  for (const auto& p : doc) out.push_back(parse_policy(p, path));
  return out;
}

MultiLoggerDataset load_log(const std::string& path) {
  std::string text = read_file(path);
  MultiLoggerDataset data;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::ostringstream where;
    where << path << " line " << line_no;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError("parse-error", where.str() + ": " + e.what());
    }
    const json& logger = field(rec, "logger", where.str());
    const json& x = field(rec, "x", where.str());
    const json& y = field(rec, "y", where.str());
    const json& delta = field(rec, "delta", where.str());
    const json& p = field(rec, "p", where.str());
    if (!logger.is_string() || !x.is_number_integer() || !y.is_number_integer() ||
        !delta.is_number() || !p.is_number()) {
      throw ValidationError("parse-error", where.str() + ": bad field types");
    }
    LogRecord r;
    r.context = x.get<std::int64_t>();
    r.action = y.get<std::int64_t>();
    r.reward = delta.get<double>();
    r.propensity = p.get<double>();
    std::string id = logger.get<std::string>();
    LoggerDataset* slot = nullptr;
    for (auto& l : data.loggers) {
      if (l.logger_id == id) {
        slot = &l;
        break;
      }
    }
    if (!slot) {
      data.loggers.push_back(LoggerDataset{id, std::nullopt, {}});
      slot = &data.loggers.back();
    }
    slot->records.push_back(r);
  }
  return data;
}

std::vector<double> load_weight_values(const std::string& path) {
  json doc = parse_json(read_file(path), path);
  const json& w = field(doc, "weights", path);
  if (!w.is_array() || w.empty()) {
    throw ValidationError("parse-error", path + ": 'weights' must be a non-empty array");
  }
  std::vector<double> out;
  for (const auto& v : w) {
    if (!v.is_number()) {
      throw ValidationError("parse-error", path + ": 'weights' entries must be numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

void attach_policies(MultiLoggerDataset& dataset, const std::vector<TabularPolicy>& policies) {
  for (auto& logger : dataset.loggers) {
    for (const auto& p : policies) {
      if (p.name == logger.logger_id) {
        logger.policy = p;
        break;
      }
    }
  }
}

ConfigBundle load_simulation_config(const std::string& path) {
  json doc = parse_json(read_file(path), path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  ConfigBundle bundle;

  auto resolve = [&](const json& node, const char* what) -> json {
    if (node.is_string()) {
      std::string ref = (base / node.get<std::string>()).string();
      bundle.referenced_files.push_back(ref);
      return parse_json(read_file(ref), ref);
    }
    if (node.is_object()) return node;
    throw ValidationError("parse-error",
                          path + ": '" + std::string(what) + "' must be an object or a file path");
  };

  json env_node = resolve(field(doc, "environment", path), "environment");
  {
    // Route through the environment loader's checks without re-reading.
    Environment env;
    const json& contexts = field(env_node, "contexts", path);
    const json& actions = field(env_node, "actions", path);
    for (const auto& c : contexts) env.contexts.push_back(c.get<std::string>());
    for (const auto& a : actions) env.actions.push_back(a.get<std::string>());
    for (const auto& p : field(env_node, "prior", path)) env.prior.push_back(p.get<double>());
    env.utility = parse_matrix(field(env_node, "utility", path), path, "utility");
    validate_environment(env);
    bundle.config.env = std::move(env);
  }
  bundle.config.target = parse_policy(resolve(field(doc, "target", path), "target"), path);

  const json& loggers = field(doc, "loggers", path);
  if (!loggers.is_array() || loggers.empty()) {
    throw ValidationError("parse-error", path + ": 'loggers' must be a non-empty array");
  }
  for (const auto& entry : loggers) {
    bundle.config.loggers.push_back(parse_policy(resolve(field(entry, "policy", path), "policy"), path));
    const json& size = field(entry, "size", path);
    if (!size.is_number_integer()) {
      throw ValidationError("parse-error", path + ": logger 'size' must be an integer");
    }
    bundle.config.sizes.push_back(size.get<std::int64_t>());
  }

  const json& estimator = field(doc, "estimator", path);
  std::string kind = estimator.is_string() ? estimator.get<std::string>() : "";
  if (kind == "naive") {
    bundle.config.estimator.kind = sim::EstimatorKind::naive;
  } else if (kind == "balanced") {
    bundle.config.estimator.kind = sim::EstimatorKind::balanced;
  } else if (kind == "weighted") {
    bundle.config.estimator.kind = sim::EstimatorKind::weighted;
    const json& w = field(doc, "weights", path);
    if (w.is_string() && w.get<std::string>() == "exact") {
      bundle.config.estimator.source = sim::WeightSource::exact_optimal;
    } else if (w.is_string() && w.get<std::string>() == "estimated") {
      bundle.config.estimator.source = sim::WeightSource::estimated;
    } else if (w.is_array()) {
      bundle.config.estimator.source = sim::WeightSource::explicit_lambda;
      for (const auto& v : w) bundle.config.estimator.lambda.push_back(v.get<double>());
    } else {
      throw ValidationError("parse-error",
                            path + ": 'weights' must be \"exact\", \"estimated\", or an array");
    }
  } else {
    throw ValidationError("parse-error",
                          path + ": 'estimator' must be \"naive\", \"balanced\", or \"weighted\"");
  }

  const json& replicates = field(doc, "replicates", path);
  if (!replicates.is_number_integer()) {
    throw ValidationError("parse-error", path + ": 'replicates' must be an integer");
  }
  bundle.config.replicates = replicates.get<std::int64_t>();

  if (doc.contains("seed")) {
    bundle.config.master_seed = doc["seed"].get<std::uint64_t>();
    bundle.seed_provided = true;
  }
  if (doc.contains("keep_estimates")) {
    bundle.config.keep_estimates = doc["keep_estimates"].get<bool>();
  }
  if (doc.contains("fallback")) {
    const json& f = doc["fallback"];
    if (!f.is_string() || f.get<std::string>() != "naive") {
      throw ValidationError("parse-error", path + ": 'fallback' must be \"naive\"");
    }
    bundle.config.fallback_naive = true;
  }
  return bundle;
}

std::string estimate_document(const RunManifest& manifest, const estimators::EstimateReport& report) {
  json doc{{"manifest", manifest_json(manifest)},
           {"estimator", report.estimator_name},
           {"estimate", report.estimate},
           {"estimate_2dp", two_decimals(report.estimate)},
           {"per_logger_contribution", report.per_logger_contribution},
           {"total_records", report.total_records}};
  if (report.weights_used.has_value()) {
    doc["weights_used"] = weights_json(*report.weights_used);
  }
  return dump(doc);
}

std::string exact_document(const RunManifest& manifest, const Environment& env,
                           const TabularPolicy& target, const std::vector<TabularPolicy>& loggers,
                           const std::vector<std::int64_t>& sizes) {
  double utility = exact::exact_utility(target, env);
  exact::DivergenceProfile profile = exact::make_divergence_profile(target, loggers, sizes, env);
  double naive = exact::naive_variance(target, loggers, sizes, env);
  double balanced = exact::balanced_variance(target, loggers, sizes, env);
  exact::WeightVector opt = exact::optimal_weights(profile);
  double weighted = exact::weighted_variance(profile, opt);
  double gamma = exact::reduction_ratio(profile);

  json logger_block = json::array();
  for (std::size_t i = 0; i < loggers.size(); ++i) {
    logger_block.push_back(json{{"name", loggers[i].name},
                                {"size", sizes[i]},
                                {"divergence", profile.divergences[i]},
                                {"divergence_2dp", two_decimals(profile.divergences[i])},
                                {"optimal_lambda", opt.weights[i]}});
  }
  json doc{{"manifest", manifest_json(manifest)},
           {"target", target.name},
           {"utility", utility},
           {"utility_2dp", two_decimals(utility)},
           {"loggers", logger_block},
           {"naive_variance", naive},
           {"naive_variance_2dp", two_decimals(naive)},
           {"balanced_variance", balanced},
           {"balanced_variance_2dp", two_decimals(balanced)},
           {"weighted_variance", weighted},
           {"weighted_variance_2dp", two_decimals(weighted)},
           {"reduction_ratio", gamma},
           {"optimal_weights", weights_json(opt)}};
  return dump(doc);
}

std::string weight_estimate_document(const RunManifest& manifest,
                                     const weights::EstimatedDivergenceProfile& profile,
                                     const exact::WeightVector& weights, bool fallback_used) {
  json logger_block = json::array();
  for (std::size_t i = 0; i < profile.estimates.size(); ++i) {
    logger_block.push_back(json{{"estimated_divergence", profile.estimates[i]},
                                {"sample_size", profile.sample_sizes[i]},
                                {"floor_hit", static_cast<bool>(profile.floor_hit[i])},
                                {"lambda", weights.weights[i]}});
  }
  json doc{{"manifest", manifest_json(manifest)},
           {"loggers", logger_block},
           {"weights", weights_json(weights)},
           {"fallback_used", fallback_used}};
  return dump(doc);
}

std::string simulate_document(const RunManifest& manifest, const sim::ReplicationSummary& summary) {
  json doc{{"manifest", manifest_json(manifest)},
           {"estimator", summary.estimator_label},
           {"replicates", summary.replicates},
           {"empirical_mean", summary.empirical_mean},
           {"empirical_mean_2dp", two_decimals(summary.empirical_mean)},
           {"exact_utility", summary.exact_utility},
           {"exact_variance", summary.exact_variance}};
  if (summary.empirical_variance.has_value()) {
    doc["empirical_variance"] = *summary.empirical_variance;
    doc["standard_error"] = *summary.standard_error;
  } else {
    doc["empirical_variance"] = nullptr;
    doc["standard_error"] = nullptr;
    doc["insufficient_replicates"] = true;
  }
  if (summary.fallback_replicates.has_value()) {
    doc["fallback_replicates"] = *summary.fallback_replicates;
  }
  if (summary.per_replicate_estimates.has_value()) {
    doc["per_replicate_estimates"] = *summary.per_replicate_estimates;
  }
  return dump(doc);
}

std::string sweep_csv(const RunManifest& manifest, const std::vector<sim::SweepRow>& rows) {
  std::ostringstream out;
  json m = manifest_json(manifest);
  out << "# " << m.dump() << "\n";
  out << "v1,r1,ratio_drop,ratio_bal,ratio_weight,ratio_weight_vs_bal\n";
  char buf[256];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.v1, row.r1,
                  row.ratio_drop, row.ratio_bal, row.ratio_weight, row.ratio_weight_vs_bal);
    out << buf;
  }
  return out.str();
}

}  // namespace opeval::io
