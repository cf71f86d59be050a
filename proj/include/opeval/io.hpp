#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opeval/core.hpp"
#include "opeval/estimators.hpp"
#include "opeval/sim.hpp"
#include "opeval/weights.hpp"

namespace opeval::io {

inline constexpr const char* kToolVersion = "opeval 0.1.0";

// FNV-1a 64-bit over raw bytes; good enough to attribute an output to its
// exact inputs without dragging in a crypto dependency.
std::uint64_t fnv1a64(const std::string& bytes);

// Provenance block embedded in every output document: what ran, on which
// files (with content digests), under which seed. Deliberately excludes wall
// time so identical runs emit identical documents.
struct RunManifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::uint64_t>> inputs;  // path, digest
  std::optional<std::uint64_t> seed;
};

void add_input(RunManifest& manifest, const std::string& path);

Environment load_environment(const std::string& path);
TabularPolicy load_policy(const std::string& path);
std::vector<TabularPolicy> load_policies(const std::string& path);

// Newline-delimited records grouped by logger id in first-appearance order.
// No stored policies; attach_policies adds them by name.
MultiLoggerDataset load_log(const std::string& path);

std::vector<double> load_weight_values(const std::string& path);

void attach_policies(MultiLoggerDataset& dataset, const std::vector<TabularPolicy>& policies);

struct ConfigBundle {
  sim::SimulationConfig config;
  std::vector<std::string> referenced_files;  // paths pulled in via string refs
  bool seed_provided = false;
};

ConfigBundle load_simulation_config(const std::string& path);

// JSON documents, round-trip-safe numbers, 2-decimal human summary lines
// where the quantity has one.
std::string estimate_document(const RunManifest& manifest, const estimators::EstimateReport& report);
std::string exact_document(const RunManifest& manifest, const Environment& env,
                           const TabularPolicy& target, const std::vector<TabularPolicy>& loggers,
                           const std::vector<std::int64_t>& sizes);
std::string weight_estimate_document(const RunManifest& manifest,
                                     const weights::EstimatedDivergenceProfile& profile,
                                     const exact::WeightVector& weights, bool fallback_used);
std::string simulate_document(const RunManifest& manifest, const sim::ReplicationSummary& summary);

// Pinned header v1,r1,ratio_drop,ratio_bal,ratio_weight,ratio_weight_vs_bal;
// manifest rides along as leading '#' comments.
std::string sweep_csv(const RunManifest& manifest, const std::vector<sim::SweepRow>& rows);

}  // namespace opeval::io
