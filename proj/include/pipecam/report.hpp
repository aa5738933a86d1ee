#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pipecam {

/// Per-sample metric rows plus aggregates, written as CSV
/// (`id,metric,value` rows followed by an AGGREGATE section). Aggregates are
/// always recomputable from the rows they summarize.
struct ExperimentReport {
  struct Row {
    std::uint64_t id = 0;
    std::string metric;
    double value = 0.0;
  };

  std::vector<Row> rows;
  std::vector<std::pair<std::string, double>> aggregates;

  // Provenance of the run that produced the report.
  std::uint64_t config_digest = 0;
  std::uint64_t weight_digest = 0;
  std::uint64_t dataset_digest = 0;

  void add(std::uint64_t id, const std::string& metric, double value) {
    rows.push_back({id, metric, value});
  }
  void add_aggregate(const std::string& name, double value) {
    aggregates.emplace_back(name, value);
  }

  /// Mean of all rows with the given metric name; throws if there are none.
  double mean_of(const std::string& metric) const;
  double aggregate(const std::string& name) const;
  bool has_aggregate(const std::string& name) const;

  void write_csv(const std::filesystem::path& path) const;
  static ExperimentReport read_csv(const std::filesystem::path& path);
};

/// FNV-1a digest of a file's bytes (provenance fields, byte-identity checks).
std::uint64_t file_digest(const std::filesystem::path& path);

}  // namespace pipecam
