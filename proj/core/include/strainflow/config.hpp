#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "strainflow/metrics.hpp"
#include "strainflow/phantom.hpp"
#include "strainflow/solver.hpp"

namespace strainflow {

// Flat "key = value" config text with repeated [inclusion] blocks. Global
// keys must precede the first block; every key after a block header belongs
// to that block until the next header. '#' and ';' start comment lines.
struct ConfigMap {
  std::map<std::string, std::string> values;
  std::vector<std::map<std::string, std::string>> inclusions;

  static ConfigMap parse_string(const std::string& text);
  static ConfigMap parse_file(const std::filesystem::path& path);

  // CLI override: "a.b=c" applied to the global table.
  void set(const std::string& key, const std::string& value);
};

// Everything one experiment needs. Only keys listed in key_help() are
// accepted; unknown keys raise invalid-input errors naming the key.
struct ExperimentConfig {
  PhantomSpec phantom;
  SolverConfig solver;
  std::vector<int> strain_windows{5, 15, 30, 40};
  MetricWindows metrics;
  std::string output_dir = "out";

  static ExperimentConfig from_config(const ConfigMap& map);

  // Every accepted global key, in canonical order; the CLI registers one
  // override flag per entry.
  static std::vector<std::string> key_names();

  // Deterministic serialization (fixed key order, %.17g) used for manifests
  // and config hashing.
  std::string canonical() const;

  static std::string key_help();
};

}  // namespace strainflow
