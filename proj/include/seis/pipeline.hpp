#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "seis/config.hpp"
#include "seis/scenario.hpp"

namespace seis {

inline constexpr const char* kVersion = "0.1.0";

/// CL_d-weighted outage surrogate: sum over failed d of CL_d * t_d.
EnsEstimator surrogate_ens(const Network& network, const std::vector<double>& curtailed_by_component);
/// Timeline ENS when every failed component is back after its own repair duration.
EnsEstimator timeline_ens(const Network& network);

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct ManifestCheck {
  bool previous_found = false;
  bool comparable = false;  // same configuration hash and seed
  std::vector<std::string> changed;
  std::vector<std::string> missing;
  bool ok() const { return changed.empty() && missing.empty(); }
};

/// Re-hashes every file listed in dir/manifest.json.
ManifestCheck verify_manifest(const std::string& dir);

struct PipelineResult {
  std::string output;
  std::vector<ManifestEntry> files;
  ManifestCheck rerun;  // against the manifest found before this run
};

/// gen -> reduce -> dispatch per retained scenario -> timelines -> reports, plus manifest.json and
/// the timing.json sidecar. A rerun over an earlier output with the same configuration and seed
/// throws InternalError if any hashed artifact changed.
PipelineResult run_pipeline(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace seis
