#pragma once

#include <string>
#include <vector>

namespace nlf {

/// One scripted reproduction of a worked example: what is claimed, what the
/// toolkit observed, and the machine-readable details as a JSON object.
struct ReproResult {
  std::string id;
  std::string claim;
  std::string expected;  // qualitative outcome, e.g. "violated" or "holds"
  std::string observed;
  bool matches = false;
  /// The expected outcome is itself a refutation or violation.
  bool adverse = false;
  std::string json;
};

const std::vector<std::string>& repro_ids();
/// Throws Error(kUnknownName) for an id not in repro_ids().
ReproResult run_repro(const std::string& id);

}  // namespace nlf
