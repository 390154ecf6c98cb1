#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nlf {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

enum class VerdictStatus { kRefuted, kEvidencePassed };

/// Concrete counterexample: the named inputs plus the two sides of the
/// inequality that failed (`lhs relation rhs` was expected to hold).
struct Witness {
  std::vector<std::pair<std::string, std::vector<double>>> fields;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string relation;  // e.g. "<=" or ">="

  Witness& set(std::string name, std::vector<double> value) {
    fields.emplace_back(std::move(name), std::move(value));
    return *this;
  }
  /// Throws std::out_of_range for a missing field.
  std::span<const double> field(const std::string& name) const;
  double scalar(const std::string& name) const { return field(name)[0]; }
};

struct PropertyVerdict {
  std::string property;
  VerdictStatus status = VerdictStatus::kEvidencePassed;
  std::optional<Witness> witness;  // present iff refuted
  std::size_t samples = 0;
  double tolerance = 0.0;
  std::uint64_t seed = kDefaultSeed;
  std::vector<std::pair<std::string, double>> stats;
  std::vector<std::string> notes;

  bool refuted() const { return status == VerdictStatus::kRefuted; }
  bool passed() const { return status == VerdictStatus::kEvidencePassed; }
  std::optional<double> stat(const std::string& name) const;

  static PropertyVerdict refute(std::string property, Witness w, std::size_t samples, double tol, std::uint64_t seed);
  static PropertyVerdict pass(std::string property, std::size_t samples, double tol, std::uint64_t seed);
};

const char* to_string(VerdictStatus s);

}  // namespace nlf
