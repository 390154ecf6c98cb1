#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nlf/sampler.hpp"
#include "nlf/verdict.hpp"

namespace nlf {

std::span<const double> Witness::field(const std::string& name) const {
  for (const auto& [k, v] : fields) {
    if (k == name) return v;
  }
  throw std::out_of_range("witness has no field '" + name + "'");
}

std::optional<double> PropertyVerdict::stat(const std::string& name) const {
  for (const auto& [k, v] : stats) {
    if (k == name) return v;
  }
  return std::nullopt;
}

PropertyVerdict PropertyVerdict::refute(std::string property, Witness w, std::size_t samples, double tol,
                                        std::uint64_t seed) {
  PropertyVerdict v;
  v.property = std::move(property);
  v.status = VerdictStatus::kRefuted;
  v.witness = std::move(w);
  v.samples = samples;
  v.tolerance = tol;
  v.seed = seed;
  return v;
}

PropertyVerdict PropertyVerdict::pass(std::string property, std::size_t samples, double tol, std::uint64_t seed) {
  PropertyVerdict v;
  v.property = std::move(property);
  v.status = VerdictStatus::kEvidencePassed;
  v.samples = samples;
  v.tolerance = tol;
  v.seed = seed;
  return v;
}

const char* to_string(VerdictStatus s) {
  return s == VerdictStatus::kRefuted ? "refuted" : "evidence-passed";
}

void Rng::point_in(const Domain& d, std::span<double> out) {
  const bool towards_face = (next() & 3u) == 0;
  for (std::size_t j = 0; j < d.dim(); ++j) {
    const auto& iv = d.axis(j);
    double t = uniform();
    if (towards_face) {
      // log-uniform distance to a face, down to 2^-40 of the axis length
      const double dist = std::exp2(-40.0 * uniform());
      t = (next() & 1u) ? dist : 1.0 - dist;
    }
    t = std::clamp(t, 1e-15, 1.0 - 1e-15);
    out[j] = iv.lo + t * iv.length();
  }
}

double Rng::mixed_scalar() {
  switch (next() % 4) {
    case 0: return uniform(-1.0, 1.0);
    case 1: return uniform(-4.0, 4.0);
    case 2: return uniform(-16.0, 16.0);
    default: return sign() * std::pow(10.0, uniform(-6.0, 2.0));
  }
}

void Rng::mixed_vector(std::span<double> out) {
  for (double& v : out) v = mixed_scalar();
}

}  // namespace nlf
