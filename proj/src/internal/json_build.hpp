#pragma once

#include <nlohmann/json.hpp>

#include "nlf/serialize.hpp"

namespace nlf::detail {

using nlohmann::ordered_json;

ordered_json number(double v);
ordered_json numbers(std::span<const double> v);
ordered_json json_of(const FunctionalValue& v);
ordered_json json_of(const PropertyVerdict& v);
ordered_json json_of(const WlscReport& r);
ordered_json json_of(const LscProbeReport& r);
ordered_json json_of(const MinimizeResult& r);
ordered_json json_of(const IntegrabilityWitness& w);
ordered_json json_of(const HomogeneousWitness& w);
ordered_json json_of(const Decomposition& d, bool with_tables);

}  // namespace nlf::detail
