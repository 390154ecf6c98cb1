#pragma once

#include <string>

#include "nlf/analysis.hpp"
#include "nlf/functional.hpp"
#include "nlf/minimize.hpp"
#include "nlf/verdict.hpp"
#include "nlf/witness.hpp"

namespace nlf {

// JSON renderings; doubles are printed with round-trip precision and +∞ as
// the string "inf".
std::string to_json(const FunctionalValue& v);
std::string to_json(const PropertyVerdict& v);
std::string to_json(const WlscReport& r);
std::string to_json(const LscProbeReport& r);
std::string to_json(const MinimizeResult& r);
std::string to_json(const IntegrabilityWitness& w);
std::string to_json(const HomogeneousWitness& w);
/// Summary plus, when with_tables, the γ, g and h tables.
std::string to_json(const Decomposition& d, bool with_tables = false);

/// "x,y,w,value" rows for a (i, j, k) table such as γ or g.
std::string decomposition_table_csv(const Decomposition& d, const std::vector<double>& table);
/// "x,y,h" rows.
std::string h_table_csv(const Decomposition& d);

}  // namespace nlf
