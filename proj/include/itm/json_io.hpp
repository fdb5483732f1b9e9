#pragma once

#include <json.hpp>

#include "itm/billiards.hpp"
#include "itm/bt.hpp"
#include "itm/error.hpp"
#include "itm/stabilizer.hpp"

namespace itm {

using Json = nlohmann::ordered_json;

// Rationals travel as reduced "p/q" strings; JSON integers are accepted on input,
// floating-point numbers never.
Json rational_json(const Rational& x);
Rational rational_from(const Json& j, const std::string& what);
Json interval_json(const HalfOpenInterval& iv);
Json interval_set_json(const IntervalSet& s);

Json map_json(const ITMap& m);
Json map_json(const ExtendedITMap& m);
// Schema only; validation is the caller's business. Throws Parse.
ITMap map_from_json(const Json& j);
ExtendedITMap extended_map_from_json(const Json& j);
bool is_extended_map_json(const Json& j);
// Parses and validates; InvalidMap carries the violated constraints.
ITMap checked_map_from_json(const Json& j);

Json attractor_json(const AttractorResult& a);
Json return_map_json(const ReturnMapData& rmd);
Json verdict_json(const Verdict& v);
Json stability_json(const StabilityReport& rep);
// attractor fields, stable flag, verdicts and per-component return maps.
Json classify_json(const ITMap& m, long budget = -1);
// classify_json plus discontinuity orbits and the certified δ₀.
Json report_json(const ITMap& m, long budget = -1);

Json step_json(const StabilizationStep& s);
Json trace_json(const StabilizationTrace& t);
StabilizationTrace trace_from_json(const Json& j);
Json stabilization_json(const StabilizationResult& r);

Json table_json(const BilliardTable& t);
BilliardTable table_from_json(const Json& j);
Json events_json(const std::vector<BilliardEvent>& ev);
Json billiard_return_json(const BilliardReturn& br);

Json cell_json(const ScanCell& c);
Json scan_json(const ScanResult& sr);

Json error_json(const Error& e);
const char* error_class_name(ErrorClass c);

// Throws Parse with the position of the syntax error.
Json parse_json(const std::string& text);

}  // namespace itm
