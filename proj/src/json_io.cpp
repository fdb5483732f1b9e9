#include "itm/json_io.hpp"

namespace itm {

namespace {

const Json& field(const Json& j, const char* key, const std::string& what)
{
    if (!j.is_object() || !j.contains(key))
        throw Error(ErrorCode::Parse, what + ": missing field \"" + key + "\"");
    return j.at(key);
}

std::vector<Rational> rational_array(const Json& j, const std::string& what)
{
    if (!j.is_array()) throw Error(ErrorCode::Parse, what + " must be an array");
    std::vector<Rational> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(rational_from(j[i], what + "[" + std::to_string(i) + "]"));
    return out;
}

Json rational_array_json(const std::vector<Rational>& v)
{
    Json a = Json::array();
    for (const auto& x : v) a.push_back(rational_json(x));
    return a;
}

Json hits_json(const std::vector<ChainHit>& hits)
{
    Json a = Json::array();
    for (const auto& h : hits) a.push_back({{"disc", h.disc.str()}, {"time", h.time}});
    return a;
}

Json boundary_json(const BoundaryOrbit& b)
{
    return {{"point", b.point.str()},
            {"chain", hits_json(b.chain)},
            {"return_time", b.return_time},
            {"returned", b.returned.str()}};
}

const char* orbit_tag_name(OrbitTag t)
{
    switch (t) {
    case OrbitTag::Precritical: return "precritical";
    case OrbitTag::Preperiodic: return "preperiodic";
    case OrbitTag::Accumulation: return "accumulation";
    }
    return "?";
}

std::string get_string(const Json& j, const std::string& what)
{
    if (!j.is_string()) throw Error(ErrorCode::Parse, what + " must be a string");
    return j.get<std::string>();
}

long get_long(const Json& j, const std::string& what)
{
    if (!j.is_number_integer()) throw Error(ErrorCode::Parse, what + " must be an integer");
    return j.get<long>();
}

}  // namespace

Json rational_json(const Rational& x) { return x.str(); }

Rational rational_from(const Json& j, const std::string& what)
{
    if (j.is_string()) {
        try {
            return Rational::parse(j.get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorCode::Parse, what + ": " + e.what());
        }
    }
    if (j.is_number_integer()) return Rational(j.get<long long>());
    throw Error(ErrorCode::Parse, what + " must be a \"p/q\" string");
}

Json interval_json(const HalfOpenInterval& iv) { return Json::array({rational_json(iv.left), rational_json(iv.right)}); }

Json interval_set_json(const IntervalSet& s)
{
    Json a = Json::array();
    for (const auto& p : s.parts()) a.push_back(interval_json(p));
    return a;
}

Json map_json(const ITMap& m)
{
    return {{"beta", rational_array_json(m.beta())}, {"gamma", rational_array_json(m.gamma())}};
}

Json map_json(const ExtendedITMap& m)
{
    return {{"beta", rational_array_json(m.beta())}, {"gamma", rational_array_json(m.gamma())}, {"extended", true}};
}

bool is_extended_map_json(const Json& j)
{
    return j.is_object() && j.contains("extended") && j.at("extended").is_boolean() && j.at("extended").get<bool>();
}

ITMap map_from_json(const Json& j)
{
    if (is_extended_map_json(j)) throw Error(ErrorCode::Parse, "map: extended map where a standard map is expected");
    auto beta = rational_array(field(j, "beta", "map"), "beta");
    auto gamma = rational_array(field(j, "gamma", "map"), "gamma");
    if (gamma.empty() || beta.size() != gamma.size() + 1)
        throw Error(ErrorCode::Parse, "map: beta must have one more entry than gamma (r >= 1)");
    return ITMap(std::move(beta), std::move(gamma));
}

ExtendedITMap extended_map_from_json(const Json& j)
{
    auto beta = rational_array(field(j, "beta", "map"), "beta");
    auto gamma = rational_array(field(j, "gamma", "map"), "gamma");
    if (gamma.empty() || beta.size() != gamma.size() + 1)
        throw Error(ErrorCode::Parse, "map: beta must have one more entry than gamma (r >= 1)");
    return ExtendedITMap(std::move(beta), std::move(gamma));
}

ITMap checked_map_from_json(const Json& j)
{
    if (is_extended_map_json(j)) {
        ExtendedITMap em = extended_map_from_json(j);
        auto rep = validate(em);
        if (!rep.ok()) throw Error(ErrorCode::InvalidMap, "invalid extended map", rep.violations);
        return em.rescale();
    }
    ITMap m = map_from_json(j);
    auto rep = validate(m);
    if (!rep.ok()) throw Error(ErrorCode::InvalidMap, "invalid map", rep.violations);
    return m;
}

Json attractor_json(const AttractorResult& a)
{
    Json j;
    j["status"] = a.finite() ? "finite" : "undetermined";
    j["n"] = a.finite() ? Json(a.n_stable) : Json(nullptr);
    j["X"] = interval_set_json(a.X);
    j["budget_used"] = a.budget_used;
    return j;
}

Json return_map_json(const ReturnMapData& rmd)
{
    Json j;
    j["J"] = interval_json(rmd.J);
    j["N"] = rmd.N();
    Json br = Json::array();
    for (const auto& b : rmd.branches) {
        br.push_back({{"domain", interval_json(b.domain)},
                      {"return_time", b.return_time},
                      {"translation", rational_json(b.translation)},
                      {"image", interval_json(b.image)},
                      {"counts", b.counts}});
    }
    j["branches"] = std::move(br);
    Json lands = Json::array();
    for (const auto& l : rmd.landings) {
        lands.push_back({{"a", rational_json(l.a)},
                         {"l", l.l},
                         {"plus_chain", hits_json(l.plus_chain)},
                         {"minus_chain", hits_json(l.minus_chain)},
                         {"plus_return", l.plus_return.str()},
                         {"minus_return", l.minus_return.str()}});
    }
    j["landings"] = std::move(lands);
    j["boundary_landing"] = rmd.boundary_landing;
    j["left"] = boundary_json(rmd.left);
    j["right"] = boundary_json(rmd.right);
    j["sigma"] = rmd.sigma;
    j["tau"] = rmd.tau;
    RotationData rd = rotation_data(rmd);
    j["rotation"] = {{"is_rotation", rd.is_rotation},
                     {"rotation_number", rd.is_rotation ? rational_json(rd.rotation_number) : Json(nullptr)}};
    j["dynamically_trivial"] = dynamically_trivial(rmd);
    return j;
}

Json verdict_json(const Verdict& v) { return {{"ok", v.ok}, {"witness", v.witness}}; }

Json stability_json(const StabilityReport& rep)
{
    Json j;
    j["stable"] = rep.stable;
    j["a1"] = verdict_json(rep.a1);
    j["a2"] = verdict_json(rep.a2);
    j["a3"] = verdict_json(rep.a3);
    j["matching"] = verdict_json(rep.matching);
    if (!rep.note.empty()) j["note"] = rep.note;
    return j;
}

namespace {

Json classify_from(const ITMap& m, const StabilityReport& rep)
{
    Json j = attractor_json(rep.finite_type);
    Json st = stability_json(rep);
    for (auto& [k, v] : st.items()) j[k] = v;
    Json rms = Json::array();
    for (const auto& rmd : rep.return_maps) rms.push_back(return_map_json(rmd));
    j["return_maps"] = std::move(rms);
    j["map"] = map_json(m);
    return j;
}

}  // namespace

Json classify_json(const ITMap& m, long budget) { return classify_from(m, is_stable(m, budget)); }

Json report_json(const ITMap& m, long budget)
{
    StabilityReport rep = is_stable(m, budget);
    Json j = classify_from(m, rep);
    Json orbits = Json::array();
    for (const auto& beta : m.critical_set()) {
        OrbitClass oc = classify_orbit(m, beta);
        Json o = {{"disc", beta.str()}, {"tag", orbit_tag_name(oc.tag)}};
        if (oc.tag == OrbitTag::Precritical) {
            o["hit"] = oc.hit.str();
            o["time"] = oc.time;
        } else {
            o["preperiod"] = oc.preperiod;
            o["period"] = oc.period;
        }
        o["ghost_preimages"] = Json::array();
        for (const auto& g : ghost_preimages(m, beta)) o["ghost_preimages"].push_back(g.str());
        orbits.push_back(std::move(o));
    }
    j["discontinuities"] = std::move(orbits);
    if (rep.finite_type.finite()) {
        UnstableSummary us = unstable_number(m, rep.finite_type.X);
        j["unstable_number"] = us.U;
        CorrespondenceVerdict cv = check_correspondence(m, us.X);
        j["correspondence"] = {{"ok", cv.ok}, {"failing", Json::array()}};
        for (const auto& b : cv.failing) j["correspondence"]["failing"].push_back(b.str());
        j["delta0"] = rational_json(certify_delta(m));
    }
    return j;
}

Json step_json(const StabilizationStep& s)
{
    Json j;
    j["kind"] = step_kind_name(s.kind);
    j["target"] = s.target;
    j["variant"] = s.variant;
    j["delta"] = rational_array_json(s.delta);
    j["eps"] = rational_json(s.eps);
    j["eps2"] = rational_json(s.eps2);
    j["a"] = s.a;
    j["b"] = s.b;
    j["U_before"] = s.U_before;
    j["U_after"] = s.U_after;
    j["constraints"] = s.constraints;
    j["result"] = map_json(s.result);
    return j;
}

Json trace_json(const StabilizationTrace& t)
{
    Json j;
    j["initial"] = map_json(t.initial);
    Json steps = Json::array();
    for (const auto& s : t.steps) steps.push_back(step_json(s));
    j["steps"] = std::move(steps);
    j["success"] = t.success;
    j["message"] = t.message;
    return j;
}

StabilizationTrace trace_from_json(const Json& j)
{
    StabilizationTrace t;
    t.initial = map_from_json(field(j, "initial", "trace"));
    const Json& steps = field(j, "steps", "trace");
    if (!steps.is_array()) throw Error(ErrorCode::Parse, "trace: steps must be an array");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const Json& sj = steps[i];
        std::string what = "step " + std::to_string(i);
        StabilizationStep s;
        s.kind = parse_step_kind(get_string(field(sj, "kind", what), what + ".kind"));
        s.target = get_string(field(sj, "target", what), what + ".target");
        s.variant = get_string(field(sj, "variant", what), what + ".variant");
        s.delta = rational_array(field(sj, "delta", what), what + ".delta");
        s.eps = rational_from(field(sj, "eps", what), what + ".eps");
        if (sj.contains("eps2")) s.eps2 = rational_from(sj.at("eps2"), what + ".eps2");
        if (sj.contains("a")) s.a = get_long(sj.at("a"), what + ".a");
        if (sj.contains("b")) s.b = get_long(sj.at("b"), what + ".b");
        s.U_before = get_long(field(sj, "U_before", what), what + ".U_before");
        s.U_after = get_long(field(sj, "U_after", what), what + ".U_after");
        if (sj.contains("constraints"))
            for (const auto& c : sj.at("constraints")) s.constraints.push_back(get_string(c, what + ".constraints"));
        s.result = map_from_json(field(sj, "result", what));
        t.steps.push_back(std::move(s));
    }
    if (j.contains("success")) t.success = j.at("success").get<bool>();
    if (j.contains("message")) t.message = get_string(j.at("message"), "trace.message");
    return t;
}

Json stabilization_json(const StabilizationResult& r)
{
    Json j;
    j["map"] = map_json(r.map);
    j["displacement"] = rational_json(r.displacement);
    j["trace"] = trace_json(r.trace);
    return j;
}

Json table_json(const BilliardTable& t)
{
    Json ms = Json::array();
    for (const auto& m : t.mirrors)
        ms.push_back({{"x", rational_json(m.x)}, {"h", rational_json(m.height)}, {"reflect", side_name(m.reflective)}});
    return {{"mirrors", ms}};
}

BilliardTable table_from_json(const Json& j)
{
    BilliardTable t;
    const Json& ms = field(j, "mirrors", "table");
    if (!ms.is_array()) throw Error(ErrorCode::Parse, "table: mirrors must be an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
        std::string what = "mirror " + std::to_string(i);
        SpyMirror m;
        m.x = rational_from(field(ms[i], "x", what), what + ".x");
        m.height = rational_from(field(ms[i], "h", what), what + ".h");
        m.reflective = parse_side(get_string(field(ms[i], "reflect", what), what + ".reflect"));
        t.mirrors.push_back(m);
    }
    validate_table(t);
    return t;
}

Json events_json(const std::vector<BilliardEvent>& ev)
{
    Json a = Json::array();
    for (const auto& e : ev) {
        Json o = {{"event", event_kind_name(e.kind)}, {"x", rational_json(e.x)}, {"y", rational_json(e.y)}};
        if (e.mirror >= 0) o["mirror"] = e.mirror;
        a.push_back(std::move(o));
    }
    return a;
}

Json billiard_return_json(const BilliardReturn& br)
{
    Json ps = Json::array();
    for (const auto& p : br.pieces)
        ps.push_back({{"source", interval_json(p.source)},
                      {"translation", p.translation ? rational_json(*p.translation) : Json(nullptr)},
                      {"jumps", p.jumps}});
    return {{"pieces", ps}, {"trapped", interval_set_json(br.trapped)}, {"cut", rational_json(br.cut)}};
}

Json cell_json(const ScanCell& c)
{
    Json j = {{"i", c.i}, {"j", c.j}, {"a", rational_json(c.a)}, {"b", rational_json(c.b)}, {"tag", cell_tag_name(c.cls.tag)}};
    if (c.cls.fingerprint) {
        j["fingerprint"] = c.cls.fingerprint->str();
        j["n_stable"] = c.cls.fingerprint->n_stable;
    } else {
        j["fingerprint"] = nullptr;
        j["n_stable"] = nullptr;
    }
    return j;
}

Json scan_json(const ScanResult& sr)
{
    Json j;
    j["region"] = {rational_json(sr.region.x0), rational_json(sr.region.y0), rational_json(sr.region.x1),
                   rational_json(sr.region.y1)};
    j["res"] = sr.res;
    j["budget"] = sr.budget;
    j["version"] = kCodeVersion;
    j["undetermined"] = sr.undetermined;
    Json cells = Json::array();
    for (const auto& c : sr.cells) cells.push_back(cell_json(c));
    j["cells"] = std::move(cells);
    return j;
}

const char* error_class_name(ErrorClass c)
{
    switch (c) {
    case ErrorClass::Validation: return "validation";
    case ErrorClass::Infeasible: return "infeasible";
    case ErrorClass::Budget: return "budget";
    }
    return "?";
}

Json error_json(const Error& e)
{
    return {{"error",
             {{"code", error_code_name(e.code())},
              {"class", error_class_name(error_class(e.code()))},
              {"message", e.what()},
              {"details", e.details()}}}};
}

Json parse_json(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace itm
