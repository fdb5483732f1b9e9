#include "itm/stabilizer.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <cstdlib>

#include "itm/error.hpp"

namespace itm {

namespace {

Sign flip(Sign s) { return s == Sign::Plus ? Sign::Minus : Sign::Plus; }

std::vector<SignedPoint> discontinuities_in(const ITMap& m, const IntervalSet& X)
{
    std::vector<SignedPoint> out;
    for (const auto& c : m.critical_set())
        if (member(X, c)) out.push_back(c);
    return out;
}

IntervalSet finite_attractor(const ITMap& m)
{
    AttractorResult ar = attractor(m);
    if (!ar.finite()) throw Error(ErrorCode::BudgetExhausted, "attractor undetermined within budget");
    return ar.X;
}

// State of a map as seen by the pipeline.
struct Analysis {
    IntervalSet X;
    UnstableSummary us;
    CorrespondenceVerdict corr;
    CycleDecomposition cycles;
};

// Rational maps are eventually periodic on the grid β + (1/Q)ℤ, so no separate check is made.
Analysis analyze(const ITMap& m)
{
    Analysis a;
    a.X = finite_attractor(m);
    a.us = unstable_number(m, a.X);
    a.corr = check_correspondence(m, a.X);
    a.cycles = critical_cycles(m, a.X);
    return a;
}

// Maximal periodic intervals with pairwise disjoint orbits covering every discontinuity in X.
struct PeriodicClass {
    HalfOpenInterval P;
    IntervalSet orbit;
};

std::vector<PeriodicClass> periodic_classes(const ITMap& m, const IntervalSet& X)
{
    std::vector<PeriodicClass> out;
    for (const auto& beta : discontinuities_in(m, X)) {
        bool covered = false;
        for (const auto& pc : out)
            if (member(pc.orbit, beta)) covered = true;
        if (covered) continue;
        HalfOpenInterval P = maximal_periodic_interval(m, beta);
        out.push_back({P, interval_orbit(m, X, P)});
    }
    return out;
}

int class_of(const std::vector<PeriodicClass>& cls, const SignedPoint& p)
{
    for (std::size_t i = 0; i < cls.size(); ++i)
        if (member(cls[i].orbit, p)) return int(i);
    return -1;
}

// A constraint list with targets in units of ε.
struct Plan {
    StepKind kind;
    std::string target;
    std::string variant;
    std::vector<Constraint> cons;
    Rational base;  // ε = base · 2^-k
    long a = 0, b = 0;
    Rational ratio;  // ε₂ / ε₁ where applicable
};

void freeze(std::vector<Constraint>& cons, std::vector<CoeffVector> vs)
{
    for (auto& v : vs) cons.push_back({std::move(v), Rational(0)});
}

// Frozen vectors of every periodic class except those whose orbit meets `skip`.
void freeze_classes(const ITMap& m, const std::vector<PeriodicClass>& cls, const IntervalSet& skip,
                    std::vector<Constraint>& cons)
{
    int idx = 1;
    for (const auto& pc : cls) {
        if (!intersect(pc.orbit, skip).empty()) continue;
        freeze(cons, periodic_interval_vectors(m, pc.P, ++idx));
    }
}

bool is_vector(const CoeffVector& v, VectorRole role, int j, int side, int k = -1)
{
    return v.role == role && v.j == j && (side == 0 || v.side == side) && (k < 0 || v.k == k);
}

std::vector<Rational> add(const std::vector<Rational>& p, const RVector& d, const Rational& s)
{
    std::vector<Rational> out = p;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * d(Eigen::Index(i));
    return out;
}

Rational linf(const std::vector<Rational>& a, const std::vector<Rational>& b)
{
    Rational mx(0);
    for (std::size_t i = 0; i < a.size(); ++i) mx = max(mx, (a[i] - b[i]).abs());
    return mx;
}

std::vector<CoeffVector> family_vectors(int r)
{
    std::vector<long> e1(std::size_t(r), 0), e2(std::size_t(r), 0), e3(std::size_t(r), 0);
    e1[0] = 1;
    e2[1] = 1;
    e3[2] = 1;
    return {make_vector(VectorRole::Family, "F_1", r, e1, {{1, 1}, {3, -1}}, true),
            make_vector(VectorRole::Family, "F_2", r, e2, {{2, 1}, {3, -1}}, true),
            make_vector(VectorRole::Family, "F_3", r, e3, {{2, 1}, {0, -1}}, true)};
}

// Standard parameters whose images may overhang [0,1): the domain is widened to the hull
// of the images and conjugated back. Dynamics vectors carry no f_0, f_r terms, so the
// widening leaves every constrained product unchanged.
std::optional<ExtendedITMap> widen(int r, const std::vector<Rational>& p)
{
    std::vector<Rational> gamma(p.begin(), p.begin() + r);
    std::vector<Rational> beta{Rational(0)};
    beta.insert(beta.end(), p.begin() + r, p.end());
    beta.push_back(Rational(1));
    Rational lo(0), hi(1);
    for (int s = 2; s <= r; ++s) lo = min(lo, beta[std::size_t(s - 1)] + gamma[std::size_t(s - 1)]);
    for (int s = 1; s < r; ++s) hi = max(hi, beta[std::size_t(s)] + gamma[std::size_t(s - 1)]);
    beta.front() = lo;
    beta.back() = hi;
    ExtendedITMap em(std::move(beta), std::move(gamma));
    if (!validate(em).ok()) return std::nullopt;
    return em;
}

std::string format_constraint(const Constraint& c) { return c.v.label + "=" + c.target.str(); }

using Verifier = std::function<std::optional<long>(const ITMap&)>;

struct PreparedPlan {
    const Plan* plan;
    RVector d;
    Rational eps;  // next scale to try
};

// Solves every plan once, then tries them breadth-first over ε = base·2^-k, coarse scales
// first, until the verifier accepts a perturbed map.
std::optional<StabilizationStep> run_plans(const ITMap& m, const std::vector<Plan>& plans, const Rational& eps_max,
                                           const StabilizeOptions& opt, long U_before, const Verifier& verify)
{
    bool family = opt.family == FamilyConstraint::BruinTroubetzkoy;
    std::vector<PreparedPlan> prepared;
    for (const auto& plan : plans) {
        std::vector<Constraint> cons = plan.cons;
        if (family) {
            for (auto& c : cons) c.v = lift(c.v);
            if (m.r() == 3) freeze(cons, family_vectors(m.r()));
        }
        RVector d;
        try {
            d = solve_perturbation(cons);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Infeasible) continue;
            throw;
        }
        if (d.size() == 0 || max_abs(d).is_zero()) continue;
        Rational eps = plan.base;
        while (eps * max_abs(d) > eps_max) eps /= 2;
        prepared.push_back({&plan, std::move(d), eps});
    }
    std::vector<Rational> base_params = family ? ExtendedITMap::lift(m).params() : m.params();
    for (int level = 0; level <= opt.max_halvings; ++level) {
        for (auto& pp : prepared) {
            const Plan& plan = *pp.plan;
            Rational eps = pp.eps;
            pp.eps /= 2;
            std::vector<Rational> p = add(base_params, pp.d, eps);
            ITMap cand;
            if (family) {
                ExtendedITMap em = ExtendedITMap::from_params(m.r(), p);
                if (!validate(em).ok()) continue;
                cand = em.rescale();
            } else {
                auto em = widen(m.r(), p);
                if (!em) continue;
                cand = em->rescale();
            }
            if (!validate(cand).ok()) continue;
            auto cp = cand.params(), mp = m.params();
            if (linf(cp, mp) > eps_max) continue;
            std::optional<long> U_after;
            try {
                U_after = verify(cand);
            } catch (const Error&) {
                U_after.reset();
            }
            if (!U_after) continue;
            StabilizationStep st;
            st.kind = plan.kind;
            st.target = plan.target;
            st.variant = plan.variant;
            for (std::size_t i = 0; i < cp.size(); ++i) st.delta.push_back(cp[i] - mp[i]);
            st.eps = eps;
            st.eps2 = eps * plan.ratio;
            st.a = plan.a;
            st.b = plan.b;
            st.U_before = U_before;
            st.U_after = *U_after;
            for (const auto& c : plan.cons)
                if (!c.target.is_zero()) st.constraints.push_back(format_constraint(c));
            st.result = std::move(cand);
            return st;
        }
    }
    return std::nullopt;
}

// R_J orbit of the value v until it meets an interior branch boundary of J.
struct ValueOrbit {
    long P = -1;
    int p = 0;  // index of the boundary a_p met
    std::vector<int> visits;  // branch (1-based) visited at t = 0..P-1
};

ValueOrbit orbit_to_landing(const ReturnMapData& rmd, Rational v, long cap)
{
    ValueOrbit vo;
    for (long t = 0; t <= cap; ++t) {
        for (int j = 1; j < rmd.N(); ++j)
            if (rmd.branches[std::size_t(j)].domain.left == v) {
                vo.P = t;
                vo.p = j;
                return vo;
            }
        int s = 0;
        for (int j = 0; j < rmd.N(); ++j)
            if (rmd.branches[std::size_t(j)].domain.contains(v)) s = j + 1;
        if (s == 0) return vo;
        vo.visits.push_back(s);
        v += rmd.branches[std::size_t(s - 1)].translation;
    }
    return vo;
}

// ε₂/ε₁ strictly inside (a/(b+1), (a+1)/b), or above a when b = 0.
Rational admissible_ratio(long a, long b) { return Rational(2 * a + 1, 2 * b + 1); }

bool ratio_admissible(long a, long b, const Rational& q)
{
    if (b == 0) return Rational(a) < q;
    return Rational(a, b + 1) < q && q < Rational(a + 1, b);
}

// Component vectors of J_0 with the given targets; everything unlisted is frozen.
std::vector<Constraint> component_constraints(const std::vector<CoeffVector>& vs,
                                              const std::function<std::optional<Rational>(const CoeffVector&)>& target)
{
    std::vector<Constraint> out;
    for (const auto& v : vs) {
        auto t = target(v);
        out.push_back({v, t ? *t : Rational(0)});
    }
    return out;
}

void append(std::vector<Constraint>& a, const std::vector<Constraint>& b) { a.insert(a.end(), b.begin(), b.end()); }

std::vector<Constraint> outside_frozen(const ITMap& m, const IntervalSet& X)
{
    std::vector<Constraint> out;
    freeze(out, outside_connection_vectors(m, X));
    return out;
}

// Chain vectors of a periodic interval with both closings set to `closing`.
std::vector<Constraint> closing_shift(const ITMap& m, const HalfOpenInterval& P, const Rational& closing)
{
    auto vs = periodic_interval_vectors(m, P, 1, true);
    int kp = 0, km = 0;
    for (const auto& v : vs) (v.side > 0 ? kp : km) = std::max(v.side > 0 ? kp : km, v.k);
    std::vector<Constraint> out;
    for (auto& v : vs) {
        bool close = v.k == (v.side > 0 ? kp : km);
        out.push_back({std::move(v), close ? closing : Rational(0)});
    }
    return out;
}

long count_failures(const CorrespondenceVerdict& cv) { return long(cv.failing.size()); }

std::string cycle_target(const SignedPoint& beta, const HalfOpenInterval& J) { return beta.str() + " in " + J.str(); }

}  // namespace

const char* step_kind_name(StepKind k)
{
    switch (k) {
    case StepKind::Correspondence: return "Correspondence";
    case StepKind::CaseN0gt3: return "CaseN0gt3";
    case StepKind::CaseN0eq3: return "CaseN0eq3";
    case StepKind::CaseN0eq2: return "CaseN0eq2";
    case StepKind::CaseN0eq1: return "CaseN0eq1";
    case StepKind::BoundaryRemoval: return "BoundaryRemoval";
    case StepKind::A3Fix: return "A3Fix";
    }
    return "?";
}

StepKind parse_step_kind(const std::string& s)
{
    for (StepKind k : {StepKind::Correspondence, StepKind::CaseN0gt3, StepKind::CaseN0eq3, StepKind::CaseN0eq2,
                       StepKind::CaseN0eq1, StepKind::BoundaryRemoval, StepKind::A3Fix})
        if (s == step_kind_name(k)) return k;
    throw Error(ErrorCode::Parse, "unknown step kind " + s);
}

CycleDecomposition critical_cycles(const ITMap& m, const IntervalSet& X)
{
    CycleDecomposition cd;
    auto in = discontinuities_in(m, X);
    std::map<SignedPoint, std::vector<SignedPoint>> orbit_discs;
    for (const auto& b : in) {
        std::vector<SignedPoint> o{b};
        for (const auto& h : later_critical_hits(m, b)) o.push_back(h.disc);
        orbit_discs[b] = std::move(o);
    }
    auto contains = [&](const SignedPoint& a, const SignedPoint& b) {
        const auto& o = orbit_discs[a];
        return std::find(o.begin(), o.end(), b) != o.end();
    };
    std::vector<bool> used(in.size(), false);
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (used[i]) continue;
        std::vector<SignedPoint> c{in[i]};
        used[i] = true;
        for (std::size_t j = i + 1; j < in.size(); ++j)
            if (!used[j] && contains(in[i], in[j]) && contains(in[j], in[i])) {
                c.push_back(in[j]);
                used[j] = true;
            }
        cd.cycles.push_back(std::move(c));
    }
    return cd;
}

UnstableSummary unstable_number(const ITMap& m)
{
    if (!eventually_periodic(m)) throw Error(ErrorCode::NotEventuallyPeriodic, "discontinuity orbit exceeds the grid bound");
    return unstable_number(m, finite_attractor(m));
}

UnstableSummary unstable_number(const ITMap& m, const IntervalSet& X)
{
    UnstableSummary us;
    us.X = X;
    for (const auto& c : critical_cycles(m, X).cycles) {
        us.cycle_sizes.push_back(c.size());
        us.U += long(c.size()) - 1;
    }
    for (const auto& J : X.parts()) {
        if (m.is_discontinuity(J.left)) us.boundary.push_back(SignedPoint::plus(J.left));
        if (m.is_discontinuity(J.right)) us.boundary.push_back(SignedPoint::minus(J.right));
    }
    us.U += long(us.boundary.size());
    return us;
}

CorrespondenceVerdict check_correspondence(const ITMap& m)
{
    if (!eventually_periodic(m)) throw Error(ErrorCode::NotEventuallyPeriodic, "discontinuity orbit exceeds the grid bound");
    return check_correspondence(m, finite_attractor(m));
}

CorrespondenceVerdict check_correspondence(const ITMap& m, const IntervalSet& X)
{
    CorrespondenceVerdict cv;
    for (const auto& beta : discontinuities_in(m, X)) {
        HalfOpenInterval P = maximal_periodic_interval(m, beta);
        SignedPoint q{beta.value, flip(beta.sign)};
        auto pp = orbit_period(m, q);
        if (!pp) throw Error(ErrorCode::NotEventuallyPeriodic, "orbit of " + q.str() + " exceeds the grid bound");
        bool lands = false;
        for (long t = 0; t <= pp->first + pp->second && !lands; ++t) {
            if (P.contains(q)) lands = true;
            q = apply(m, q);
        }
        if (!lands) {
            cv.ok = false;
            cv.failing.push_back(beta);
        }
    }
    return cv;
}

StabilizationStep perturb_to_correspondence(const ITMap& m, const Rational& eps_max, const StabilizeOptions& opt)
{
    if (eps_max.sign() <= 0) throw Error(ErrorCode::BudgetExhausted, "no perturbation budget left");
    Analysis an = analyze(m);
    if (an.corr.ok) {
        StabilizationStep st;
        st.kind = StepKind::Correspondence;
        st.variant = "identity";
        st.delta.assign(m.params().size(), Rational(0));
        st.U_before = st.U_after = an.us.U;
        st.result = m;
        return st;
    }
    auto cls = periodic_classes(m, an.X);
    long failures = count_failures(an.corr);
    Verifier verify = [&](const ITMap& c) -> std::optional<long> {
        Analysis a2 = analyze(c);
        if (a2.us.U > an.us.U) return std::nullopt;
        if (!a2.corr.ok && count_failures(a2.corr) >= failures) return std::nullopt;
        return a2.us.U;
    };
    std::vector<Plan> plans;
    std::vector<std::string> tried;
    for (const auto& beta : an.corr.failing) {
        HalfOpenInterval P = maximal_periodic_interval(m, beta);
        IntervalSet orbit = cls[std::size_t(class_of(cls, beta))].orbit;
        Rational closing = beta.sign == Sign::Plus ? Rational(-1) : Rational(1);
        Plan plan{StepKind::Correspondence, beta.str(), "template", {}, P.length(), 0, 0, Rational(0)};
        plan.cons = closing_shift(m, P, closing);
        freeze_classes(m, cls, orbit, plan.cons);
        append(plan.cons, outside_frozen(m, an.X));
        plans.push_back(std::move(plan));
        tried.push_back(beta.str());
    }
    if (auto st = run_plans(m, plans, eps_max, opt, an.us.U, verify)) return *st;
    // Removing one class from a component shared with another class exposes the
    // discontinuities between them on ∂X̃, so U may grow.
    Verifier exposing = [&](const ITMap& c) -> std::optional<long> {
        Analysis a2 = analyze(c);
        if (!a2.corr.ok && count_failures(a2.corr) >= failures) return std::nullopt;
        return a2.us.U;
    };
    for (auto& p : plans) p.variant = "boundary-exposing";
    if (auto st = run_plans(m, plans, eps_max, opt, an.us.U, exposing)) return *st;
    throw Error(ErrorCode::Infeasible, "no verified correspondence perturbation", tried);
}

namespace {

// Alternative R-shift patterns: one or two returns moved by -1 / +1, the rest frozen.
std::vector<std::vector<int>> shift_patterns(int N)
{
    std::vector<std::vector<int>> out;
    for (int i = 0; i < N; ++i)
        for (int si : {-1, 1}) {
            std::vector<int> p(std::size_t(N), 0);
            p[std::size_t(i)] = si;
            out.push_back(p);
        }
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j)
            for (int si : {-1, 1})
                for (int sj : {-1, 1}) {
                    std::vector<int> p(std::size_t(N), 0);
                    p[std::size_t(i)] = si;
                    p[std::size_t(j)] = sj;
                    out.push_back(p);
                }
    return out;
}

std::string pattern_name(const std::vector<int>& p)
{
    std::string s = "shift(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + std::to_string(p[i]);
    return s + ")";
}

struct ReducePlanner {
    const ITMap& m;
    const Analysis& an;
    const std::vector<PeriodicClass>& cls;

    std::vector<Constraint> others(const IntervalSet& orbit0) const
    {
        std::vector<Constraint> out;
        freeze_classes(m, cls, orbit0, out);
        append(out, outside_frozen(m, an.X));
        return out;
    }

    // Plans for the component J0 hosting beta, in order of preference.
    std::vector<Plan> plans(const SignedPoint& beta, const ReturnMapData& rmd) const
    {
        std::vector<Plan> out;
        int N = rmd.N();
        auto vs = component_vectors(m, rmd, 0);
        IntervalSet orbit0 = interval_orbit(m, an.X, rmd.J);
        std::vector<Constraint> frozen_rest = others(orbit0);
        Rational unit = maximal_periodic_interval(m, beta).length();
        std::string tgt = cycle_target(beta, rmd.J);
        long cap = long(rmd.J.length().den().get_si()) * 4 + 16;
        if (m.common_den() < 100000) cap = std::max(cap, long(m.common_den().get_si()) * 4 + 16);

        auto r_shift = [&](const std::map<int, Rational>& shifts) {
            return component_constraints(vs, [&](const CoeffVector& v) -> std::optional<Rational> {
                if (v.role != VectorRole::Return || v.side != 1) return std::nullopt;
                auto it = shifts.find(v.j);
                if (it == shifts.end()) return std::nullopt;
                return it->second;
            });
        };
        auto make = [&](StepKind k, std::string variant, std::vector<Constraint> cons, long a, long b, Rational q) {
            Plan p{k, tgt, std::move(variant), std::move(cons), unit, a, b, q};
            append(p.cons, frozen_rest);
            return p;
        };
        auto tau = [&](int k) { return rmd.tau[std::size_t(k - 1)]; };
        auto v_at = [&](int c) { return rmd.branches[std::size_t(tau(c + 1) - 1)].image.left; };

        if (N >= 4) {
            ValueOrbit vo = orbit_to_landing(rmd, v_at(2), cap);
            if (vo.P >= 0) {
                long a = std::count(vo.visits.begin(), vo.visits.end(), tau(2));
                long b = std::count(vo.visits.begin(), vo.visits.end(), tau(3));
                Rational q = admissible_ratio(a, b);
                out.push_back(make(StepKind::CaseN0gt3, "template",
                                   r_shift({{tau(2) - 1, Rational(-1)}, {tau(3) - 1, q}}), a, b, q));
            }
        } else if (N == 3) {
            // c = 1 needs the left neighbour image to come from the last branch, c = 2 the
            // right neighbour image from the first branch.
            for (int c : {1, 2}) {
                ValueOrbit vo = orbit_to_landing(rmd, v_at(c), cap);
                if (vo.P < 0) continue;
                int minus_branch = 0, plus_branch = 0;
                if (c == 1 && tau(1) == 3) {
                    minus_branch = tau(3);
                    plus_branch = tau(2);
                } else if (c == 2 && tau(3) == 1) {
                    minus_branch = tau(2);
                    plus_branch = tau(1);
                } else {
                    continue;
                }
                long a = std::count(vo.visits.begin(), vo.visits.end(), minus_branch);
                long b = std::count(vo.visits.begin(), vo.visits.end(), plus_branch);
                Rational q = admissible_ratio(a, b);
                bool hits_beta = rmd.branches[std::size_t(vo.p)].domain.left == beta.value;
                Plan p = make(StepKind::CaseN0eq3, "template v" + std::to_string(c),
                              r_shift({{minus_branch - 1, Rational(-1)}, {plus_branch - 1, q}}), a, b, q);
                if (hits_beta)
                    out.insert(out.begin(), std::move(p));
                else
                    out.push_back(std::move(p));
            }
        } else if (N == 2) {
            auto cons = component_constraints(vs, [&](const CoeffVector& v) -> std::optional<Rational> {
                if (v.role == VectorRole::Landing) {
                    if (v.j == 0) return Rational(1);
                    if (v.j == 2) return Rational(-1);
                    return std::nullopt;
                }
                if (v.role == VectorRole::Connection && v.j == 1 && v.k == 1) return Rational(v.side > 0 ? 1 : -1);
                if (v.role == VectorRole::Return && v.side > 0) return Rational(v.j == 0 ? 1 : -1);
                return std::nullopt;
            });
            out.push_back(make(StepKind::CaseN0eq2, "template", std::move(cons), 0, 0, Rational(0)));
        } else if (N == 1) {
            auto cons = component_constraints(vs, [&](const CoeffVector& v) -> std::optional<Rational> {
                if (v.role == VectorRole::Landing) return v.j == 1 ? std::optional<Rational>(Rational(-1)) : std::nullopt;
                if (v.role == VectorRole::Connection && v.side > 0 && v.j == 0 && v.k == 1) return Rational(1);
                if (v.role == VectorRole::Return && v.side > 0) return Rational(-1);
                return std::nullopt;
            });
            // C^{0,-}(1,1) is left free.
            std::vector<Constraint> kept;
            for (auto& c : cons)
                if (!(is_vector(c.v, VectorRole::Connection, 1, -1, 1))) kept.push_back(std::move(c));
            out.push_back(make(StepKind::CaseN0eq1, "template", std::move(kept), 0, 0, Rational(0)));
        }

        StepKind kind = N >= 4 ? StepKind::CaseN0gt3
                      : N == 3 ? StepKind::CaseN0eq3
                      : N == 2 ? StepKind::CaseN0eq2
                               : StepKind::CaseN0eq1;
        for (const auto& pat : shift_patterns(N)) {
            std::map<int, Rational> sh;
            for (int j = 0; j < N; ++j)
                if (pat[std::size_t(j)] != 0) sh[j] = Rational(pat[std::size_t(j)]);
            out.push_back(make(kind, pattern_name(pat), r_shift(sh), 0, 0, Rational(1)));
        }
        return out;
    }
};

}  // namespace

StabilizationStep reduce_unstable(const ITMap& m, const Rational& eps_max, const StabilizeOptions& opt)
{
    if (eps_max.sign() <= 0) throw Error(ErrorCode::BudgetExhausted, "no perturbation budget left");
    Analysis an = analyze(m);
    if (an.us.U == 0) throw Error(ErrorCode::PreconditionViolated, "unstable number is already 0");
    if (!an.corr.ok) throw Error(ErrorCode::PreconditionViolated, "correspondence fails at " + an.corr.failing.front().str());
    auto cls = periodic_classes(m, an.X);
    Verifier verify = [&](const ITMap& c) -> std::optional<long> {
        long U = unstable_number(c, finite_attractor(c)).U;
        if (U >= an.us.U) return std::nullopt;
        return U;
    };
    std::vector<std::string> tried;

    // Discontinuities in X that land on another discontinuity.
    struct Candidate {
        SignedPoint beta;
        ReturnMapData rmd;
    };
    std::vector<Candidate> cands;
    for (const auto& c : an.cycles.cycles) {
        if (c.size() < 2) continue;
        for (const auto& beta : c) {
            int part = find_part(an.X, beta);
            cands.push_back({beta, return_map(m, an.X, an.X.parts()[std::size_t(part)])});
        }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.rmd.N() > b.rmd.N(); });
    ReducePlanner planner{m, an, cls};
    std::vector<Plan> plans;
    for (const auto& cand : cands) {
        for (auto& plan : planner.plans(cand.beta, cand.rmd)) {
            if ((plan.a || plan.b) && !ratio_admissible(plan.a, plan.b, plan.ratio))
                throw Error(ErrorCode::PreconditionViolated, "inadmissible ε ratio");
            tried.push_back(plan.target + " " + plan.variant);
            plans.push_back(std::move(plan));
        }
    }

    // Boundary discontinuities: shift the periodic return of P(β) off β.
    for (const auto& beta : an.us.boundary) {
        HalfOpenInterval P = maximal_periodic_interval(m, beta);
        int ci = class_of(cls, beta);
        IntervalSet orbit = ci >= 0 ? cls[std::size_t(ci)].orbit : IntervalSet(P);
        SignedPoint q{beta.value, flip(beta.sign)};
        Rational l;
        auto pp = orbit_period(m, q);
        if (pp) {
            for (long t = 0; t <= pp->first + pp->second; ++t) {
                if (P.contains(q)) {
                    l = (q.value - beta.value).abs();
                    break;
                }
                q = apply(m, q);
            }
        }
        if (l.is_zero()) l = P.length();
        for (int sgn : {1, -1}) {
            Rational closing = Rational(beta.sign == Sign::Plus ? -sgn : sgn);
            Plan plan{StepKind::BoundaryRemoval, beta.str(), sgn > 0 ? "template" : "mirrored", {}, l, 0, 0, Rational(0)};
            plan.cons = closing_shift(m, P, closing);
            freeze_classes(m, cls, orbit, plan.cons);
            append(plan.cons, outside_frozen(m, an.X));
            tried.push_back(beta.str() + " boundary " + plan.variant);
            plans.push_back(std::move(plan));
        }
    }
    if (auto st = run_plans(m, plans, eps_max, opt, an.us.U, verify)) return *st;

    // Frozen connections outside X may be what keeps U up; push them off their landings.
    auto outside = outside_connection_vectors(m, an.X);
    if (!outside.empty()) {
        std::vector<Plan> pushed;
        for (int sgn : {1, -1})
            for (const auto& plan : plans) {
                Plan q = plan;
                q.variant += sgn > 0 ? "+pushed" : "+pushed-mirrored";
                for (auto& c : q.cons)
                    for (const auto& v : outside)
                        if (c.v.label == v.label) c.target = Rational(v.beta.sign == Sign::Minus ? -sgn : sgn);
                pushed.push_back(std::move(q));
            }
        if (auto st = run_plans(m, pushed, eps_max, opt, an.us.U, verify)) return *st;
    }
    throw Error(ErrorCode::Infeasible, "no verified reduction of the unstable number", tried);
}

StabilizationStep fix_a3(const ITMap& m, const Rational& eps_max, const StabilizeOptions& opt)
{
    if (eps_max.sign() <= 0) throw Error(ErrorCode::BudgetExhausted, "no perturbation budget left");
    Analysis an = analyze(m);
    if (an.us.U != 0 || !an.corr.ok)
        throw Error(ErrorCode::PreconditionViolated, "A3 fix needs U = 0 and correspondence");
    auto cls = periodic_classes(m, an.X);
    Plan plan{StepKind::A3Fix, "C_notX", "template", {}, eps_max, 0, 0, Rational(0)};
    freeze_classes(m, cls, IntervalSet(), plan.cons);
    for (auto& v : outside_connection_vectors(m, an.X)) {
        Rational t(v.beta.sign == Sign::Minus ? -1 : 1);
        plan.cons.push_back({std::move(v), t});
    }
    Verifier verify = [&](const ITMap& c) -> std::optional<long> {
        if (!is_stable(c).stable) return std::nullopt;
        return analyze(c).us.U;
    };
    if (auto st = run_plans(m, {plan}, eps_max, opt, an.us.U, verify)) return *st;
    throw Error(ErrorCode::Infeasible, "no verified A3 perturbation");
}

namespace {

std::string step_line(const StabilizationStep& s)
{
    return std::string(step_kind_name(s.kind)) + " " + s.target + " [" + s.variant + "] eps=" + s.eps.str() +
           " U " + std::to_string(s.U_before) + "->" + std::to_string(s.U_after);
}

}  // namespace

StabilizationResult stabilize(const ITMap& m, const Rational& eps_total, const StabilizeOptions& opt)
{
    StabilizationResult res;
    res.map = m;
    res.trace.initial = m;
    auto fail = [&](ErrorCode code, const std::string& msg) {
        res.trace.message = msg;
        std::vector<std::string> lines;
        for (const auto& s : res.trace.steps) lines.push_back(step_line(s));
        lines.push_back(msg);
        throw Error(code, msg, lines);
    };
    if (!validate(m).ok()) throw Error(ErrorCode::InvalidMap, "invalid map " + m.str());
    if (eps_total.sign() <= 0) fail(ErrorCode::BudgetExhausted, "perturbation budget must be positive");
    for (int it = 0; it < opt.max_steps; ++it) {
        Analysis an;
        try {
            an = analyze(res.map);
        } catch (const Error& e) {
            fail(e.code(), e.what());
        }
        Rational remaining = eps_total - res.displacement;
        Rational step_budget = remaining / 2;
        try {
            StabilizationStep st;
            if (!an.corr.ok) {
                st = perturb_to_correspondence(res.map, step_budget, opt);
            } else if (an.us.U > 0) {
                st = reduce_unstable(res.map, step_budget, opt);
            } else {
                if (is_stable(res.map).stable) {
                    res.trace.success = true;
                    res.trace.message = "stable";
                    return res;
                }
                st = fix_a3(res.map, step_budget, opt);
            }
            res.displacement += linf(st.result.params(), res.map.params());
            res.map = st.result;
            res.trace.steps.push_back(std::move(st));
        } catch (const Error& e) {
            fail(e.code() == ErrorCode::BudgetExhausted ? ErrorCode::BudgetExhausted : ErrorCode::Infeasible,
                 std::string(e.what()));
        }
    }
    fail(ErrorCode::BudgetExhausted, "step limit reached");
    return res;
}

ITMap replay(const StabilizationTrace& trace)
{
    ITMap cur = trace.initial;
    for (const auto& s : trace.steps) {
        auto p = cur.params();
        if (p.size() != s.delta.size()) throw Error(ErrorCode::DimensionMismatch, "trace step has wrong dimension");
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += s.delta[i];
        cur = ITMap::from_params(cur.r(), p);
        if (!(cur == s.result)) throw Error(ErrorCode::InvalidMap, "trace step does not reproduce its result");
    }
    return cur;
}

}  // namespace itm
