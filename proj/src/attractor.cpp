#include "itm/attractor.hpp"

#include <limits>
#include <unordered_map>

#include "itm/error.hpp"

namespace itm {

namespace {

long saturating(const mpz_class& z)
{
    if (z > mpz_class(std::numeric_limits<long>::max() / 4)) return std::numeric_limits<long>::max() / 4;
    return z.get_si();
}

long grid_bound(const ITMap& m) { return saturating(m.grid_q() + 1); }

}  // namespace

long default_budget(const ITMap& m) { return saturating(4 * m.grid_q() * m.r()); }

AttractorResult attractor(const ITMap& m) { return attractor(m, default_budget(m)); }

AttractorResult attractor(const ITMap& m, long budget)
{
    AttractorResult res;
    IntervalSet x = IntervalSet::unit();
    for (long n = 0; n < budget; ++n) {
        IntervalSet next = image(m, x);
        res.budget_used = n + 1;
        if (next == x) {
            res.status = AttractorStatus::Finite;
            res.n_stable = n;
            res.X = std::move(x);
            return res;
        }
        x = std::move(next);
    }
    res.X = std::move(x);
    return res;
}

std::vector<HalfOpenInterval> components(const IntervalSet& X) { return X.parts(); }

// Brent cycle detection; the hare meets the tortoise within 4·max(μ+1, λ) steps.
std::optional<std::pair<long, long>> orbit_period(const ITMap& m, const SignedPoint& p, long max_steps)
{
    if (max_steps < 0) max_steps = grid_bound(m) + 1;
    auto stops = [&](const SignedPoint& q) { return !q.is_signed() && m.is_discontinuity(q.value); };
    if (stops(p)) return std::nullopt;
    SignedPoint tortoise = p, hare = apply(m, p);
    long power = 1, lambda = 1, walked = 1;
    while (!(tortoise == hare)) {
        if (stops(hare) || ++walked > 4 * max_steps + 4) return std::nullopt;
        if (power == lambda) {
            tortoise = hare;
            power *= 2;
            lambda = 0;
        }
        hare = apply(m, hare);
        ++lambda;
    }
    tortoise = hare = p;
    for (long i = 0; i < lambda; ++i) hare = apply(m, hare);
    long mu = 0;
    while (!(tortoise == hare)) {
        tortoise = apply(m, tortoise);
        hare = apply(m, hare);
        ++mu;
    }
    if (mu + lambda > max_steps) return std::nullopt;
    return std::make_pair(mu, lambda);
}

std::optional<std::vector<PeriodicityEntry>> eventually_periodic(const ITMap& m, long max_steps)
{
    std::vector<PeriodicityEntry> out;
    for (const auto& c : m.critical_set()) {
        auto pp = orbit_period(m, c, max_steps);
        if (!pp) return std::nullopt;
        out.push_back({c, pp->first, pp->second});
    }
    return out;
}

std::vector<ComponentWitness> boundary_witness(const ITMap& m, const IntervalSet& X)
{
    std::vector<ComponentWitness> out;
    auto ep = eventually_periodic(m);
    if (!ep) throw Error(ErrorCode::NotEventuallyPeriodic, "discontinuity orbit exceeds the grid bound");
    // First hit time of each boundary value by each signed discontinuity.
    for (const auto& comp : X.parts()) {
        ComponentWitness w{comp, std::nullopt, std::nullopt};
        for (const auto& e : *ep) {
            const Rational& target = e.disc.sign == Sign::Plus ? comp.left : comp.right;
            auto& slot = e.disc.sign == Sign::Plus ? w.left : w.right;
            SignedPoint q = e.disc;
            long horizon = e.preperiod + e.period;
            for (long k = 0; k < horizon; ++k) {
                if (q.value == target) {
                    if (!slot || k < slot->k) slot = Landing{e.disc, k};
                    break;
                }
                q = apply(m, q);
            }
        }
        if (m.r() >= 2 && (!w.left || !w.right)) {
            bool left_edge = comp.left == Rational(0), right_edge = comp.right == Rational(1);
            if ((!w.left && !left_edge) || (!w.right && !right_edge))
                throw Error(ErrorCode::WitnessNotFound, "no discontinuity orbit reaches a boundary of " + comp.str());
        }
        out.push_back(std::move(w));
    }
    return out;
}

OrbitClass classify_orbit(const ITMap& m, const SignedPoint& p)
{
    std::unordered_map<SignedPoint, long, SignedPointHash> seen;
    SignedPoint q = p;
    long cap = grid_bound(m) + 2;
    for (long t = 0; t <= cap; ++t) {
        if (p.is_signed()) {
            if (t >= 1 && m.critical_index(q) != 0) {
                OrbitClass c;
                c.tag = OrbitTag::Precritical;
                c.hit = q;
                c.time = t;
                return c;
            }
        } else if (m.is_discontinuity(q.value)) {
            OrbitClass c;
            c.tag = OrbitTag::Precritical;
            c.hit = q;
            c.time = t;
            return c;
        }
        auto [it, inserted] = seen.emplace(q, t);
        if (!inserted) {
            OrbitClass c;
            c.tag = OrbitTag::Preperiodic;
            c.preperiod = it->second;
            c.period = t - it->second;
            c.hit = q;
            c.time = it->second;
            return c;
        }
        q = apply(m, q);
    }
    throw Error(ErrorCode::NotEventuallyPeriodic, "orbit of " + p.str() + " exceeds the grid bound");
}

HalfOpenInterval maximal_periodic_interval(const ITMap& m, const SignedPoint& p)
{
    auto pp = orbit_period(m, p);
    if (!pp || pp->first != 0) throw Error(ErrorCode::NotPeriodic, p.str() + " is not periodic");
    long n = pp->second;
    Rational lo = m.beta().front(), hi = m.beta().back(), d(0);
    SignedPoint q = p;
    for (long t = 0; t < n; ++t) {
        int s = m.branch_of(q);
        lo = max(lo, m.beta(s - 1) - d);
        hi = min(hi, m.beta(s) - d);
        d += m.gamma(s);
        q = {q.value + m.gamma(s), q.sign};
    }
    return {lo, hi};
}

}  // namespace itm
