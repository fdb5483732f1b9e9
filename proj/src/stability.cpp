#include "itm/stability.hpp"

#include <algorithm>
#include <deque>
#include <random>

#include "itm/error.hpp"

namespace itm {

namespace {

Sign flip(Sign s) { return s == Sign::Plus ? Sign::Minus : Sign::Plus; }

std::string hits_str(const std::vector<ChainHit>& hits)
{
    std::string s;
    for (const auto& h : hits) {
        if (!s.empty()) s += ", ";
        s += h.disc.str() + "@" + std::to_string(h.time);
    }
    return s;
}

void check_a1_orbit(const ITMap& m, const SignedPoint& p, long ret, const HalfOpenInterval& J, Verdict& v)
{
    auto hits = critical_hits(m, p, ret + 1);
    if (hits.size() > 1) {
        v.ok = false;
        v.witness.push_back(J.str() + ": " + p.str() + " meets " + hits_str(hits) + " within return time " +
                            std::to_string(ret));
    }
}

}  // namespace

std::vector<ChainHit> later_critical_hits(const ITMap& m, const SignedPoint& beta)
{
    auto pp = orbit_period(m, beta);
    if (!pp) throw Error(ErrorCode::NotEventuallyPeriodic, "orbit of " + beta.str() + " exceeds the grid bound");
    long horizon = pp->first + pp->second;
    std::vector<ChainHit> out;
    SignedPoint q = beta;
    for (long t = 1; t <= horizon; ++t) {
        q = apply(m, q);
        if (m.critical_index(q) != 0) out.push_back({q, t});
    }
    return out;
}

std::vector<SignedPoint> ghost_preimages(const ITMap& m, const SignedPoint& beta)
{
    int i = m.critical_index(beta);
    if (i == 0) throw Error(ErrorCode::InvalidPoint, beta.str() + " is not a signed discontinuity");
    SignedPoint target{beta.value, flip(beta.sign)};
    std::vector<SignedPoint> out;
    for (int j = 1; j < m.r(); ++j) {
        if (j == i) continue;
        SignedPoint cand{m.beta(j), flip(beta.sign)};
        for (const auto& h : later_critical_hits(m, cand))
            if (h.disc == target) {
                out.push_back(cand);
                break;
            }
    }
    return out;
}

int GhostTree::depth() const
{
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.level);
    return d;
}

GhostTree ghost_tree(const ITMap& m, const SignedPoint& beta, std::size_t max_nodes)
{
    GhostTree tree;
    tree.root = beta;
    tree.nodes.push_back({beta, 0, -1});
    std::vector<std::pair<SignedPoint, std::vector<SignedPoint>>> memo;
    auto preimages = [&](const SignedPoint& p) -> const std::vector<SignedPoint>& {
        for (const auto& [k, v] : memo)
            if (k == p) return v;
        memo.emplace_back(p, ghost_preimages(m, p));
        return memo.back().second;
    };
    std::deque<int> queue{0};
    while (!queue.empty()) {
        int idx = queue.front();
        queue.pop_front();
        std::vector<SignedPoint> path;
        for (int a = idx; a >= 0; a = tree.nodes[std::size_t(a)].parent) path.push_back(tree.nodes[std::size_t(a)].disc);
        SignedPoint cur = tree.nodes[std::size_t(idx)].disc;
        int level = tree.nodes[std::size_t(idx)].level;
        for (const auto& child : preimages(cur)) {
            if (child == beta) {
                tree.contains_root_again = true;
                tree.nodes.push_back({child, level + 1, idx});
                continue;
            }
            if (std::find(path.begin(), path.end(), child) != path.end()) continue;
            if (tree.nodes.size() >= max_nodes) {
                tree.truncated = true;
                return tree;
            }
            tree.nodes.push_back({child, level + 1, idx});
            queue.push_back(int(tree.nodes.size()) - 1);
        }
    }
    return tree;
}

SignedPoint apply_return(const ITMap& m, const ReturnMapData& rmd, const SignedPoint& p)
{
    for (const auto& b : rmd.branches)
        if (b.domain.contains(p)) return iterate(m, p, b.return_time);
    throw Error(ErrorCode::InvalidPoint, p.str() + " is not in " + rmd.J.str());
}

AccReport check_acc(const ITMap& m, const IntervalSet& X)
{
    std::vector<ReturnMapData> rmds;
    for (const auto& J : X.parts()) rmds.push_back(return_map(m, X, J));
    return check_acc(m, X, rmds);
}

AccReport check_acc(const ITMap& m, const IntervalSet& X, const std::vector<ReturnMapData>& rmds)
{
    AccReport rep;
    for (const auto& rmd : rmds) {
        int N = rmd.N();
        for (int j = 0; j + 1 < N; ++j) {
            int li = rmd.boundary_landing[std::size_t(j)];
            if (li < 0) continue;
            const Rational& a = rmd.landings[std::size_t(li)].a;
            check_a1_orbit(m, SignedPoint::plus(a), rmd.branches[std::size_t(j + 1)].return_time, rmd.J, rep.a1);
            check_a1_orbit(m, SignedPoint::minus(a), rmd.branches[std::size_t(j)].return_time, rmd.J, rep.a1);
        }
        check_a1_orbit(m, rmd.left.point, rmd.left.return_time, rmd.J, rep.a1);
        check_a1_orbit(m, rmd.right.point, rmd.right.return_time, rmd.J, rep.a1);

        if (!dynamically_trivial(rmd)) {
            for (const BoundaryOrbit* b : {&rmd.left, &rmd.right})
                if (!b->chain.empty()) {
                    rep.a2.ok = false;
                    rep.a2.witness.push_back(rmd.J.str() + ": boundary " + b->point.str() + " meets " +
                                             hits_str(b->chain) + " before returning at " +
                                             std::to_string(b->return_time));
                }
        }
    }
    for (const auto& beta : m.critical_set()) {
        if (member(X, beta)) continue;
        GhostTree gt = ghost_tree(m, beta);
        if (gt.contains_root_again) {
            rep.a3.ok = false;
            rep.a3.witness.push_back(beta.str() + " reappears in its ghost tree");
        } else if (gt.truncated) {
            rep.a3.ok = false;
            rep.a3.witness.push_back(beta.str() + ": ghost tree exceeds the node cap");
        }
    }
    return rep;
}

Verdict check_matching(const ITMap& m, const IntervalSet& X)
{
    std::vector<ReturnMapData> rmds;
    for (const auto& J : X.parts()) rmds.push_back(return_map(m, X, J));
    return check_matching(m, rmds);
}

Verdict check_matching(const ITMap& m, const std::vector<ReturnMapData>& rmds)
{
    Verdict v;
    for (const auto& rmd : rmds) {
        if (dynamically_trivial(rmd)) continue;
        std::vector<std::string> problems;
        if (rmd.landings.size() != 1) {
            std::string s = std::to_string(rmd.landings.size()) + " interior landing points";
            for (const auto& lp : rmd.landings) s += " " + lp.a.str();
            problems.push_back(s);
        }
        if (!rmd.left.chain.empty()) problems.push_back("boundary " + rmd.left.point.str() + " lands");
        if (!rmd.right.chain.empty()) problems.push_back("boundary " + rmd.right.point.str() + " lands");
        if (problems.empty()) {
            const LandingPoint& lp = rmd.landings.front();
            if (lp.plus_return.value != rmd.J.left || lp.minus_return.value != rmd.J.right)
                problems.push_back("R(a+) = " + lp.plus_return.str() + ", R(a-) = " + lp.minus_return.str());
            else if (apply_return(m, rmd, lp.plus_return).value != apply_return(m, rmd, lp.minus_return).value)
                problems.push_back("R^2(a+) and R^2(a-) differ");
        }
        if (!problems.empty()) {
            v.ok = false;
            for (auto& p : problems) v.witness.push_back(rmd.J.str() + ": " + p);
        }
    }
    return v;
}

StabilityReport is_stable(const ITMap& m, long budget)
{
    StabilityReport rep;
    rep.finite_type = attractor(m, budget < 0 ? default_budget(m) : budget);
    if (!rep.finite_type.finite()) {
        rep.note = "attractor undetermined within budget";
        rep.a1.ok = rep.a2.ok = rep.a3.ok = rep.matching.ok = false;
        return rep;
    }
    const IntervalSet& X = rep.finite_type.X;
    for (const auto& J : X.parts()) rep.return_maps.push_back(return_map(m, X, J));
    AccReport acc = check_acc(m, X, rep.return_maps);
    rep.a1 = std::move(acc.a1);
    rep.a2 = std::move(acc.a2);
    rep.a3 = std::move(acc.a3);
    rep.matching = check_matching(m, rep.return_maps);
    rep.stable = rep.a1.ok && rep.a2.ok && rep.a3.ok && rep.matching.ok;
    return rep;
}

Rational certify_delta(const ITMap& m, int max_halvings)
{
    std::optional<Rational> bound;
    for (const auto& beta : m.critical_set()) {
        OrbitClass oc = classify_orbit(m, beta);
        long horizon = oc.tag == OrbitTag::Precritical ? oc.time : oc.preperiod + oc.period + 1;
        int own = m.critical_index(beta);
        SignedPoint q = beta;
        for (long t = 0; t < horizon; ++t) {
            for (int j = 1; j < m.r(); ++j) {
                if (t == 0 && j == own) continue;
                Rational ratio = (q.value - m.beta(j)).abs() / Rational(t + 2);
                if (!bound || ratio < *bound) bound = ratio;
            }
            q = apply(m, q);
        }
    }
    Rational d(1);
    for (int k = 0; k <= max_halvings; ++k, d /= 2)
        if (!bound || d < *bound) return d;
    return Rational(0);
}

HausdorffResult hausdorff_sample(const ITMap& m, int samples, std::uint64_t seed)
{
    HausdorffResult res;
    res.delta0 = certify_delta(m);
    res.bound = Rational(2 * 2 * m.r()) * res.delta0;
    AttractorResult base = attractor(m);
    if (!base.finite() || res.delta0.is_zero()) return res;
    res.base_components = base.X.size();
    std::mt19937_64 rng(seed);
    const long long K = 1 << 12;
    std::uniform_int_distribution<long long> dist(-K, K);
    auto params = m.params();
    res.ok = true;
    int attempts = 0;
    while (int(res.samples.size()) < samples && attempts < 200 * samples) {
        ++attempts;
        HausdorffSample s;
        std::vector<Rational> p = params;
        for (auto& x : p) {
            Rational d = Rational(dist(rng), K) * res.delta0;
            s.delta.push_back(d);
            x += d;
        }
        ITMap pm = ITMap::from_params(m.r(), p);
        if (!validate(pm).ok()) continue;
        AttractorResult ar = attractor(pm);
        s.status = ar.status;
        s.components = ar.X.size();
        if (ar.finite() && s.components == res.base_components) {
            for (std::size_t i = 0; i < s.components; ++i) {
                const auto& a = base.X.parts()[i];
                const auto& b = ar.X.parts()[i];
                s.max_displacement = max(s.max_displacement, max((a.left - b.left).abs(), (a.right - b.right).abs()));
            }
        }
        bool good = ar.finite() && s.components == res.base_components && s.max_displacement <= res.bound;
        res.ok = res.ok && good;
        res.samples.push_back(std::move(s));
    }
    if (int(res.samples.size()) < samples) res.ok = false;
    return res;
}

}  // namespace itm
