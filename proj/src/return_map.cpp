#include "itm/return_map.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "itm/error.hpp"

namespace itm {

namespace {

struct Piece {
    HalfOpenInterval dom;
    Rational shift;
    long t = 0;
    std::vector<long> counts;
};

long return_cap(const ITMap& m, const HalfOpenInterval& J)
{
    mpz_class d = m.common_den();
    d = lcm_den(d, J.left);
    d = lcm_den(d, J.right);
    d += 2;
    if (d > mpz_class(std::numeric_limits<long>::max() / 4)) return std::numeric_limits<long>::max() / 4;
    return d.get_si();
}

}  // namespace

std::vector<ChainHit> critical_hits(const ITMap& m, const SignedPoint& p, long n)
{
    std::vector<ChainHit> out;
    SignedPoint q = p;
    for (long t = 0; t < n; ++t) {
        if (m.critical_index(q) != 0) out.push_back({q, t});
        q = apply(m, q);
    }
    return out;
}

ReturnMapData return_map(const ITMap& m, const IntervalSet& X, const HalfOpenInterval& J)
{
    if (!subset(IntervalSet(J), X)) throw Error(ErrorCode::NotInvariant, J.str() + " is not contained in X");
    ReturnMapData rmd;
    rmd.J = J;
    long cap = return_cap(m, J);
    std::vector<std::pair<Rational, long>> landing_times;
    std::deque<Piece> work;
    work.push_back({J, Rational(0), 0, std::vector<long>(std::size_t(m.r()), 0)});
    while (!work.empty()) {
        Piece pc = std::move(work.front());
        work.pop_front();
        if (pc.t > cap) throw Error(ErrorCode::Diverged, "no return to " + J.str() + " within the grid bound");
        HalfOpenInterval img(pc.dom.left + pc.shift, pc.dom.right + pc.shift);
        auto subs = split_by_branches(m, img);
        for (std::size_t i = 1; i < subs.size(); ++i) landing_times.emplace_back(subs[i].second.left - pc.shift, pc.t);
        for (auto& [s, sub] : subs) {
            Piece np;
            np.dom = HalfOpenInterval(sub.left - pc.shift, sub.right - pc.shift);
            np.shift = pc.shift + m.gamma(s);
            np.t = pc.t + 1;
            np.counts = pc.counts;
            ++np.counts[std::size_t(s - 1)];
            HalfOpenInterval nimg(np.dom.left + np.shift, np.dom.right + np.shift);
            Rational lo = max(nimg.left, J.left), hi = min(nimg.right, J.right);
            if (!(lo < hi)) {
                work.push_back(std::move(np));
                continue;
            }
            // Part that returns now.
            HalfOpenInterval back(lo - np.shift, hi - np.shift);
            rmd.branches.push_back({back, np.t, np.shift, HalfOpenInterval(lo, hi), np.counts});
            if (np.dom.left < back.left) {
                Piece rest = np;
                rest.dom = HalfOpenInterval(np.dom.left, back.left);
                work.push_back(std::move(rest));
            }
            if (back.right < np.dom.right) {
                Piece rest = np;
                rest.dom = HalfOpenInterval(back.right, np.dom.right);
                work.push_back(std::move(rest));
            }
        }
    }
    std::sort(rmd.branches.begin(), rmd.branches.end(),
              [](const ReturnBranch& a, const ReturnBranch& b) { return a.domain.left < b.domain.left; });
    std::sort(landing_times.begin(), landing_times.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    int N = rmd.N();
    rmd.boundary_landing.assign(std::size_t(std::max(0, N - 1)), -1);
    std::size_t li = 0;
    for (int j = 0; j + 1 < N; ++j) {
        const Rational& a = rmd.branches[std::size_t(j)].domain.right;
        if (li < landing_times.size() && landing_times[li].first == a) {
            LandingPoint lp;
            lp.a = a;
            lp.l = landing_times[li].second;
            long r_left = rmd.branches[std::size_t(j)].return_time;
            long r_right = rmd.branches[std::size_t(j + 1)].return_time;
            lp.plus_chain = critical_hits(m, SignedPoint::plus(a), r_right);
            lp.minus_chain = critical_hits(m, SignedPoint::minus(a), r_left);
            lp.plus_return = iterate(m, SignedPoint::plus(a), r_right);
            lp.minus_return = iterate(m, SignedPoint::minus(a), r_left);
            rmd.boundary_landing[std::size_t(j)] = int(rmd.landings.size());
            rmd.landings.push_back(std::move(lp));
            ++li;
        }
    }
    if (li != landing_times.size()) throw Error(ErrorCode::Diverged, "landing point is not a branch boundary");

    long r_first = rmd.branches.front().return_time, r_last = rmd.branches.back().return_time;
    rmd.left = {SignedPoint::plus(J.left), critical_hits(m, SignedPoint::plus(J.left), r_first), r_first,
                iterate(m, SignedPoint::plus(J.left), r_first)};
    rmd.right = {SignedPoint::minus(J.right), critical_hits(m, SignedPoint::minus(J.right), r_last), r_last,
                 iterate(m, SignedPoint::minus(J.right), r_last)};

    std::vector<int> order(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) order[std::size_t(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return rmd.branches[std::size_t(a)].image.left < rmd.branches[std::size_t(b)].image.left;
    });
    rmd.sigma.assign(std::size_t(N), 0);
    rmd.tau.assign(std::size_t(N), 0);
    for (int k = 0; k < N; ++k) {
        rmd.tau[std::size_t(k)] = order[std::size_t(k)] + 1;
        rmd.sigma[std::size_t(order[std::size_t(k)])] = k + 1;
    }
    return rmd;
}

RotationData rotation_data(const ReturnMapData& rmd)
{
    RotationData rd;
    if (rmd.N() == 1) {
        rd.is_rotation = true;
        rd.rotation_number = Rational(0);
    } else if (rmd.N() == 2 && rmd.sigma[0] == 2) {
        rd.is_rotation = true;
        rd.rotation_number = rmd.branches[1].domain.length() / rmd.J.length();
    }
    return rd;
}

bool dynamically_trivial(const ReturnMapData& rmd)
{
    return rmd.landings.empty() && rmd.N() == 1 && rmd.branches[0].translation.is_zero();
}

bool dynamically_trivial(const ITMap& m, const IntervalSet& X, const HalfOpenInterval& J)
{
    return dynamically_trivial(return_map(m, X, J));
}

}  // namespace itm
