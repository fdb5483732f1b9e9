#pragma once

#include <random>
#include <vector>

#include "itm/attractor.hpp"
#include "itm/bt.hpp"
#include "itm/error.hpp"
#include "itm/vectors.hpp"

namespace fixtures {

using itm::ITMap;
using itm::Rational;

inline ITMap fig3()
{
    return ITMap({0, Rational(1, 3), Rational(2, 3), 1}, {Rational(1, 3), Rational(1, 7), Rational(-1, 2)});
}

inline ITMap bt_half_quarter() { return itm::bt_map({Rational(1, 2), Rational(1, 4)}); }

inline ITMap iet3()
{
    return ITMap({0, Rational(1, 4), Rational(1, 2), 1}, {Rational(3, 4), Rational(1, 4), Rational(-1, 2)});
}

inline ITMap rotation(const Rational& t)
{
    return ITMap({0, Rational(1) - t, 1}, {t, t - Rational(1)});
}

// The fixture maps used across vector tests.
inline std::vector<ITMap> suite()
{
    return {fig3(),
            bt_half_quarter(),
            iet3(),
            rotation(Rational(2, 7)),
            ITMap({0, Rational(5, 13), Rational(7, 13), 1}, {Rational(3, 13), Rational(-3, 13), Rational(-3, 13)}),
            ITMap({0, Rational(1, 10), Rational(2, 15), 1}, {Rational(3, 10), Rational(1, 3), Rational(-1, 15)}),
            ITMap({0, Rational(3, 20), Rational(11, 20), 1}, {Rational(1, 20), Rational(9, 20), Rational(-2, 5)}),
            ITMap({0, Rational(1, 5), Rational(1, 2), Rational(4, 5), 1},
                  {Rational(3, 5), Rational(1, 10), Rational(-1, 2), Rational(-3, 5)})};
}

// Random valid ITM(r) with parameters in (1/q)ℤ, q <= max_den.
inline ITMap random_map(std::mt19937_64& g, int r, int max_den)
{
    for (;;) {
        int q = std::uniform_int_distribution<int>(std::max(3, r), max_den)(g);
        std::uniform_int_distribution<int> u(1, q - 1);
        std::vector<int> cut{0, q};
        while (int(cut.size()) < r + 1) {
            int c = u(g);
            if (std::find(cut.begin(), cut.end(), c) == cut.end()) cut.push_back(c);
        }
        std::sort(cut.begin(), cut.end());
        std::vector<Rational> beta, gamma;
        for (int c : cut) beta.push_back(Rational(c, q));
        for (int s = 1; s <= r; ++s)
            gamma.push_back(Rational(std::uniform_int_distribution<int>(-cut[std::size_t(s - 1)], q - cut[std::size_t(s)])(g), q));
        ITMap m(beta, gamma);
        if (itm::validate(m).ok()) return m;
    }
}

// J_0 plus greedily chosen maximal periodic intervals of discontinuities in X with
// pairwise disjoint orbits.
inline std::vector<itm::HalfOpenInterval> periodic_partners(const ITMap& m, const itm::IntervalSet& X,
                                                            const itm::HalfOpenInterval& J0)
{
    std::vector<itm::IntervalSet> taken{itm::interval_orbit(m, X, J0)};
    std::vector<itm::HalfOpenInterval> out;
    for (const auto& beta : m.critical_set()) {
        if (!itm::member(X, beta)) continue;
        itm::HalfOpenInterval P;
        try {
            P = itm::maximal_periodic_interval(m, beta);
        } catch (const itm::Error&) {
            continue;
        }
        itm::IntervalSet orb = itm::interval_orbit(m, X, P);
        bool free = true;
        for (const auto& t : taken) free = free && itm::intersect(t, orb).empty();
        if (!free) continue;
        taken.push_back(orb);
        out.push_back(P);
    }
    return out;
}

}  // namespace fixtures
