#include <doctest.h>

#include <random>

#include "itm/attractor.hpp"
#include "itm/error.hpp"
#include "oracle.hpp"

using namespace itm;

namespace {

ITMap fig3()
{
    return ITMap({0, Rational(1, 3), Rational(2, 3), 1}, {Rational(1, 3), Rational(1, 7), Rational(-1, 2)});
}

}  // namespace

TEST_CASE("fig3 attractor")
{
    AttractorResult a = attractor(fig3());
    REQUIRE(a.finite());
    CHECK(a.n_stable == 3);
    CHECK(a.X.str() == IntervalSet::from_pieces({{Rational(1, 6), Rational(13, 42)}, {Rational(1, 2), Rational(17, 21)}}).str());
    CHECK(default_budget(fig3()) == 4 * 42 * 3);
    AttractorResult cut = attractor(fig3(), 2);
    CHECK_FALSE(cut.finite());
    CHECK(cut.budget_used == 2);
}

TEST_CASE("attractor agrees with direct X_n iteration")
{
    std::mt19937_64 g(23);
    for (int it = 0; it < 150; ++it) {
        auto om = oracle::random_map(g, 2 + int(g() % 3), 48);
        ITMap m = oracle::to_itm(om);
        auto want = oracle::attractor(om, default_budget(m));
        AttractorResult got = attractor(m);
        REQUIRE(want.has_value());
        REQUIRE(got.finite());
        CHECK(got.n_stable == want->first);
        CHECK(got.X == oracle::to_set(want->second));
        CHECK(image(m, got.X) == got.X);
    }
}

TEST_CASE("periods of discontinuities agree with the oracle and respect Q+1")
{
    std::mt19937_64 g(29);
    for (int it = 0; it < 150; ++it) {
        auto om = oracle::random_map(g, 3 + int(g() % 2), 40);
        ITMap m = oracle::to_itm(om);
        auto ep = eventually_periodic(m);
        REQUIRE(ep.has_value());
        long Q = m.grid_q().get_si();
        for (const auto& e : *ep) {
            auto want = oracle::period(om, e.disc.value.to_mpq(), e.disc.sign == Sign::Minus ? -1 : 1, 10 * Q + 10);
            REQUIRE(want.has_value());
            CHECK(e.preperiod == want->first);
            CHECK(e.period == want->second);
            CHECK(e.period <= Q + 1);
        }
    }
}

TEST_CASE("orbit_period handles long cycles and respects max_steps")
{
    // Rotation by 1/1000 on the circle: period 1000.
    ITMap rot({0, Rational(999, 1000), 1}, {Rational(1, 1000), Rational(-999, 1000)});
    auto pp = orbit_period(rot, SignedPoint::plus(Rational(1, 2)));
    REQUIRE(pp.has_value());
    CHECK(pp->first == 0);
    CHECK(pp->second == 1000);
    CHECK_FALSE(orbit_period(rot, SignedPoint::plus(Rational(1, 2)), 999).has_value());
    CHECK(orbit_period(rot, SignedPoint::plus(Rational(1, 2)), 1000).has_value());
    // A geometric orbit through a discontinuity has no period.
    CHECK_FALSE(orbit_period(rot, SignedPoint::geometric(Rational(998, 1000))).has_value());
}

TEST_CASE("boundary witnesses reproduce component endpoints")
{
    std::mt19937_64 g(31);
    std::vector<ITMap> maps{fig3()};
    for (int it = 0; it < 60; ++it) maps.push_back(oracle::to_itm(oracle::random_map(g, 3, 30)));
    for (const auto& m : maps) {
        AttractorResult a = attractor(m);
        REQUIRE(a.finite());
        auto ws = boundary_witness(m, a.X);
        REQUIRE(ws.size() == a.X.size());
        for (const auto& w : ws) {
            if (w.left) CHECK(iterate(m, w.left->disc, w.left->k).value == w.component.left);
            if (w.right) CHECK(iterate(m, w.right->disc, w.right->k).value == w.component.right);
        }
    }
    auto ws = boundary_witness(fig3(), attractor(fig3()).X);
    CHECK(ws[0].left->disc == SignedPoint::plus(Rational(2, 3)));
    CHECK(ws[0].left->k == 1);
    CHECK(ws[0].right->disc == SignedPoint::minus(Rational(2, 3)));
    CHECK(ws[0].right->k == 2);
}

TEST_CASE("orbit classes and maximal periodic intervals")
{
    ITMap m = fig3();
    OrbitClass oc = classify_orbit(m, SignedPoint::plus(Rational(1, 3)));
    CHECK(oc.tag == OrbitTag::Precritical);
    CHECK(oc.hit == SignedPoint::plus(Rational(2, 3)));
    CHECK(oc.time == 15);
    HalfOpenInterval P = maximal_periodic_interval(m, SignedPoint::plus(Rational(2, 3)));
    CHECK(P == HalfOpenInterval(Rational(2, 3), Rational(29, 42)));
    // Oracle: P returns to itself rigidly and each iterate stays inside one branch.
    auto pp = orbit_period(m, SignedPoint::plus(P.left));
    REQUIRE(pp.has_value());
    oracle::Map om{{0, oracle::q("1/3"), oracle::q("2/3"), 1}, {oracle::q("1/3"), oracle::q("1/7"), oracle::q("-1/2")}};
    oracle::Q l = P.left.to_mpq(), r = P.right.to_mpq();
    for (long t = 0; t < pp->second; ++t) {
        int b = oracle::branch(om, l, 1);
        CHECK(oracle::branch(om, r, -1) == b);
        l += om.gamma[std::size_t(b)];
        r += om.gamma[std::size_t(b)];
    }
    CHECK(l == P.left.to_mpq());
    CHECK_THROWS_AS(maximal_periodic_interval(m, SignedPoint::plus(Rational(1, 3))), Error);
}
