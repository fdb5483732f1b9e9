#include <doctest.h>

#include <random>

#include "itm/attractor.hpp"
#include "itm/error.hpp"
#include "itm/return_map.hpp"
#include "oracle.hpp"

using namespace itm;

namespace {

ITMap fig3()
{
    return ITMap({0, Rational(1, 3), Rational(2, 3), 1}, {Rational(1, 3), Rational(1, 7), Rational(-1, 2)});
}

bool interior_beta(const oracle::Map& m, const oracle::Q& x)
{
    for (int i = 1; i < m.r(); ++i)
        if (m.beta[std::size_t(i)] == x) return true;
    return false;
}

}  // namespace

TEST_CASE("fig3 return maps")
{
    ITMap m = fig3();
    IntervalSet X = attractor(m).X;
    ReturnMapData big = return_map(m, X, X.parts()[1]);
    REQUIRE(big.N() == 2);
    CHECK(big.branches[0].domain == HalfOpenInterval(Rational(1, 2), Rational(2, 3)));
    CHECK(big.branches[0].return_time == 1);
    CHECK(big.branches[1].domain == HalfOpenInterval(Rational(2, 3), Rational(17, 21)));
    CHECK(big.branches[1].return_time == 2);
    RotationData rd = rotation_data(big);
    CHECK(rd.is_rotation);
    CHECK(rd.rotation_number == Rational(6, 13));

    ReturnMapData small = return_map(m, X, X.parts()[0]);
    REQUIRE(small.landings.size() == 1);
    CHECK(small.landings[0].a == Rational(4, 21));
    CHECK(small.landings[0].l == 2);
    CHECK(small.sigma == std::vector<int>{2, 1});
    CHECK(small.tau == std::vector<int>{2, 1});
}

TEST_CASE("return maps agree with piece pushing")
{
    std::mt19937_64 g(37);
    int checked = 0;
    for (int it = 0; it < 120; ++it) {
        auto om = oracle::random_map(g, 3 + int(g() % 2), 36);
        ITMap m = oracle::to_itm(om);
        AttractorResult a = attractor(m);
        REQUIRE(a.finite());
        for (const auto& J : a.X.parts()) {
            ReturnMapData rmd = return_map(m, a.X, J);
            auto want = oracle::return_branches(om, {J.left.to_mpq(), J.right.to_mpq()}, 4 * m.grid_q().get_si() * 4);
            REQUIRE(!want.empty());
            // The library splits at landing points; merge equal neighbours for comparison.
            std::vector<oracle::Branch> got;
            for (const auto& b : rmd.branches) {
                oracle::Branch ob{b.domain.left.to_mpq(), b.domain.right.to_mpq(), b.return_time, b.translation.to_mpq()};
                if (!got.empty() && got.back().right == ob.left && got.back().time == ob.time &&
                    got.back().translation == ob.translation)
                    got.back().right = ob.right;
                else
                    got.push_back(ob);
            }
            REQUIRE(got.size() == want.size());
            for (std::size_t k = 0; k < got.size(); ++k) {
                CHECK(got[k].left == want[k].left);
                CHECK(got[k].right == want[k].right);
                CHECK(got[k].time == want[k].time);
                CHECK(got[k].translation == want[k].translation);
            }
            // Images tile J exactly (bijectivity on X).
            Rational total;
            for (const auto& b : rmd.branches) {
                total += b.image.length();
                CHECK(J.contains(b.image));
                CHECK(b.image.left == b.domain.left + b.translation);
            }
            CHECK(total == J.length());
            // Landing points: first critical hit strictly before the return.
            for (const auto& lp : rmd.landings) {
                oracle::Q x = lp.a.to_mpq();
                for (long t = 0; t < lp.l; ++t) {
                    CHECK_FALSE(interior_beta(om, x));
                    x = oracle::apply(om, x, 1);
                }
                CHECK(interior_beta(om, x));
            }
            ++checked;
        }
    }
    CHECK(checked > 120);
}

TEST_CASE("sigma and tau are inverse permutations")
{
    std::mt19937_64 g(41);
    for (int it = 0; it < 80; ++it) {
        ITMap m = oracle::to_itm(oracle::random_map(g, 4, 30));
        IntervalSet X = attractor(m).X;
        for (const auto& J : X.parts()) {
            ReturnMapData rmd = return_map(m, X, J);
            REQUIRE(int(rmd.sigma.size()) == rmd.N());
            for (int i = 1; i <= rmd.N(); ++i) CHECK(rmd.tau[std::size_t(rmd.sigma[std::size_t(i - 1)] - 1)] == i);
            if (rmd.N() == 1) CHECK(dynamically_trivial(rmd));
        }
    }
}

TEST_CASE("return map outside the attractor is rejected")
{
    ITMap m = fig3();
    IntervalSet X = attractor(m).X;
    CHECK_THROWS_AS(return_map(m, X, HalfOpenInterval(Rational(0), Rational(1, 6))), Error);
}

TEST_CASE("critical hits along a signed orbit")
{
    ITMap m = fig3();
    auto hits = critical_hits(m, SignedPoint::plus(Rational(1, 3)), 16);
    REQUIRE(!hits.empty());
    CHECK(hits.front().disc == SignedPoint::plus(Rational(1, 3)));
    CHECK(hits.front().time == 0);
    CHECK(hits.back().disc == SignedPoint::plus(Rational(2, 3)));
    CHECK(hits.back().time == 15);
}
