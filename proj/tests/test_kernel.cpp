#include <doctest.h>

#include <limits>
#include <random>

#include "itm/error.hpp"
#include "itm/interval.hpp"
#include "oracle.hpp"

using namespace itm;
using oracle::Q;

namespace {

Rational rnd(std::mt19937_64& g, long span)
{
    std::uniform_int_distribution<long> n(-span, span), d(1, span);
    return Rational(n(g), d(g));
}

}  // namespace

TEST_CASE("rational parse and print round trip")
{
    CHECK(Rational::parse("6/8").str() == "3/4");
    CHECK(Rational::parse("-2/4").str() == "-1/2");
    CHECK(Rational::parse("5").str() == "5");
    CHECK(Rational::parse("4/2").str() == "2");
    CHECK_THROWS_AS(Rational::parse("0.5"), Error);
    CHECK_THROWS_AS(Rational::parse("1/0"), Error);
    CHECK_THROWS_AS(Rational::parse(""), Error);
    CHECK_THROWS_AS(Rational::parse("1/2x"), Error);
}

TEST_CASE("rational arithmetic agrees with mpq including overflow into bignums")
{
    std::mt19937_64 g(11);
    for (int it = 0; it < 2000; ++it) {
        Rational a = rnd(g, 1000), b = rnd(g, 1000);
        Q qa = a.to_mpq(), qb = b.to_mpq();
        CHECK((a + b).to_mpq() == qa + qb);
        CHECK((a - b).to_mpq() == qa - qb);
        CHECK((a * b).to_mpq() == qa * qb);
        if (!b.is_zero()) CHECK((a / b).to_mpq() == qa / qb);
        CHECK(((a < b) == (qa < qb)));
        CHECK(((a == b) == (qa == qb)));
    }
    Rational big(std::numeric_limits<long long>::max() - 1, 3);
    Rational sq = big * big;
    Q qb(big.to_mpq());
    CHECK(sq.to_mpq() == qb * qb);
    CHECK(!sq.is_inline());
    CHECK((sq / big).to_mpq() == qb);
    CHECK((sq - sq).is_zero());
    CHECK((sq - sq).is_inline());
}

TEST_CASE("equal values hash equally whatever their representation")
{
    Rational big(std::numeric_limits<long long>::max(), 1);
    Rational x = (big * Rational(3)) / (big * Rational(6));
    CHECK(x == Rational(1, 2));
    CHECK(x.hash() == Rational(1, 2).hash());
}

TEST_CASE("signed points order x- < x < x+ < y-")
{
    Rational x(1, 3), y(1, 2);
    CHECK(SignedPoint::minus(x) < SignedPoint::geometric(x));
    CHECK(SignedPoint::geometric(x) < SignedPoint::plus(x));
    CHECK(SignedPoint::plus(x) < SignedPoint::minus(y));
    CHECK(SignedPoint::parse("2/3+") == SignedPoint::plus(Rational(2, 3)));
    CHECK(SignedPoint::parse("13/42-").str() == "13/42-");
}

TEST_CASE("half-open membership of signed endpoints")
{
    HalfOpenInterval iv(Rational(1, 4), Rational(1, 2));
    CHECK(iv.contains(SignedPoint::plus(Rational(1, 4))));
    CHECK(iv.contains(SignedPoint::geometric(Rational(1, 4))));
    CHECK_FALSE(iv.contains(SignedPoint::minus(Rational(1, 4))));
    CHECK(iv.contains(SignedPoint::minus(Rational(1, 2))));
    CHECK_FALSE(iv.contains(SignedPoint::geometric(Rational(1, 2))));
    CHECK_FALSE(iv.contains(SignedPoint::plus(Rational(1, 2))));
    CHECK_THROWS_AS(HalfOpenInterval(Rational(1, 2), Rational(1, 2)), Error);
}

TEST_CASE("interval set normal form matches the oracle union")
{
    std::mt19937_64 g(3);
    for (int it = 0; it < 500; ++it) {
        std::vector<HalfOpenInterval> ps;
        oracle::Set os;
        int n = int(g() % 6);
        for (int k = 0; k < n; ++k) {
            long a = long(g() % 24), b = long(g() % 24);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            ps.emplace_back(Rational(a, 24), Rational(b, 24));
            os.push_back({Q(a, 24), Q(b, 24)});
        }
        for (auto& p : os) p.first.canonicalize(), p.second.canonicalize();
        IntervalSet s = IntervalSet::from_pieces(ps);
        CHECK(s == oracle::to_set(oracle::normalize(os)));
        auto parts = s.parts();
        for (std::size_t k = 1; k < parts.size(); ++k) CHECK(parts[k - 1].right < parts[k].left);
    }
}

TEST_CASE("set algebra identities on random sets")
{
    std::mt19937_64 g(5);
    auto random_set = [&] {
        std::vector<HalfOpenInterval> ps;
        for (int k = 0; k < 4; ++k) {
            long a = long(g() % 30), b = long(g() % 30);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            ps.emplace_back(Rational(a, 30), Rational(b, 30));
        }
        return IntervalSet::from_pieces(ps);
    };
    for (int it = 0; it < 300; ++it) {
        IntervalSet a = random_set(), b = random_set();
        CHECK(unite(a, b).length() + intersect(a, b).length() == a.length() + b.length());
        CHECK(unite(subtract(a, b), intersect(a, b)) == a);
        CHECK(subset(intersect(a, b), a));
        CHECK(intersect(subtract(a, b), b).empty());
        for (long k = 0; k < 30; ++k) {
            SignedPoint p = SignedPoint::plus(Rational(k, 30));
            CHECK(member(unite(a, b), p) == (member(a, p) || member(b, p)));
            CHECK(member(intersect(a, b), p) == (member(a, p) && member(b, p)));
        }
    }
}

TEST_CASE("translate keeps structure and rejects leaving the unit interval")
{
    IntervalSet s = IntervalSet::from_pieces({{Rational(1, 4), Rational(1, 2)}, {Rational(3, 4), Rational(7, 8)}});
    IntervalSet t = translate(s, Rational(1, 8));
    REQUIRE(t.size() == 2);
    CHECK(t.parts()[0] == HalfOpenInterval(Rational(3, 8), Rational(5, 8)));
    CHECK(t.parts()[1].right == Rational(1));
    CHECK_THROWS_AS(translate(s, Rational(1, 4)), Error);
    CHECK(find_part(s, SignedPoint::minus(Rational(1, 2))) == 0);
    CHECK(find_part(s, SignedPoint::plus(Rational(1, 2))) == -1);
}
