#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "itm/return_map.hpp"

using namespace itm;
using fixtures::fig3;

namespace {

// ⟨L⟩ = -a_j, ⟨C⟩ = 0, ⟨R⟩ (plus the start point when nothing was hit) lies in J.
void check_identities(const ITMap& m, const std::vector<CoeffVector>& vs, const ReturnMapData* rmd)
{
    const HalfOpenInterval* J = rmd ? &rmd->J : nullptr;
    RVector w = param_vector(m);
    for (const auto& v : vs) {
        Rational p = product(v, w);
        CAPTURE(v.label);
        switch (v.role) {
        case VectorRole::Connection:
        case VectorRole::GeneralConnection: CHECK(p.is_zero()); break;
        case VectorRole::Landing:
            REQUIRE(rmd);
            CHECK(p == -(v.j < rmd->N() ? rmd->branches[std::size_t(v.j)].domain.left : rmd->J.right));
            break;
        case VectorRole::Return:
            if (J) {
                Rational at = m.critical_index(v.beta) > 0 ? p : p + v.beta.value;
                CHECK(J->contains(SignedPoint{at, v.beta.sign}));
            }
            break;
        default: break;
        }
    }
}

}  // namespace

TEST_CASE("products of the documented fig3 vectors")
{
    ITMap m = fig3();
    RVector w = param_vector(m);
    CoeffVector c = general_connection_vector(m, SignedPoint::minus(Rational(1, 3)));
    CHECK(c.e(1) == 1);
    CHECK(c.f(1) == 1);
    CHECK(c.f(2) == -1);
    CHECK(product(c, w).is_zero());
    CoeffVector r = make_vector(VectorRole::Return, "R", 3, {1, 0, 1}, {{2, 1}});
    CHECK(product(r, w) == Rational(1, 2));
    CoeffVector zero = make_vector(VectorRole::Connection, "0", 3, {0, 0, 0}, {});
    CHECK(product(zero, w).is_zero());
    CHECK_THROWS_AS(product(zero, RVector(3)), Error);

    IntervalSet X = attractor(m).X;
    ReturnMapData small = return_map(m, X, X.parts()[0]);
    CoeffVector L = landing_vector(m, small, 1);
    CHECK(L.e(1) == 1);
    CHECK(L.e(2) == 1);
    CHECK(L.e(3) == 0);
    CHECK(L.f(2) == -1);
    CHECK(product(L, w) == Rational(-4, 21));
}

TEST_CASE("fig3 family on the large component")
{
    ITMap m = fig3();
    IntervalSet X = attractor(m).X;
    VectorFamily f = assemble_family(m, X, X.parts()[1], {});
    REQUIRE(f.find("L^0_1"));
    CHECK(f.find("L^0_1")->f(2) == -1);
    REQUIRE(f.find("R^{0,+}_0"));
    CHECK(f.find("R^{0,+}_0")->e(2) == 1);
    REQUIRE(f.find("R^{0,+}_1"));
    CHECK(f.find("R^{0,+}_1")->e(1) == 1);
    CHECK(f.find("R^{0,+}_1")->e(3) == 1);
    CHECK(f.find("R^{0,+}_1")->f(2) == 1);
    REQUIRE(f.find("C_{1/3-}"));
    // 1/3+ reaches 2/3+ at time 15, so it is in C_1 as well.
    REQUIRE(f.find("C_{1/3+}"));
    CHECK(f.size() == 5);
    CHECK(rank(f) == 5);
    CHECK(family_csv(f).rfind("role,label,e_1,e_2,e_3,f_1,f_2\n", 0) == 0);
    ReturnMapData big = return_map(m, X, X.parts()[1]);
    check_identities(m, f.vectors, &big);
}

TEST_CASE("rank of degenerate families")
{
    CHECK(rank(std::vector<CoeffVector>{}) == 0);
    CoeffVector a = make_vector(VectorRole::Connection, "a", 3, {1, 2, 0}, {{1, 1}});
    CoeffVector b = make_vector(VectorRole::Connection, "b", 3, {0, 1, 1}, {{2, -1}});
    CHECK(rank({a, b, a}) == 2);
    ITMap rot = fixtures::rotation(Rational(2, 7));
    IntervalSet X = attractor(rot).X;
    VectorFamily f = assemble_family(rot, X, X.parts()[0], {});
    CHECK(rank(f) == long(f.size()));
}

TEST_CASE("product identities over the fixture suite and random maps")
{
    std::vector<ITMap> maps = fixtures::suite();
    std::mt19937_64 g(43);
    for (int it = 0; it < 60; ++it) maps.push_back(fixtures::random_map(g, 3 + int(g() % 2), 30));
    long vectors = 0;
    for (const auto& m : maps) {
        IntervalSet X = attractor(m).X;
        for (std::size_t i = 0; i < X.size(); ++i) {
            const HalfOpenInterval& J = X.parts()[i];
            ReturnMapData rmd = return_map(m, X, J);
            auto vs = component_vectors(m, rmd, 0);
            check_identities(m, vs, &rmd);
            vectors += long(vs.size());
            for (const auto& P : fixtures::periodic_partners(m, X, J)) {
                auto ps = periodic_interval_vectors(m, P, 1);
                check_identities(m, ps, nullptr);
                vectors += long(ps.size());
            }
        }
        auto cs = outside_connection_vectors(m, X);
        check_identities(m, cs, nullptr);
        vectors += long(cs.size());
        for (const auto& beta : m.critical_set())
            if (!in_c1(m, beta)) CHECK_THROWS_AS(general_connection_vector(m, beta), Error);
    }
    CHECK(vectors > 200);
}

TEST_CASE("family rank equals family size on random finite-type maps")
{
    std::mt19937_64 g(47);
    int families = 0;
    for (int it = 0; it < 40; ++it) {
        ITMap m = fixtures::random_map(g, 3 + int(g() % 2), 24);
        IntervalSet X = attractor(m).X;
        for (const auto& J : X.parts()) {
            VectorFamily f;
            try {
                f = assemble_family(m, X, J, fixtures::periodic_partners(m, X, J));
            } catch (const Error& e) {
                CHECK(e.code() != ErrorCode::OrbitsOverlap);
                continue;
            }
            CAPTURE(m.str());
            CHECK(rank(f) == long(f.size()));
            ++families;
        }
    }
    CHECK(families >= 40);
}

TEST_CASE("perturbation law is exact while itineraries agree")
{
    std::mt19937_64 g(53);
    int certified = 0;
    while (certified < 60) {
        ITMap m = fixtures::random_map(g, 3 + int(g() % 2), 30);
        int r = m.r();
        std::vector<Rational> delta;
        for (int i = 0; i < 2 * r - 1; ++i) delta.push_back(Rational(long(g() % 21) - 10, 1000000));
        std::vector<Rational> p = m.params();
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += delta[i];
        ITMap mt = ITMap::from_params(r, p);
        if (!validate(mt).ok()) continue;
        auto cs = m.critical_set();
        SignedPoint beta = cs[std::size_t(g() % cs.size())];
        int idx = m.critical_index(beta);
        SignedPoint bt{mt.beta(idx), beta.sign};
        long n = 1 + long(g() % 25);
        if (itinerary(m, beta, n) != itinerary(mt, bt, n)) continue;
        auto counts = entry_counts(m, beta, n);
        CoeffVector v = make_vector(VectorRole::Connection, "v", r, counts, {{idx, 1}});
        Rational lhs = iterate(mt, bt, n).value - iterate(m, beta, n).value;
        CHECK(lhs == product(v, to_rvector(delta)));
        ++certified;
    }
}

TEST_CASE("minimum-norm perturbation solutions")
{
    CoeffVector e1 = make_vector(VectorRole::Connection, "e1", 3, {1, 0, 0}, {});
    RVector d = solve_perturbation({{e1, Rational(1, 100)}});
    REQUIRE(d.size() == 5);
    CHECK(d(0) == Rational(1, 100));
    for (int i = 1; i < 5; ++i) CHECK(d(i).is_zero());

    ITMap m = fig3();
    IntervalSet X = attractor(m).X;
    VectorFamily f = assemble_family(m, X, X.parts()[1], {});
    std::vector<Constraint> zero, pushed;
    for (const auto& v : f.vectors) {
        zero.push_back({v, Rational(0)});
        pushed.push_back({v, v.label == "R^{0,+}_1" ? Rational(-1, 1000) : Rational(0)});
    }
    RVector z = solve_perturbation(zero);
    for (Eigen::Index i = 0; i < z.size(); ++i) CHECK(z(i).is_zero());
    RVector s = solve_perturbation(pushed);
    for (const auto& c : pushed) CHECK(product(c.v, s) == c.target);

    // Inconsistent: the same vector with two targets.
    try {
        solve_perturbation({{e1, Rational(1)}, {e1, Rational(2)}});
        FAIL("expected Infeasible");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Infeasible);
        CHECK(!e.details().empty());
    }
}
