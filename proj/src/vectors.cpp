#include "itm/vectors.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "itm/error.hpp"

namespace itm {

namespace {

CountVector zeros(int r, bool extended) { return CountVector::Zero(extended ? 2 * r + 1 : 2 * r - 1); }

Eigen::Index f_slot(int r, bool extended, int i) { return r + (extended ? i : i - 1); }

void add_counts(CoeffVector& v, const std::vector<long>& counts)
{
    for (std::size_t s = 0; s < counts.size(); ++s) v.c(Eigen::Index(s)) += counts[s];
}

void add_f(CoeffVector& v, int i, int coeff)
{
    if (i == 0 && !v.extended) return;
    v.c(f_slot(v.r, v.extended, i)) += coeff;
}

CoeffVector blank(VectorRole role, std::string label, int r)
{
    CoeffVector v;
    v.role = role;
    v.label = std::move(label);
    v.r = r;
    v.c = zeros(r, false);
    return v;
}

std::string side_char(int side) { return side > 0 ? "+" : "-"; }

const BoundaryOrbit* boundary_of(const ReturnMapData& rmd, int j, int side)
{
    if (side > 0 && j == 0) return &rmd.left;
    if (side < 0 && j == rmd.N()) return &rmd.right;
    return nullptr;
}

const LandingPoint* landing_of(const ReturnMapData& rmd, int j)
{
    if (j < 1 || j >= rmd.N()) return nullptr;
    int idx = rmd.boundary_landing[std::size_t(j - 1)];
    return idx < 0 ? nullptr : &rmd.landings[std::size_t(idx)];
}

Rational a_of(const ReturnMapData& rmd, int j)
{
    if (j == 0) return rmd.J.left;
    if (j == rmd.N()) return rmd.J.right;
    return rmd.branches[std::size_t(j - 1)].domain.right;
}

// Fraction-free row echelon rank of an integer matrix.
long bareiss_rank(std::vector<std::vector<mpz_class>> a)
{
    if (a.empty()) return 0;
    std::size_t rows = a.size(), cols = a[0].size();
    mpz_class prev = 1;
    std::size_t rk = 0;
    for (std::size_t c = 0; c < cols && rk < rows; ++c) {
        std::size_t piv = rk;
        while (piv < rows && a[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(a[piv], a[rk]);
        for (std::size_t i = rk + 1; i < rows; ++i) {
            for (std::size_t k = c + 1; k < cols; ++k) {
                a[i][k] = (a[rk][c] * a[i][k] - a[i][c] * a[rk][k]);
                mpz_divexact(a[i][k].get_mpz_t(), a[i][k].get_mpz_t(), prev.get_mpz_t());
            }
            a[i][c] = 0;
        }
        prev = a[rk][c];
        ++rk;
    }
    return long(rk);
}

}  // namespace

const char* role_name(VectorRole r)
{
    switch (r) {
        case VectorRole::Landing: return "landing";
        case VectorRole::Connection: return "connection";
        case VectorRole::Return: return "return";
        case VectorRole::GeneralConnection: return "general_connection";
        case VectorRole::Family: return "family";
    }
    return "?";
}

CoeffVector make_vector(VectorRole role, std::string label, int r, const std::vector<long>& counts,
                        std::initializer_list<std::pair<int, int>> f_terms, bool extended)
{
    CoeffVector v;
    v.role = role;
    v.label = std::move(label);
    v.r = r;
    v.extended = extended;
    v.c = zeros(r, extended);
    add_counts(v, counts);
    for (auto [i, coeff] : f_terms) add_f(v, i, coeff);
    return v;
}

CoeffVector lift(const CoeffVector& v)
{
    if (v.extended) return v;
    CoeffVector out = v;
    out.extended = true;
    out.c = zeros(v.r, true);
    out.c.head(v.r) = v.c.head(v.r);
    out.c.segment(v.r + 1, v.r - 1) = v.c.tail(v.r - 1);
    return out;
}

RVector param_vector(const ITMap& m) { return to_rvector(m.params()); }
RVector param_vector(const ExtendedITMap& m) { return to_rvector(m.params()); }

Rational product(const CoeffVector& v, const RVector& w)
{
    if (v.dim() != w.size())
        throw Error(ErrorCode::DimensionMismatch, "vector " + v.label + " has dimension " + std::to_string(v.dim()) +
                                                      ", parameter vector has " + std::to_string(w.size()));
    return dot_exact(v.c, w);
}

const std::vector<ChainHit>* chain_of(const ReturnMapData& rmd, int j, int side)
{
    if (const BoundaryOrbit* b = boundary_of(rmd, j, side)) return &b->chain;
    if (const LandingPoint* lp = landing_of(rmd, j)) return side > 0 ? &lp->plus_chain : &lp->minus_chain;
    return nullptr;
}

long return_time_of(const ReturnMapData& rmd, int j, int side)
{
    int idx = side > 0 ? j : j - 1;
    if (idx < 0 || idx >= rmd.N()) throw Error(ErrorCode::PreconditionViolated, "no branch on that side of a_j");
    return rmd.branches[std::size_t(idx)].return_time;
}

CoeffVector landing_vector(const ITMap& m, const ReturnMapData& rmd, int j, int J_index)
{
    const std::vector<ChainHit>* chain = nullptr;
    SignedPoint start;
    if (j == 0) {
        chain = &rmd.left.chain;
        start = rmd.left.point;
    } else if (j == rmd.N()) {
        chain = &rmd.right.chain;
        start = rmd.right.point;
    } else if (const LandingPoint* lp = landing_of(rmd, j)) {
        chain = &lp->plus_chain;
        start = SignedPoint::plus(lp->a);
    }
    if (!chain || chain->empty())
        throw Error(ErrorCode::PreconditionViolated, "a_" + std::to_string(j) + " is not a landing point");
    const ChainHit& first = chain->front();
    CoeffVector v = blank(VectorRole::Landing, "L^" + std::to_string(J_index) + "_" + std::to_string(j), m.r());
    add_counts(v, entry_counts(m, start, first.time));
    add_f(v, m.critical_index(first.disc), -1);
    v.J = J_index;
    v.j = j;
    v.beta = first.disc;
    return v;
}

std::vector<CoeffVector> connection_vectors(const ITMap& m, const ReturnMapData& rmd, int j, int side, int J_index)
{
    std::vector<CoeffVector> out;
    const std::vector<ChainHit>* chain = chain_of(rmd, j, side);
    if (!chain) return out;
    for (std::size_t k = 0; k + 1 < chain->size(); ++k) {
        const ChainHit& from = (*chain)[k];
        const ChainHit& to = (*chain)[k + 1];
        CoeffVector v = blank(VectorRole::Connection,
                              "C^{" + std::to_string(J_index) + "," + side_char(side) + "}(" + std::to_string(j) +
                                  "," + std::to_string(k + 1) + ")",
                              m.r());
        add_counts(v, entry_counts(m, from.disc, to.time - from.time));
        add_f(v, m.critical_index(from.disc), 1);
        add_f(v, m.critical_index(to.disc), -1);
        v.J = J_index;
        v.j = j;
        v.k = int(k + 1);
        v.side = side;
        v.beta = from.disc;
        out.push_back(std::move(v));
    }
    return out;
}

CoeffVector return_vector(const ITMap& m, const ReturnMapData& rmd, int j, int side, int J_index)
{
    long ret = return_time_of(rmd, j, side);
    const std::vector<ChainHit>* chain = chain_of(rmd, j, side);
    CoeffVector v = blank(VectorRole::Return,
                          "R^{" + std::to_string(J_index) + "," + side_char(side) + "}_" + std::to_string(j), m.r());
    v.J = J_index;
    v.j = j;
    v.side = side;
    if (chain && !chain->empty()) {
        const ChainHit& last = chain->back();
        add_counts(v, entry_counts(m, last.disc, ret - last.time));
        add_f(v, m.critical_index(last.disc), 1);
        v.beta = last.disc;
    } else {
        SignedPoint a = side > 0 ? SignedPoint::plus(a_of(rmd, j)) : SignedPoint::minus(a_of(rmd, j));
        add_counts(v, entry_counts(m, a, ret));
        v.beta = a;
    }
    return v;
}

std::vector<CoeffVector> periodic_chain_vectors(const ITMap& m, const SignedPoint& boundary, long period, bool cyclic,
                                                int J_index, int side)
{
    std::vector<CoeffVector> out;
    std::vector<ChainHit> chain = critical_hits(m, boundary, period);
    int j = side > 0 ? 0 : 1;
    auto label = [&](std::size_t k) {
        return "C^{" + std::to_string(J_index) + "," + side_char(side) + "}(" + std::to_string(j) + "," +
               std::to_string(k) + ")";
    };
    for (std::size_t k = 0; k < chain.size(); ++k) {
        bool closing = k + 1 == chain.size();
        if (closing && !cyclic) break;
        const ChainHit& from = chain[k];
        const ChainHit& to = chain[closing ? 0 : k + 1];
        long dt = closing ? period - from.time + to.time : to.time - from.time;
        CoeffVector v = blank(VectorRole::Connection, label(k + 1), m.r());
        add_counts(v, entry_counts(m, from.disc, dt));
        add_f(v, m.critical_index(from.disc), 1);
        add_f(v, m.critical_index(to.disc), -1);
        v.J = J_index;
        v.j = j;
        v.k = int(k + 1);
        v.side = side;
        v.beta = from.disc;
        out.push_back(std::move(v));
    }
    return out;
}

bool in_c1(const ITMap& m, const SignedPoint& beta) { return classify_orbit(m, beta).tag == OrbitTag::Precritical; }

CoeffVector general_connection_vector(const ITMap& m, const SignedPoint& beta)
{
    if (m.critical_index(beta) == 0) throw Error(ErrorCode::InvalidPoint, beta.str() + " is not a signed discontinuity");
    OrbitClass oc = classify_orbit(m, beta);
    if (oc.tag != OrbitTag::Precritical)
        throw Error(ErrorCode::NotInC1, beta.str() + " never lands on a discontinuity");
    CoeffVector v = blank(VectorRole::GeneralConnection, "C_{" + beta.str() + "}", m.r());
    add_counts(v, entry_counts(m, beta, oc.time));
    add_f(v, m.critical_index(beta), 1);
    add_f(v, m.critical_index(oc.hit), -1);
    v.beta = beta;
    return v;
}

const CoeffVector* VectorFamily::find(const std::string& label) const
{
    for (const auto& v : vectors)
        if (v.label == label) return &v;
    return nullptr;
}

IntervalSet interval_orbit(const ITMap& m, const IntervalSet& X, const HalfOpenInterval& J)
{
    ReturnMapData rmd = return_map(m, X, J);
    std::vector<HalfOpenInterval> pieces;
    for (const auto& b : rmd.branches) {
        SignedPoint p = SignedPoint::plus(b.domain.left);
        Rational len = b.domain.length();
        for (long t = 0; t < b.return_time; ++t) {
            pieces.emplace_back(p.value, p.value + len);
            p = apply(m, p);
        }
    }
    return IntervalSet::from_pieces(std::move(pieces));
}

std::vector<CoeffVector> component_vectors(const ITMap& m, const ReturnMapData& rmd, int J_index)
{
    std::vector<CoeffVector> out;
    int N = rmd.N();
    for (int j = 0; j <= N; ++j) {
        const std::vector<ChainHit>* plus = j < N ? chain_of(rmd, j, +1) : nullptr;
        const std::vector<ChainHit>* minus = j > 0 ? chain_of(rmd, j, -1) : nullptr;
        bool lands = (plus && !plus->empty()) || (minus && !minus->empty());
        if (lands) out.push_back(landing_vector(m, rmd, j, J_index));
    }
    for (int j = 0; j < N; ++j) {
        out.push_back(return_vector(m, rmd, j, +1, J_index));
        for (auto& v : connection_vectors(m, rmd, j, +1, J_index)) out.push_back(std::move(v));
    }
    for (int j = 1; j <= N; ++j)
        for (auto& v : connection_vectors(m, rmd, j, -1, J_index)) out.push_back(std::move(v));
    return out;
}

std::vector<CoeffVector> periodic_interval_vectors(const ITMap& m, const HalfOpenInterval& P, int J_index,
                                                   bool minus_cyclic)
{
    SignedPoint x = SignedPoint::plus(P.left), y = SignedPoint::minus(P.right);
    auto pp = orbit_period(m, x);
    if (!pp || pp->first != 0) throw Error(ErrorCode::NotPeriodic, P.str() + " is not a periodic interval");
    if (maximal_periodic_interval(m, x) != P)
        throw Error(ErrorCode::PreconditionViolated, P.str() + " is not a maximal periodic interval");
    std::vector<CoeffVector> out = periodic_chain_vectors(m, x, pp->second, true, J_index, +1);
    for (auto& v : periodic_chain_vectors(m, y, pp->second, minus_cyclic, J_index, -1)) out.push_back(std::move(v));
    return out;
}

std::vector<CoeffVector> outside_connection_vectors(const ITMap& m, const IntervalSet& X)
{
    std::vector<CoeffVector> out;
    for (const auto& beta : m.critical_set())
        if (!member(X, beta) && in_c1(m, beta)) out.push_back(general_connection_vector(m, beta));
    return out;
}

VectorFamily assemble_family(const ITMap& m, const IntervalSet& X, const HalfOpenInterval& J0,
                             const std::vector<HalfOpenInterval>& others, FamilyMode mode)
{
    const auto& parts = X.parts();
    if (std::find(parts.begin(), parts.end(), J0) == parts.end())
        throw Error(ErrorCode::PreconditionViolated, J0.str() + " is not a component of X");

    std::vector<IntervalSet> orbits;
    orbits.push_back(interval_orbit(m, X, J0));
    for (const auto& J : others) {
        if (mode == FamilyMode::ComponentsExperimental && std::find(parts.begin(), parts.end(), J) == parts.end())
            throw Error(ErrorCode::PreconditionViolated, J.str() + " is not a component of X");
        orbits.push_back(interval_orbit(m, X, J));
    }
    for (std::size_t a = 0; a < orbits.size(); ++a)
        for (std::size_t b = a + 1; b < orbits.size(); ++b)
            if (!intersect(orbits[a], orbits[b]).empty()) {
                auto name = [&](std::size_t i) { return i == 0 ? J0.str() : others[i - 1].str(); };
                throw Error(ErrorCode::OrbitsOverlap, "orbits of " + name(a) + " and " + name(b) + " intersect",
                            {name(a), name(b), intersect(orbits[a], orbits[b]).str()});
            }

    VectorFamily fam;
    fam.vectors = component_vectors(m, return_map(m, X, J0), 0);
    for (std::size_t i = 0; i < others.size(); ++i) {
        int idx = int(i + 1);
        if (mode == FamilyMode::PeriodicIntervals) {
            for (auto& v : periodic_interval_vectors(m, others[i], idx)) fam.vectors.push_back(std::move(v));
        } else {
            ReturnMapData rmd = return_map(m, X, others[i]);
            if (rmd.N() == 1 && rmd.branches[0].translation.is_zero()) {
                long p = rmd.branches[0].return_time;
                for (auto& v : periodic_chain_vectors(m, rmd.left.point, p, true, idx, +1))
                    fam.vectors.push_back(std::move(v));
                for (auto& v : periodic_chain_vectors(m, rmd.right.point, p, false, idx, -1))
                    fam.vectors.push_back(std::move(v));
            } else {
                for (auto& v : component_vectors(m, rmd, idx)) fam.vectors.push_back(std::move(v));
            }
        }
    }
    for (auto& v : outside_connection_vectors(m, X)) fam.vectors.push_back(std::move(v));

    std::set<std::string> labels;
    for (const auto& v : fam.vectors)
        if (!labels.insert(v.label).second) throw Error(ErrorCode::PreconditionViolated, "duplicate label " + v.label);
    return fam;
}

long rank(const std::vector<CoeffVector>& vs)
{
    if (vs.empty()) return 0;
    std::vector<std::vector<mpz_class>> a;
    Eigen::Index d = vs.front().dim();
    for (const auto& v : vs) {
        if (v.dim() != d) throw Error(ErrorCode::DimensionMismatch, "family mixes vector dimensions");
        std::vector<mpz_class> row(static_cast<std::size_t>(d));
        for (Eigen::Index i = 0; i < d; ++i) row[std::size_t(i)] = mpz_class(static_cast<long>(v.c(i)));
        a.push_back(std::move(row));
    }
    return bareiss_rank(std::move(a));
}

long rank(const VectorFamily& f) { return rank(f.vectors); }

RVector solve_perturbation(const std::vector<Constraint>& cs)
{
    if (cs.empty()) return RVector();
    Eigen::Index d = cs.front().v.dim();
    Eigen::Index k = Eigen::Index(cs.size());
    RMatrix A(k, d);
    RVector b(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& c = cs[std::size_t(i)];
        if (c.v.dim() != d) throw Error(ErrorCode::DimensionMismatch, "constraint " + c.v.label + " has wrong dimension");
        for (Eigen::Index j = 0; j < d; ++j) A(i, j) = Rational(static_cast<long long>(c.v.c(j)));
        b(i) = c.target;
    }

    // Row reduction of [A | b | I]; the identity block records each row as a combination
    // of the original constraints.
    RMatrix E = A;
    RVector eb = b;
    RMatrix comb = RMatrix::Identity(k, k);
    std::vector<Eigen::Index> basis;
    Eigen::Index row = 0;
    for (Eigen::Index col = 0; col < d && row < k; ++col) {
        Eigen::Index piv = row;
        while (piv < k && E(piv, col).is_zero()) ++piv;
        if (piv == k) continue;
        E.row(piv).swap(E.row(row));
        comb.row(piv).swap(comb.row(row));
        std::swap(eb(piv), eb(row));
        for (Eigen::Index i = 0; i < k; ++i) {
            if (i == row || E(i, col).is_zero()) continue;
            Rational f = E(i, col) / E(row, col);
            for (Eigen::Index j = col; j < d; ++j) E(i, j) -= f * E(row, j);
            for (Eigen::Index j = 0; j < k; ++j) comb(i, j) -= f * comb(row, j);
            eb(i) -= f * eb(row);
        }
        ++row;
    }
    for (Eigen::Index i = row; i < k; ++i) {
        if (eb(i).is_zero()) continue;
        std::vector<std::string> cert;
        for (Eigen::Index j = 0; j < k; ++j)
            if (!comb(i, j).is_zero()) cert.push_back(comb(i, j).str() + "*" + cs[std::size_t(j)].v.label);
        throw Error(ErrorCode::Infeasible, "constraints are inconsistent", cert);
    }
    // Greedy maximal independent subset of the original rows.
    std::vector<CoeffVector> picked;
    for (Eigen::Index i = 0; i < k; ++i) {
        picked.push_back(cs[std::size_t(i)].v);
        if (rank(picked) == long(picked.size()))
            basis.push_back(i);
        else
            picked.pop_back();
    }
    Eigen::Index n = Eigen::Index(basis.size());
    RMatrix AB(n, d);
    RVector bB(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        AB.row(i) = A.row(basis[std::size_t(i)]);
        bB(i) = b(basis[std::size_t(i)]);
    }
    // Solve (A_B A_Bᵀ) y = b_B by Gauss-Jordan; the Gram matrix is positive definite.
    RMatrix G = AB * AB.transpose();
    RVector y = bB;
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index piv = c;
        while (G(piv, c).is_zero()) ++piv;
        G.row(piv).swap(G.row(c));
        std::swap(y(piv), y(c));
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == c || G(i, c).is_zero()) continue;
            Rational f = G(i, c) / G(c, c);
            for (Eigen::Index j = c; j < n; ++j) G(i, j) -= f * G(c, j);
            y(i) -= f * y(c);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) y(i) /= G(i, i);
    RVector delta = AB.transpose() * y;
    for (Eigen::Index i = 0; i < k; ++i)
        if (dot_exact(cs[std::size_t(i)].v.c, delta) != cs[std::size_t(i)].target)
            throw Error(ErrorCode::Infeasible, "solution check failed for " + cs[std::size_t(i)].v.label);
    return delta;
}

std::string family_csv(const VectorFamily& f)
{
    std::ostringstream os;
    if (f.vectors.empty()) return "role,label\n";
    const CoeffVector& v0 = f.vectors.front();
    os << "role,label";
    for (int s = 1; s <= v0.r; ++s) os << ",e_" << s;
    for (int i = v0.extended ? 0 : 1; i <= (v0.extended ? v0.r : v0.r - 1); ++i) os << ",f_" << i;
    os << "\n";
    for (const auto& v : f.vectors) {
        os << role_name(v.role) << ",\"" << v.label << "\"";
        for (Eigen::Index i = 0; i < v.dim(); ++i) os << "," << v.c(i);
        os << "\n";
    }
    return os.str();
}

}  // namespace itm
