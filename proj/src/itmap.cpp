#include "itm/itmap.hpp"

#include <algorithm>

#include "itm/error.hpp"

namespace itm {

ITMap::ITMap(std::vector<Rational> beta, std::vector<Rational> gamma) : beta_(std::move(beta)), gamma_(std::move(gamma)) {}

ITMap ITMap::checked(std::vector<Rational> beta, std::vector<Rational> gamma)
{
    ITMap m(std::move(beta), std::move(gamma));
    auto rep = validate(m);
    if (!rep.ok()) throw Error(ErrorCode::InvalidMap, "map violates the ITM constraints", rep.violations);
    return m;
}

ITMap ITMap::from_params(int r, const std::vector<Rational>& params)
{
    if (int(params.size()) != 2 * r - 1) throw Error(ErrorCode::DimensionMismatch, "parameter vector has wrong length");
    std::vector<Rational> gamma(params.begin(), params.begin() + r);
    std::vector<Rational> beta;
    beta.reserve(r + 1);
    beta.emplace_back(0);
    for (int i = 0; i + 1 < r; ++i) beta.push_back(params[r + i]);
    beta.emplace_back(1);
    return ITMap(std::move(beta), std::move(gamma));
}

ValidationReport validate(const ITMap& m)
{
    ValidationReport rep;
    const auto& b = m.beta();
    const auto& g = m.gamma();
    int r = m.r();
    if (r < 1) {
        rep.violations.push_back("r must be at least 1");
        return rep;
    }
    if (int(b.size()) != r + 1) {
        rep.violations.push_back("beta must have r+1 entries (got " + std::to_string(b.size()) + ", r=" +
                                 std::to_string(r) + ")");
        return rep;
    }
    if (b.front() != Rational(0)) rep.violations.push_back("beta_0 must be 0 (got " + b.front().str() + ")");
    if (b.back() != Rational(1)) rep.violations.push_back("beta_r must be 1 (got " + b.back().str() + ")");
    for (int i = 1; i <= r; ++i)
        if (!(b[i - 1] < b[i]))
            rep.violations.push_back("beta_" + std::to_string(i - 1) + " < beta_" + std::to_string(i) + " fails (" +
                                     b[i - 1].str() + " >= " + b[i].str() + ")");
    for (int i = 1; i <= r; ++i) {
        if (g[i - 1] < -b[i - 1])
            rep.violations.push_back("gamma_" + std::to_string(i) + " >= -beta_" + std::to_string(i - 1) + " fails (" +
                                     g[i - 1].str() + " < " + (-b[i - 1]).str() + ")");
        if (g[i - 1] > Rational(1) - b[i])
            rep.violations.push_back("gamma_" + std::to_string(i) + " <= 1-beta_" + std::to_string(i) + " fails (" +
                                     g[i - 1].str() + " > " + (Rational(1) - b[i]).str() + ")");
    }
    return rep;
}

int ITMap::branch_of(const SignedPoint& p) const
{
    const Rational& x = p.value;
    int r = this->r();
    bool ok_range = p.sign == Sign::Minus ? (beta_[0] < x && x <= beta_[r]) : (beta_[0] <= x && x < beta_[r]);
    if (!ok_range) throw Error(ErrorCode::InvalidPoint, "point " + p.str() + " outside the domain");
    // First index i with x < β_i (plus/geometric) or x <= β_i (minus).
    auto it = p.sign == Sign::Minus ? std::lower_bound(beta_.begin() + 1, beta_.end(), x)
                                    : std::upper_bound(beta_.begin() + 1, beta_.end(), x);
    int s = int(it - beta_.begin());
    if (p.sign == Sign::Geometric && s >= 2 && beta_[s - 1] == x)
        throw Error(ErrorCode::GeometricDiscontinuity, "geometric point " + x.str() + " is a discontinuity",
                    {"pass " + x.str() + "+ or " + x.str() + "-"});
    return s;
}

mpz_class ITMap::grid_q() const
{
    mpz_class q = 1;
    for (const auto& g : gamma_) q = lcm_den(q, g);
    return q;
}

mpz_class ITMap::common_den() const
{
    mpz_class q = grid_q();
    for (const auto& b : beta_) q = lcm_den(q, b);
    return q;
}

std::vector<Rational> ITMap::params() const
{
    std::vector<Rational> p(gamma_);
    for (int i = 1; i < r(); ++i) p.push_back(beta_[i]);
    return p;
}

std::vector<SignedPoint> ITMap::critical_set() const
{
    std::vector<SignedPoint> c;
    for (int i = 1; i < r(); ++i) {
        c.push_back(SignedPoint::minus(beta_[i]));
        c.push_back(SignedPoint::plus(beta_[i]));
    }
    return c;
}

int ITMap::critical_index(const SignedPoint& p) const
{
    if (!p.is_signed() || r() < 2) return 0;
    auto it = std::lower_bound(beta_.begin() + 1, beta_.end() - 1, p.value);
    if (it != beta_.end() - 1 && *it == p.value) return int(it - beta_.begin());
    return 0;
}

bool ITMap::is_discontinuity(const Rational& x) const
{
    if (r() < 2) return false;
    return std::binary_search(beta_.begin() + 1, beta_.end() - 1, x);
}

std::string ITMap::str() const
{
    std::string s = "beta(";
    for (std::size_t i = 0; i < beta_.size(); ++i) s += (i ? "," : "") + beta_[i].str();
    s += ") gamma(";
    for (std::size_t i = 0; i < gamma_.size(); ++i) s += (i ? "," : "") + gamma_[i].str();
    return s + ")";
}

SignedPoint apply(const ITMap& m, const SignedPoint& p)
{
    int s = m.branch_of(p);
    return {p.value + m.gamma(s), p.sign};
}

SignedPoint iterate(const ITMap& m, SignedPoint p, long n)
{
    for (long t = 0; t < n; ++t) p = apply(m, p);
    return p;
}

std::vector<SignedPoint> orbit(const ITMap& m, const SignedPoint& p, long n)
{
    std::vector<SignedPoint> out;
    if (n <= 0) return out;
    out.reserve(std::size_t(n));
    out.push_back(p);
    for (long t = 1; t < n; ++t) out.push_back(apply(m, out.back()));
    return out;
}

std::vector<int> itinerary(const ITMap& m, const SignedPoint& p, long n)
{
    std::vector<int> out;
    SignedPoint q = p;
    for (long t = 0; t < n; ++t) {
        int s = m.branch_of(q);
        out.push_back(s);
        q = {q.value + m.gamma(s), q.sign};
    }
    return out;
}

std::vector<long> entry_counts(const ITMap& m, const SignedPoint& p, long n)
{
    std::vector<long> k(std::size_t(m.r()), 0);
    for (int s : itinerary(m, p, n)) ++k[std::size_t(s - 1)];
    return k;
}

std::vector<std::pair<int, HalfOpenInterval>> split_by_branches(const ITMap& m, const HalfOpenInterval& iv)
{
    std::vector<std::pair<int, HalfOpenInterval>> out;
    const auto& b = m.beta();
    auto it = std::upper_bound(b.begin() + 1, b.end(), iv.left);
    int s = int(it - b.begin());
    for (; s <= m.r(); ++s) {
        const Rational& lo = max(iv.left, b[s - 1]);
        const Rational& hi = min(iv.right, b[s]);
        if (lo < hi) out.emplace_back(s, HalfOpenInterval(lo, hi));
        if (iv.right <= b[s]) break;
    }
    return out;
}

IntervalSet image(const ITMap& m, const IntervalSet& s)
{
    std::vector<HalfOpenInterval> pieces;
    for (const auto& part : s.parts())
        for (auto& [br, piece] : split_by_branches(m, part))
            pieces.emplace_back(piece.left + m.gamma(br), piece.right + m.gamma(br));
    return IntervalSet::from_pieces(std::move(pieces));
}

ExtendedITMap::ExtendedITMap(std::vector<Rational> beta, std::vector<Rational> gamma)
    : beta_(std::move(beta)), gamma_(std::move(gamma))
{
}

ExtendedITMap ExtendedITMap::lift(const ITMap& m) { return ExtendedITMap(m.beta(), m.gamma()); }

ExtendedITMap ExtendedITMap::from_params(int r, const std::vector<Rational>& params)
{
    if (int(params.size()) != 2 * r + 1) throw Error(ErrorCode::DimensionMismatch, "parameter vector has wrong length");
    std::vector<Rational> gamma(params.begin(), params.begin() + r);
    std::vector<Rational> beta(params.begin() + r, params.end());
    return ExtendedITMap(std::move(beta), std::move(gamma));
}

std::vector<Rational> ExtendedITMap::params() const
{
    std::vector<Rational> p(gamma_);
    p.insert(p.end(), beta_.begin(), beta_.end());
    return p;
}

ITMap ExtendedITMap::rescale() const
{
    Rational len = beta_.back() - beta_.front();
    std::vector<Rational> b, g;
    for (const auto& x : beta_) b.push_back((x - beta_.front()) / len);
    for (const auto& x : gamma_) g.push_back(x / len);
    return ITMap(std::move(b), std::move(g));
}

ValidationReport validate(const ExtendedITMap& m)
{
    ValidationReport rep;
    const auto& b = m.beta();
    const auto& g = m.gamma();
    int r = m.r();
    if (r < 1 || int(b.size()) != r + 1) {
        rep.violations.push_back("beta must have r+1 entries with r >= 1");
        return rep;
    }
    for (int i = 1; i <= r; ++i)
        if (!(b[i - 1] < b[i]))
            rep.violations.push_back("beta_" + std::to_string(i - 1) + " < beta_" + std::to_string(i) + " fails");
    for (int s = 1; s <= r; ++s) {
        if (b[s - 1] + g[s - 1] < b[0])
            rep.violations.push_back("beta_0+ <= beta_" + std::to_string(s - 1) + "+ + gamma_" + std::to_string(s) +
                                     " fails");
        if (b[s] + g[s - 1] > b[r])
            rep.violations.push_back("beta_r- >= beta_" + std::to_string(s) + "- + gamma_" + std::to_string(s) +
                                     " fails");
    }
    return rep;
}

}  // namespace itm
