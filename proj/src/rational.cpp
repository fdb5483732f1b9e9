#include "itm/rational.hpp"

#include <cctype>
#include <ostream>

#include "itm/error.hpp"

namespace itm {

namespace {

using i128 = __int128;
using u64 = std::uint64_t;

constexpr std::int64_t kLimit = std::int64_t(1) << 62;

bool fits(i128 v) { return v > -i128(kLimit) && v < i128(kLimit); }

u64 ugcd(u64 a, u64 b)
{
    if (a == 0) return b;
    if (b == 0) return a;
    int shift = __builtin_ctzll(a | b);
    a >>= __builtin_ctzll(a);
    do {
        b >>= __builtin_ctzll(b);
        if (a > b) std::swap(a, b);
        b -= a;
    } while (b != 0);
    return a << shift;
}

u64 uabs(std::int64_t v) { return v < 0 ? u64(0) - u64(v) : u64(v); }

mpz_class mpz_from_i64(std::int64_t v)
{
    mpz_class z;
    mpz_set_si(z.get_mpz_t(), v);
    return z;
}

bool mpz_to_i64(const mpz_class& z, std::int64_t& out)
{
    if (!mpz_fits_slong_p(z.get_mpz_t())) return false;
    long v = mpz_get_si(z.get_mpz_t());
    if (v <= -kLimit || v >= kLimit) return false;
    out = v;
    return true;
}

}  // namespace

Rational::Rational(long long num, long long den)
{
    if (den == 0) throw Error(ErrorCode::Parse, "zero denominator");
    mpq_class q(mpz_from_i64(num), mpz_from_i64(den));
    q.canonicalize();
    assign(q);
}

Rational::Rational(const mpz_class& num, const mpz_class& den)
{
    if (den == 0) throw Error(ErrorCode::Parse, "zero denominator");
    mpq_class q(num, den);
    q.canonicalize();
    assign(q);
}

void Rational::set_integer(long long n)
{
    if (n > -kLimit && n < kLimit) {
        set_inline(n, 1);
    } else {
        assign(mpq_class(mpz_from_i64(n)));
    }
}

void Rational::assign(const mpq_class& q)
{
    std::int64_t n, d;
    if (mpz_to_i64(q.get_num(), n) && mpz_to_i64(q.get_den(), d)) {
        set_inline(n, d);
    } else {
        n_ = 0;
        d_ = 1;
        big_ = std::make_unique<mpq_class>(q);
    }
}

mpq_class Rational::to_mpq() const
{
    if (big_) return *big_;
    mpq_class q(mpz_from_i64(n_), mpz_from_i64(d_));
    return q;
}

mpz_class Rational::num() const { return big_ ? mpz_class(big_->get_num()) : mpz_from_i64(n_); }
mpz_class Rational::den() const { return big_ ? mpz_class(big_->get_den()) : mpz_from_i64(d_); }

Rational Rational::parse(std::string_view s)
{
    auto bad = [&]() { return Error(ErrorCode::Parse, "malformed rational '" + std::string(s) + "'"); };
    if (s.empty()) throw bad();
    auto slash = s.find('/');
    auto check_int = [&](std::string_view t, bool allow_sign) {
        std::size_t i = 0;
        if (allow_sign && !t.empty() && (t[0] == '-' || t[0] == '+')) i = 1;
        if (i >= t.size()) throw bad();
        for (; i < t.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(t[i]))) throw bad();
    };
    std::string_view ns = s.substr(0, slash);
    check_int(ns, true);
    std::string nstr(ns[0] == '+' ? ns.substr(1) : ns);
    mpz_class num(nstr, 10);
    mpz_class den = 1;
    if (slash != std::string_view::npos) {
        std::string_view ds = s.substr(slash + 1);
        check_int(ds, false);
        den = mpz_class(std::string(ds), 10);
        if (den == 0) throw bad();
    }
    return Rational(num, den);
}

std::string Rational::str() const
{
    if (big_) return big_->get_str();
    if (d_ == 1) return std::to_string(n_);
    return std::to_string(n_) + "/" + std::to_string(d_);
}

mpz_class Rational::floor() const
{
    mpz_class q;
    mpz_class n = num(), d = den();
    mpz_fdiv_q(q.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    return q;
}

double Rational::approx() const { return big_ ? big_->get_d() : double(n_) / double(d_); }

std::size_t Rational::hash() const
{
    if (big_) return std::hash<std::string>{}(big_->get_str());
    u64 h = u64(n_) * 0x9E3779B97F4A7C15ull;
    h ^= u64(d_) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
    return std::size_t(h);
}

Rational Rational::operator-() const
{
    if (!big_) {
        Rational r;
        r.set_inline(-n_, d_);
        return r;
    }
    return Rational(mpq_class(-*big_));
}

Rational operator+(const Rational& a, const Rational& b)
{
    if (!a.big_ && !b.big_) {
        Rational r;
        if (a.d_ == b.d_) {
            i128 n = i128(a.n_) + b.n_;
            u64 g = ugcd(n < 0 ? u64(-n) : u64(n), u64(a.d_));
            if (g == 0) g = 1;
            i128 rn = n / i128(g), rd = i128(a.d_) / i128(g);
            if (fits(rn) && fits(rd)) {
                r.set_inline(std::int64_t(rn), std::int64_t(rd));
                return r;
            }
        } else {
            u64 g = ugcd(u64(a.d_), u64(b.d_));
            if (g == 1) {
                i128 n = i128(a.n_) * b.d_ + i128(b.n_) * a.d_;
                i128 d = i128(a.d_) * b.d_;
                if (fits(n) && fits(d)) {
                    r.set_inline(std::int64_t(n), std::int64_t(d));
                    return r;
                }
            } else {
                std::int64_t adg = a.d_ / std::int64_t(g), bdg = b.d_ / std::int64_t(g);
                i128 t = i128(a.n_) * bdg + i128(b.n_) * adg;
                i128 tm = t % i128(g);
                if (tm < 0) tm = -tm;
                u64 g2 = ugcd(g, u64(tm));
                i128 n = t / i128(g2);
                i128 d = i128(adg) * (b.d_ / std::int64_t(g2));
                if (fits(n) && fits(d)) {
                    r.set_inline(std::int64_t(n), std::int64_t(d));
                    return r;
                }
            }
        }
    }
    return Rational(mpq_class(a.to_mpq() + b.to_mpq()));
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b)
{
    if (!a.big_ && !b.big_) {
        if (a.n_ == 0 || b.n_ == 0) return Rational(0);
        u64 g1 = ugcd(uabs(a.n_), u64(b.d_));
        u64 g2 = ugcd(uabs(b.n_), u64(a.d_));
        i128 n = i128(a.n_ / std::int64_t(g1)) * (b.n_ / std::int64_t(g2));
        i128 d = i128(a.d_ / std::int64_t(g2)) * (b.d_ / std::int64_t(g1));
        if (fits(n) && fits(d)) {
            Rational r;
            r.set_inline(std::int64_t(n), std::int64_t(d));
            return r;
        }
    }
    return Rational(mpq_class(a.to_mpq() * b.to_mpq()));
}

Rational operator/(const Rational& a, const Rational& b)
{
    if (b.is_zero()) throw Error(ErrorCode::RangeViolation, "division by zero");
    if (!b.big_) {
        Rational inv;
        if (b.n_ < 0)
            inv.set_inline(-b.d_, -b.n_);
        else
            inv.set_inline(b.d_, b.n_);
        return a * inv;
    }
    return Rational(mpq_class(a.to_mpq() / b.to_mpq()));
}

bool operator==(const Rational& a, const Rational& b)
{
    if (!a.big_ && !b.big_) return a.n_ == b.n_ && a.d_ == b.d_;
    if (a.big_ && b.big_) return *a.big_ == *b.big_;
    return false;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b)
{
    if (!a.big_ && !b.big_) {
        if (a.d_ == b.d_) return a.n_ <=> b.n_;
        i128 l = i128(a.n_) * b.d_, r = i128(b.n_) * a.d_;
        return l < r ? std::strong_ordering::less : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
    }
    int c = cmp(a.to_mpq(), b.to_mpq());
    return c < 0 ? std::strong_ordering::less : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

Rational abs(const Rational& x) { return x.abs(); }
Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

mpz_class lcm_den(const mpz_class& acc, const Rational& x)
{
    mpz_class out;
    mpz_class d = x.den();
    mpz_lcm(out.get_mpz_t(), acc.get_mpz_t(), d.get_mpz_t());
    return out;
}

std::ostream& operator<<(std::ostream& os, const Rational& x) { return os << x.str(); }

const char* error_code_name(ErrorCode c)
{
    switch (c) {
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::InvalidMap: return "InvalidMap";
    case ErrorCode::InvalidPoint: return "InvalidPoint";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::GeometricDiscontinuity: return "GeometricDiscontinuity";
    case ErrorCode::WitnessNotFound: return "WitnessNotFound";
    case ErrorCode::NotPeriodic: return "NotPeriodic";
    case ErrorCode::NotEventuallyPeriodic: return "NotEventuallyPeriodic";
    case ErrorCode::NotInvariant: return "NotInvariant";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotInC1: return "NotInC1";
    case ErrorCode::OrbitsOverlap: return "OrbitsOverlap";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::OutOfTriangle: return "OutOfTriangle";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::CornerHit: return "CornerHit";
    }
    return "Unknown";
}

ErrorClass error_class(ErrorCode c)
{
    switch (c) {
    case ErrorCode::Infeasible:
    case ErrorCode::OrbitsOverlap:
        return ErrorClass::Infeasible;
    case ErrorCode::BudgetExhausted:
    case ErrorCode::Diverged:
        return ErrorClass::Budget;
    default:
        return ErrorClass::Validation;
    }
}

}  // namespace itm
