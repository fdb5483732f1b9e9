#pragma once

#include <gmpxx.h>

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

namespace itm {

// Exact rational number, always reduced with positive denominator.
// Values whose numerator and denominator fit in 62 bits live inline; anything
// larger is held by GMP. The split is canonical: big_ is set iff the value
// does not fit inline, so equality and hashing never need to mix forms.
class Rational {
public:
    Rational() = default;

    template <std::integral I>
    Rational(I n) { set_integer(static_cast<long long>(n)); }

    Rational(long long num, long long den);
    explicit Rational(const mpq_class& q) { assign(q); }
    Rational(const mpz_class& num, const mpz_class& den);

    Rational(const Rational& o) : n_(o.n_), d_(o.d_), big_(o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr) {}
    Rational(Rational&&) noexcept = default;
    Rational& operator=(const Rational& o)
    {
        if (this != &o) {
            n_ = o.n_;
            d_ = o.d_;
            big_ = o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr;
        }
        return *this;
    }
    Rational& operator=(Rational&&) noexcept = default;

    // Accepts "p", "-p", "p/q". Decimal notation is rejected.
    static Rational parse(std::string_view s);

    std::string str() const;
    mpq_class to_mpq() const;
    mpz_class num() const;
    mpz_class den() const;
    bool is_integer() const { return big_ ? big_->get_den() == 1 : d_ == 1; }
    bool is_inline() const { return !big_; }
    int sign() const { return big_ ? sgn(*big_) : (n_ > 0) - (n_ < 0); }
    bool is_zero() const { return !big_ && n_ == 0; }
    Rational abs() const { return sign() < 0 ? -*this : *this; }
    mpz_class floor() const;
    double approx() const;  // display only
    std::size_t hash() const;

    Rational operator-() const;
    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational& operator+=(const Rational& b) { return *this = *this + b; }
    Rational& operator-=(const Rational& b) { return *this = *this - b; }
    Rational& operator*=(const Rational& b) { return *this = *this * b; }
    Rational& operator/=(const Rational& b) { return *this = *this / b; }

    friend bool operator==(const Rational& a, const Rational& b);
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    void set_integer(long long n);
    void assign(const mpq_class& q);
    void set_inline(std::int64_t n, std::int64_t d)
    {
        n_ = n;
        d_ = d;
        big_.reset();
    }

    std::int64_t n_ = 0;
    std::int64_t d_ = 1;
    std::unique_ptr<mpq_class> big_;
};

Rational abs(const Rational& x);
Rational min(const Rational& a, const Rational& b);
Rational max(const Rational& a, const Rational& b);
// Least common multiple of the denominators.
mpz_class lcm_den(const mpz_class& acc, const Rational& x);

std::ostream& operator<<(std::ostream& os, const Rational& x);

}  // namespace itm

template <>
struct std::hash<itm::Rational> {
    std::size_t operator()(const itm::Rational& x) const noexcept { return x.hash(); }
};
