#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "itm/rational.hpp"

namespace itm {

enum class Sign { Minus = -1, Geometric = 0, Plus = 1 };

// One-sided point: x⁻ < x < x⁺ < y⁻ whenever x < y.
struct SignedPoint {
    Rational value;
    Sign sign = Sign::Geometric;

    static SignedPoint plus(Rational v) { return {std::move(v), Sign::Plus}; }
    static SignedPoint minus(Rational v) { return {std::move(v), Sign::Minus}; }
    static SignedPoint geometric(Rational v) { return {std::move(v), Sign::Geometric}; }

    bool is_signed() const { return sign != Sign::Geometric; }
    // "2/3+", "13/42-", "2/3".
    std::string str() const;
    static SignedPoint parse(std::string_view s);

    friend bool operator==(const SignedPoint&, const SignedPoint&) = default;
    friend std::strong_ordering operator<=>(const SignedPoint& a, const SignedPoint& b)
    {
        if (auto c = a.value <=> b.value; c != 0) return c;
        return static_cast<int>(a.sign) <=> static_cast<int>(b.sign);
    }
};

struct SignedPointHash {
    std::size_t operator()(const SignedPoint& p) const noexcept
    {
        return p.value.hash() * 3 + static_cast<std::size_t>(static_cast<int>(p.sign) + 1);
    }
};

// [left, right) with left < right.
struct HalfOpenInterval {
    Rational left;
    Rational right;

    HalfOpenInterval() = default;
    HalfOpenInterval(Rational l, Rational r);

    Rational length() const { return right - left; }
    bool contains(const SignedPoint& p) const;
    bool contains(const Rational& x) const { return left <= x && x < right; }
    bool contains(const HalfOpenInterval& o) const { return left <= o.left && o.right <= right; }
    std::string str() const { return "[" + left.str() + "," + right.str() + ")"; }

    friend bool operator==(const HalfOpenInterval&, const HalfOpenInterval&) = default;
};

// Canonical finite union of half-open intervals: sorted, disjoint, non-adjacent.
class IntervalSet {
public:
    IntervalSet() = default;
    IntervalSet(const HalfOpenInterval& iv) : parts_{iv} {}
    // Normalizes arbitrary (possibly overlapping, empty or unsorted) pieces.
    static IntervalSet from_pieces(std::vector<HalfOpenInterval> pieces);
    static IntervalSet unit() { return IntervalSet(HalfOpenInterval(Rational(0), Rational(1))); }

    const std::vector<HalfOpenInterval>& parts() const { return parts_; }
    bool empty() const { return parts_.empty(); }
    std::size_t size() const { return parts_.size(); }
    Rational length() const;
    std::string str() const;

    friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

private:
    std::vector<HalfOpenInterval> parts_;
};

IntervalSet unite(const IntervalSet& a, const IntervalSet& b);
IntervalSet intersect(const IntervalSet& a, const IntervalSet& b);
IntervalSet intersect(const IntervalSet& a, const HalfOpenInterval& b);
IntervalSet subtract(const IntervalSet& a, const IntervalSet& b);
bool member(const IntervalSet& s, const SignedPoint& p);
bool subset(const IntervalSet& a, const IntervalSet& b);
// Shifts every part by t; throws RangeViolation if an endpoint leaves [lo, hi].
IntervalSet translate(const IntervalSet& s, const Rational& t, const Rational& lo = Rational(0),
                      const Rational& hi = Rational(1));
// Index of the part containing p, or -1.
int find_part(const IntervalSet& s, const SignedPoint& p);

}  // namespace itm
