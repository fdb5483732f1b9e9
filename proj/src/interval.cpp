#include "itm/interval.hpp"

#include <algorithm>

#include "itm/error.hpp"

namespace itm {

std::string SignedPoint::str() const
{
    switch (sign) {
    case Sign::Plus: return value.str() + "+";
    case Sign::Minus: return value.str() + "-";
    default: return value.str();
    }
}

SignedPoint SignedPoint::parse(std::string_view s)
{
    if (s.empty()) throw Error(ErrorCode::Parse, "empty signed point");
    char last = s.back();
    if (last == '+') return plus(Rational::parse(s.substr(0, s.size() - 1)));
    if (last == '-') return minus(Rational::parse(s.substr(0, s.size() - 1)));
    return geometric(Rational::parse(s));
}

HalfOpenInterval::HalfOpenInterval(Rational l, Rational r) : left(std::move(l)), right(std::move(r))
{
    if (!(left < right)) throw Error(ErrorCode::RangeViolation, "empty interval " + left.str() + "," + right.str());
}

bool HalfOpenInterval::contains(const SignedPoint& p) const
{
    int cl = (p.value <=> left) < 0 ? -1 : ((p.value <=> left) > 0 ? 1 : 0);
    bool after_left = cl > 0 || (cl == 0 && p.sign != Sign::Minus);
    if (!after_left) return false;
    auto cr = p.value <=> right;
    return cr < 0 || (cr == 0 && p.sign == Sign::Minus);
}

IntervalSet IntervalSet::from_pieces(std::vector<HalfOpenInterval> pieces)
{
    std::sort(pieces.begin(), pieces.end(),
              [](const HalfOpenInterval& a, const HalfOpenInterval& b) { return a.left < b.left; });
    IntervalSet out;
    for (auto& p : pieces) {
        if (!out.parts_.empty() && p.left <= out.parts_.back().right) {
            if (out.parts_.back().right < p.right) out.parts_.back().right = std::move(p.right);
        } else {
            out.parts_.push_back(std::move(p));
        }
    }
    return out;
}

Rational IntervalSet::length() const
{
    Rational s(0);
    for (const auto& p : parts_) s += p.length();
    return s;
}

std::string IntervalSet::str() const
{
    if (parts_.empty()) return "{}";
    std::string s;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        if (i) s += " u ";
        s += parts_[i].str();
    }
    return s;
}

IntervalSet unite(const IntervalSet& a, const IntervalSet& b)
{
    std::vector<HalfOpenInterval> v(a.parts());
    v.insert(v.end(), b.parts().begin(), b.parts().end());
    return IntervalSet::from_pieces(std::move(v));
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b)
{
    std::vector<HalfOpenInterval> out;
    std::size_t i = 0, j = 0;
    const auto& pa = a.parts();
    const auto& pb = b.parts();
    while (i < pa.size() && j < pb.size()) {
        const Rational& l = max(pa[i].left, pb[j].left);
        const Rational& r = min(pa[i].right, pb[j].right);
        if (l < r) out.emplace_back(l, r);
        if (pa[i].right < pb[j].right)
            ++i;
        else
            ++j;
    }
    return IntervalSet::from_pieces(std::move(out));
}

IntervalSet intersect(const IntervalSet& a, const HalfOpenInterval& b) { return intersect(a, IntervalSet(b)); }

IntervalSet subtract(const IntervalSet& a, const IntervalSet& b)
{
    std::vector<HalfOpenInterval> out;
    const auto& pb = b.parts();
    std::size_t j = 0;
    for (const auto& p : a.parts()) {
        Rational cur = p.left;
        while (j < pb.size() && pb[j].right <= cur) ++j;
        std::size_t k = j;
        while (k < pb.size() && pb[k].left < p.right) {
            if (cur < pb[k].left) out.emplace_back(cur, pb[k].left);
            if (cur < pb[k].right) cur = pb[k].right;
            if (pb[k].right > p.right) break;
            ++k;
        }
        if (cur < p.right) out.emplace_back(cur, p.right);
    }
    return IntervalSet::from_pieces(std::move(out));
}

int find_part(const IntervalSet& s, const SignedPoint& p)
{
    const auto& parts = s.parts();
    std::size_t lo = 0, hi = parts.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        auto c = p.value <=> parts[mid].right;
        if (c > 0 || (c == 0 && p.sign != Sign::Minus))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < parts.size() && parts[lo].contains(p)) return int(lo);
    return -1;
}

bool member(const IntervalSet& s, const SignedPoint& p) { return find_part(s, p) >= 0; }

bool subset(const IntervalSet& a, const IntervalSet& b) { return subtract(a, b).empty(); }

IntervalSet translate(const IntervalSet& s, const Rational& t, const Rational& lo, const Rational& hi)
{
    std::vector<HalfOpenInterval> out;
    out.reserve(s.size());
    for (const auto& p : s.parts()) {
        Rational l = p.left + t, r = p.right + t;
        if (l < lo || r > hi)
            throw Error(ErrorCode::RangeViolation, "translate leaves [" + lo.str() + "," + hi.str() + "]",
                        {p.str() + " + " + t.str()});
        out.emplace_back(std::move(l), std::move(r));
    }
    return IntervalSet::from_pieces(std::move(out));
}

}  // namespace itm
