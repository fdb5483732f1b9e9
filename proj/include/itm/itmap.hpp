#pragma once

#include <string>
#include <vector>

#include "itm/interval.hpp"

namespace itm {

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// T(x) = x + γ_s on I_s = [β_{s-1}, β_s), s = 1..r, with β_0 = 0 and β_r = 1.
// Construction does not validate; use validate() or ITMap::checked().
class ITMap {
public:
    ITMap() = default;
    ITMap(std::vector<Rational> beta, std::vector<Rational> gamma);
    // Throws InvalidMap listing every violated constraint.
    static ITMap checked(std::vector<Rational> beta, std::vector<Rational> gamma);
    // (γ_1..γ_r, β_1..β_{r-1}) layout.
    static ITMap from_params(int r, const std::vector<Rational>& params);

    int r() const { return int(gamma_.size()); }
    const std::vector<Rational>& beta() const { return beta_; }
    const std::vector<Rational>& gamma() const { return gamma_; }
    const Rational& beta(int i) const { return beta_[i]; }
    // s is 1-based.
    const Rational& gamma(int s) const { return gamma_[s - 1]; }
    HalfOpenInterval branch(int s) const { return {beta_[s - 1], beta_[s]}; }

    // 1-based branch containing p in the signed sense.
    int branch_of(const SignedPoint& p) const;
    // lcm of the denominators of γ.
    mpz_class grid_q() const;
    // lcm of all parameter denominators.
    mpz_class common_den() const;
    std::vector<Rational> params() const;
    // β_1^±..β_{r-1}^± as (index, sign) pairs, minus before plus.
    std::vector<SignedPoint> critical_set() const;
    // 1..r-1 if p is a signed discontinuity β_i^±, else 0.
    int critical_index(const SignedPoint& p) const;
    bool is_discontinuity(const Rational& x) const;

    std::string str() const;
    friend bool operator==(const ITMap&, const ITMap&) = default;

private:
    std::vector<Rational> beta_;
    std::vector<Rational> gamma_;
};

ValidationReport validate(const ITMap& m);

SignedPoint apply(const ITMap& m, const SignedPoint& p);
// p, T(p), ..., T^{n-1}(p).
std::vector<SignedPoint> orbit(const ITMap& m, const SignedPoint& p, long n);
std::vector<int> itinerary(const ITMap& m, const SignedPoint& p, long n);
std::vector<long> entry_counts(const ITMap& m, const SignedPoint& p, long n);
// T^n(p), without materialising the orbit.
SignedPoint iterate(const ITMap& m, SignedPoint p, long n);
IntervalSet image(const ITMap& m, const IntervalSet& s);
// S ∩ I_s for every branch, preimage pieces in domain order.
std::vector<std::pair<int, HalfOpenInterval>> split_by_branches(const ITMap& m, const HalfOpenInterval& iv);

// β_0 and β_r are free parameters; domain [β_0, β_r).
class ExtendedITMap {
public:
    ExtendedITMap() = default;
    ExtendedITMap(std::vector<Rational> beta, std::vector<Rational> gamma);
    static ExtendedITMap lift(const ITMap& m);
    // (γ_1..γ_r, β_0..β_r) layout.
    static ExtendedITMap from_params(int r, const std::vector<Rational>& params);

    int r() const { return int(gamma_.size()); }
    const std::vector<Rational>& beta() const { return beta_; }
    const std::vector<Rational>& gamma() const { return gamma_; }
    std::vector<Rational> params() const;
    // Affine conjugation onto [0,1).
    ITMap rescale() const;

    friend bool operator==(const ExtendedITMap&, const ExtendedITMap&) = default;

private:
    std::vector<Rational> beta_;
    std::vector<Rational> gamma_;
};

ValidationReport validate(const ExtendedITMap& m);

}  // namespace itm
