#pragma once

#include <vector>

#include "itm/attractor.hpp"

namespace itm {

struct ChainHit {
    SignedPoint disc;  // β^{J,±}(j,k)
    long time = 0;     // landing time q
};

struct ReturnBranch {
    HalfOpenInterval domain;
    long return_time = 0;
    Rational translation;
    HalfOpenInterval image;
    std::vector<long> counts;  // entry counts over [0, return_time)
};

// Interior landing point a_j: first meets a critical point at time l_j < return time.
struct LandingPoint {
    Rational a;
    long l = 0;
    std::vector<ChainHit> plus_chain;   // hits of a⁺ before the return of the branch right of a
    std::vector<ChainHit> minus_chain;  // hits of a⁻ before the return of the branch left of a
    SignedPoint plus_return;            // R_J(a⁺)
    SignedPoint minus_return;           // R_J(a⁻)
};

// Boundary point x⁺ or y⁻ of J with its critical hits before return.
struct BoundaryOrbit {
    SignedPoint point;
    std::vector<ChainHit> chain;
    long return_time = 0;
    SignedPoint returned;
};

struct ReturnMapData {
    HalfOpenInterval J;
    std::vector<ReturnBranch> branches;  // J_1..J_N in domain order
    std::vector<LandingPoint> landings;  // interior landing points in increasing order
    // For each interior branch boundary (N-1 of them), the index into landings or -1.
    std::vector<int> boundary_landing;
    BoundaryOrbit left;   // a_0⁺ = x⁺
    BoundaryOrbit right;  // a_N⁻ = y⁻
    std::vector<int> sigma;  // sigma[i-1] = rank of the image of J_i (1-based values)
    std::vector<int> tau;    // inverse of sigma

    int N() const { return int(branches.size()); }
};

struct RotationData {
    bool is_rotation = false;
    Rational rotation_number;
};

// First-return map of m to J ⊆ X; throws NotInvariant or Diverged.
ReturnMapData return_map(const ITMap& m, const IntervalSet& X, const HalfOpenInterval& J);
RotationData rotation_data(const ReturnMapData& rmd);
bool dynamically_trivial(const ReturnMapData& rmd);
bool dynamically_trivial(const ITMap& m, const IntervalSet& X, const HalfOpenInterval& J);

// Critical hits of the signed orbit of p at times [0, n).
std::vector<ChainHit> critical_hits(const ITMap& m, const SignedPoint& p, long n);

}  // namespace itm
