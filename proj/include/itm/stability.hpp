#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "itm/return_map.hpp"

namespace itm {

// Signed discontinuities met by the orbit of beta at times k >= 1, until the orbit cycles.
std::vector<ChainHit> later_critical_hits(const ITMap& m, const SignedPoint& beta);

// For β_i⁺: every β_j⁻ (j != i) landing on β_i⁻ at some k >= 1; mirrored for β_i⁻.
std::vector<SignedPoint> ghost_preimages(const ITMap& m, const SignedPoint& beta);

struct GhostNode {
    SignedPoint disc;
    int level = 0;
    int parent = -1;  // index into nodes; -1 for the root
};

struct GhostTree {
    SignedPoint root;
    std::vector<GhostNode> nodes;
    bool contains_root_again = false;
    bool truncated = false;  // node cap reached
    int depth() const;
};

// Breadth-first; a path stops at a label already on it. The root reappearing is flagged.
GhostTree ghost_tree(const ITMap& m, const SignedPoint& beta, std::size_t max_nodes = 4096);

struct Verdict {
    bool ok = true;
    std::vector<std::string> witness;
};

struct AccReport {
    Verdict a1, a2, a3;
};

AccReport check_acc(const ITMap& m, const IntervalSet& X);
AccReport check_acc(const ITMap& m, const IntervalSet& X, const std::vector<ReturnMapData>& rmds);
Verdict check_matching(const ITMap& m, const IntervalSet& X);
Verdict check_matching(const ITMap& m, const std::vector<ReturnMapData>& rmds);

// R_J applied once to a signed point of J.
SignedPoint apply_return(const ITMap& m, const ReturnMapData& rmd, const SignedPoint& p);

struct StabilityReport {
    AttractorResult finite_type;
    std::vector<ReturnMapData> return_maps;
    Verdict a1, a2, a3, matching;
    bool stable = false;
    std::string note;  // set when the verdict short-circuits
};

// stable = Finite ∧ A1 ∧ A2 ∧ A3 ∧ Matching. budget < 0 selects default_budget.
StabilityReport is_stable(const ITMap& m, long budget = -1);

// Largest 2^-k (k <= max_halvings) such that every discontinuity orbit keeps a margin of
// (‖v(β,t)‖₁ + 1)·δ₀ to the other discontinuities up to its landing or cycle closure.
// Returns 0 if none qualifies.
Rational certify_delta(const ITMap& m, int max_halvings = 40);

struct HausdorffSample {
    std::vector<Rational> delta;
    AttractorStatus status = AttractorStatus::Undetermined;
    std::size_t components = 0;
    Rational max_displacement;  // over matched component endpoints
};

struct HausdorffResult {
    Rational delta0;
    Rational bound;  // 2·(2r)·δ₀
    std::size_t base_components = 0;
    std::vector<HausdorffSample> samples;
    bool ok = false;
};

// Random rational perturbations with |δ_i| <= δ₀; invalid maps are redrawn.
HausdorffResult hausdorff_sample(const ITMap& m, int samples, std::uint64_t seed);

}  // namespace itm
