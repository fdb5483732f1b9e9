#pragma once

#include <optional>
#include <string>
#include <vector>

#include "itm/stability.hpp"
#include "itm/vectors.hpp"

namespace itm {

// Partition of the signed discontinuities in X: β and β' share a cycle iff each lies in
// the orbit of the other.
struct CycleDecomposition {
    std::vector<std::vector<SignedPoint>> cycles;
};

CycleDecomposition critical_cycles(const ITMap& m, const IntervalSet& X);

struct UnstableSummary {
    long U = 0;
    std::vector<std::size_t> cycle_sizes;
    std::vector<SignedPoint> boundary;  // signed discontinuities in ∂X (the side lying in X)
    IntervalSet X;
};

// U = Σ(|C|-1) + |∂X ∩ 𝒞|. Throws BudgetExhausted if the attractor is undetermined.
UnstableSummary unstable_number(const ITMap& m);
UnstableSummary unstable_number(const ITMap& m, const IntervalSet& X);

struct CorrespondenceVerdict {
    bool ok = true;
    std::vector<SignedPoint> failing;  // β ∈ X whose partner never enters P(β)
    std::optional<SignedPoint> first_failing() const
    {
        return failing.empty() ? std::nullopt : std::optional<SignedPoint>(failing.front());
    }
};

CorrespondenceVerdict check_correspondence(const ITMap& m);
CorrespondenceVerdict check_correspondence(const ITMap& m, const IntervalSet& X);

enum class StepKind { Correspondence, CaseN0gt3, CaseN0eq3, CaseN0eq2, CaseN0eq1, BoundaryRemoval, A3Fix };

const char* step_kind_name(StepKind k);
StepKind parse_step_kind(const std::string& s);

struct StabilizationStep {
    StepKind kind = StepKind::Correspondence;
    std::string target;   // discontinuity or component acted on
    std::string variant;  // "template" or the alternative pattern that verified
    std::vector<Rational> delta;  // parameter change in (γ, β) layout of the step's input map
    Rational eps, eps2;
    long a = 0, b = 0;  // occupation counts (Cases N0 >= 3)
    long U_before = 0, U_after = 0;
    std::vector<std::string> constraints;  // "label=target" with targets in units of ε
    ITMap result;
};

struct StabilizationTrace {
    ITMap initial;
    std::vector<StabilizationStep> steps;
    bool success = false;
    std::string message;
};

enum class FamilyConstraint { None, BruinTroubetzkoy };

struct StabilizeOptions {
    FamilyConstraint family = FamilyConstraint::None;
    int max_steps = 48;
    int max_halvings = 8;
};

// Lemma step: one failing discontinuity moved off its periodic cycle. Identity step with
// δ = 0 when correspondence already holds.
StabilizationStep perturb_to_correspondence(const ITMap& m, const Rational& eps_max,
                                            const StabilizeOptions& opt = {});
// Strictly decreases U; requires U > 0 and correspondence.
StabilizationStep reduce_unstable(const ITMap& m, const Rational& eps_max, const StabilizeOptions& opt = {});
// Pushes every connection outside X off its landing; requires U = 0 and correspondence.
StabilizationStep fix_a3(const ITMap& m, const Rational& eps_max, const StabilizeOptions& opt = {});

struct StabilizationResult {
    ITMap map;
    StabilizationTrace trace;
    Rational displacement;  // Σ ‖δ_step‖∞
};

// Throws Error (Infeasible or BudgetExhausted) whose details list the steps taken and the
// reason for stopping.
StabilizationResult stabilize(const ITMap& m, const Rational& eps_total, const StabilizeOptions& opt = {});
// Re-applies the recorded deltas; throws InvalidMap if a step does not reproduce its result.
ITMap replay(const StabilizationTrace& trace);

}  // namespace itm
