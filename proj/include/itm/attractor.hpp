#pragma once

#include <optional>
#include <vector>

#include "itm/itmap.hpp"

namespace itm {

enum class AttractorStatus { Finite, Undetermined };

struct AttractorResult {
    AttractorStatus status = AttractorStatus::Undetermined;
    long n_stable = -1;  // Finite only
    IntervalSet X;       // last computed X_n
    long budget_used = 0;
    bool finite() const { return status == AttractorStatus::Finite; }
};

// 4·Q·r, saturated.
long default_budget(const ITMap& m);

// X_0 = [0,1), X_{n+1} = T(X_n); at most `budget` images are computed.
AttractorResult attractor(const ITMap& m, long budget);
AttractorResult attractor(const ITMap& m);

std::vector<HalfOpenInterval> components(const IntervalSet& X);

struct Landing {
    SignedPoint disc;  // signed discontinuity
    long k = 0;        // iterate
};

// component = [T^{left.k}(left.disc), T^{right.k}(right.disc)).
struct ComponentWitness {
    HalfOpenInterval component;
    std::optional<Landing> left;
    std::optional<Landing> right;
};

std::vector<ComponentWitness> boundary_witness(const ITMap& m, const IntervalSet& X);

struct PeriodicityEntry {
    SignedPoint disc;
    long preperiod = 0;
    long period = 0;
};

// Exact (preperiod, period) for every signed discontinuity; cycle detection on the
// finite grid β + (1/Q)ℤ. max_steps < 0 means the grid bound Q+1.
std::optional<std::vector<PeriodicityEntry>> eventually_periodic(const ITMap& m, long max_steps = -1);

// Preperiod and period of an arbitrary signed or geometric point (std::nullopt if the
// geometric orbit meets a discontinuity or max_steps is exceeded).
std::optional<std::pair<long, long>> orbit_period(const ITMap& m, const SignedPoint& p, long max_steps = -1);

enum class OrbitTag { Precritical, Preperiodic, Accumulation };

struct OrbitClass {
    OrbitTag tag = OrbitTag::Preperiodic;
    // Precritical: first critical point met and its time.
    SignedPoint hit;
    long time = 0;
    // Preperiodic: exact preperiod and period.
    long preperiod = 0;
    long period = 0;
};

// Signed points are tested for critical hits at times t >= 1, geometric points at t >= 0.
OrbitClass classify_orbit(const ITMap& m, const SignedPoint& p);

// Cylinder of the periodic itinerary of p; throws NotPeriodic.
HalfOpenInterval maximal_periodic_interval(const ITMap& m, const SignedPoint& p);

}  // namespace itm
