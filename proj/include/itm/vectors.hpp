#pragma once

#include <string>
#include <vector>

#include "itm/eigen_rational.hpp"
#include "itm/return_map.hpp"

namespace itm {

enum class VectorRole { Landing, Connection, Return, GeneralConnection, Family };

const char* role_name(VectorRole r);

// Element of W(r) = ℝ^r ⊕ ℝ^{r-1}: coordinates [e_1..e_r | f_1..f_{r-1}].
// Extended vectors live in ℝ^r ⊕ ℝ^{r+1}: [e_1..e_r | f_0..f_r].
struct CoeffVector {
    VectorRole role = VectorRole::Connection;
    std::string label;
    int r = 0;
    bool extended = false;
    CountVector c;
    // Bookkeeping for the stabilizer: interval index, point index, chain index, side.
    int J = -1, j = -1, k = -1, side = 0;
    SignedPoint beta;

    Count e(int s) const { return c(s - 1); }
    // f_i for 1..r-1 (standard) or 0..r (extended).
    Count f(int i) const { return c(r + (extended ? i : i - 1)); }
    Eigen::Index dim() const { return c.size(); }
};

CoeffVector make_vector(VectorRole role, std::string label, int r, const std::vector<long>& counts,
                        std::initializer_list<std::pair<int, int>> f_terms, bool extended = false);
// Standard vector viewed in the extended space (f_0 = f_r = 0).
CoeffVector lift(const CoeffVector& v);

RVector param_vector(const ITMap& m);
RVector param_vector(const ExtendedITMap& m);

// Σ v_s w_s + Σ v_{s+r} w_{r+s}; throws DimensionMismatch.
Rational product(const CoeffVector& v, const RVector& w);

// a_j^± chains of a return map: j = 0..N-1 for +, 1..N for -. Empty if a_j is not a landing point.
const std::vector<ChainHit>* chain_of(const ReturnMapData& rmd, int j, int side);
long return_time_of(const ReturnMapData& rmd, int j, int side);

// j = 1..N-1 for interior landing points; j = 0 or N for boundary points that land.
CoeffVector landing_vector(const ITMap& m, const ReturnMapData& rmd, int j, int J_index = 0);
std::vector<CoeffVector> connection_vectors(const ITMap& m, const ReturnMapData& rmd, int j, int side,
                                            int J_index = 0);
CoeffVector return_vector(const ITMap& m, const ReturnMapData& rmd, int j, int side, int J_index = 0);
// Consecutive connections along the critical hits of a periodic boundary orbit; with
// cyclic = true the closing connection back to the first hit is appended.
std::vector<CoeffVector> periodic_chain_vectors(const ITMap& m, const SignedPoint& boundary, long period,
                                                bool cyclic, int J_index, int side);
// Throws NotInC1 if the orbit of beta (time >= 1) never meets a critical point.
CoeffVector general_connection_vector(const ITMap& m, const SignedPoint& beta);
bool in_c1(const ITMap& m, const SignedPoint& beta);

struct VectorFamily {
    std::vector<CoeffVector> vectors;
    std::size_t size() const { return vectors.size(); }
    const CoeffVector* find(const std::string& label) const;
};

enum class FamilyMode { PeriodicIntervals, ComponentsExperimental };

// Family of the linear-independence statement for (J_0, J_1..J_n, C_{¬X}).
// J_0 must be a component of X; J_i must be maximal periodic intervals (or components
// in experimental mode) with orbits disjoint from each other and from J_0.
VectorFamily assemble_family(const ITMap& m, const IntervalSet& X, const HalfOpenInterval& J0,
                             const std::vector<HalfOpenInterval>& others,
                             FamilyMode mode = FamilyMode::PeriodicIntervals);

// L, R^+ and C^± vectors of a component-like interval J (index J_index in labels).
std::vector<CoeffVector> component_vectors(const ITMap& m, const ReturnMapData& rmd, int J_index);
// Boundary chains of a maximal periodic interval: the + chain closes cyclically; the - chain
// closes only if minus_cyclic.
std::vector<CoeffVector> periodic_interval_vectors(const ITMap& m, const HalfOpenInterval& P, int J_index,
                                                   bool minus_cyclic = false);
// C_β for every signed discontinuity in C_1 outside X.
std::vector<CoeffVector> outside_connection_vectors(const ITMap& m, const IntervalSet& X);

// Union of the forward orbit of a periodic interval or of the return-map pieces of J.
IntervalSet interval_orbit(const ITMap& m, const IntervalSet& X, const HalfOpenInterval& J);

// Exact rank over ℚ by fraction-free elimination.
long rank(const std::vector<CoeffVector>& vs);
long rank(const VectorFamily& f);

struct Constraint {
    CoeffVector v;
    Rational target;
};

// Minimum Euclidean norm exact solution of ⟨v_i, δ⟩ = t_i. Throws Infeasible with the
// dependency certificate (labels and coefficients) in the details.
RVector solve_perturbation(const std::vector<Constraint>& cs);

// role,label,e_1..e_r,f_1..f_{r-1}
std::string family_csv(const VectorFamily& f);

}  // namespace itm
