#pragma once

#include <optional>
#include <string>
#include <vector>

#include "itm/itmap.hpp"

namespace itm {

enum class Side { Left, Right };

const char* side_name(Side s);
Side parse_side(const std::string& s);

// Vertical segment {x} × [0, height] standing on the bottom side of the unit square.
struct SpyMirror {
    Rational x;
    Rational height;
    Side reflective = Side::Left;
};

struct BilliardTable {
    std::vector<SpyMirror> mirrors;
};

// Throws InvalidMap: x ∈ (0,1), height ∈ (0,1], distinct x.
void validate_table(const BilliardTable& t);

// Sheet (cx, cy) of the torus [0,2)² holds the square reflected in x when cx = 1 and in
// y when cy = 1.
struct Sheet {
    int cx = 0, cy = 0;
};

// Copy of a mirror in the torus: u = x or 2 - x, v ∈ [0,h] (cy = 0) or [2-h, 2] (cy = 1).
struct Slit {
    std::size_t mirror = 0;
    int cx = 0, cy = 0;
    Rational u, v0, v1;
    Side reflective = Side::Left;
    std::size_t partner = 0;  // slit index reached by a reflection; same v
};

struct UnfoldedFlow {
    std::vector<Sheet> sheets;  // (0,0), (1,0), (0,1), (1,1)
    std::vector<Slit> slits;    // four per mirror, mirror-major
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

UnfoldedFlow unfold(const BilliardTable& t);

enum class EventKind { LeftSide, RightSide, BottomSide, TopSide, MirrorReflect, MirrorPass };

const char* event_kind_name(EventKind k);

struct BilliardEvent {
    EventKind kind = EventKind::LeftSide;
    Rational x, y;  // position in the square
    int mirror = -1;
    friend bool operator==(const BilliardEvent&, const BilliardEvent&) = default;
};

// n_events of the billiard started at (x,y) in direction (1, slope). Throws CornerHit (with
// the events so far in the details) at a corner of the square or a mirror endpoint.
std::vector<BilliardEvent> trace(const BilliardTable& t, const Rational& x, const Rational& y, const Rational& slope,
                                 long n_events);
// Same trajectory followed as a straight line on the torus and folded back.
std::vector<BilliardEvent> trace_unfolded(const BilliardTable& t, const Rational& x, const Rational& y,
                                          const Rational& slope, long n_events);

// Piece of the transversal {u = 0} × [0,2) with its first return.
struct ReturnPiece {
    HalfOpenInterval source;
    std::optional<Rational> translation;  // mod 2 in [0,2) on the circle; unset if it never returns
    long jumps = 0;
};

struct BilliardReturn {
    std::vector<ReturnPiece> pieces;  // circle map in source order, adjacent equal translations merged
    IntervalSet trapped;              // transversal coordinates that never return
    Rational cut;                     // breakpoint of the circle map giving the fewest branches
};

// First return of the unfolded flow in direction (1, slope) to the vertical circle u = 0,
// v ∈ [0,2). Throws RangeViolation for slope <= 0.
BilliardReturn first_return(const BilliardTable& t, const Rational& slope);

// Circle map opened at `cut`: coordinates v - cut mod 2, translations in (-2,2) with images
// in [0,2).
std::vector<ReturnPiece> cut_open(const BilliardReturn& br, const Rational& cut);

// The same map rescaled to [0,1); throws Degenerate listing trapped pieces.
ITMap first_return_itm(const BilliardTable& t, const Rational& slope);

}  // namespace itm
