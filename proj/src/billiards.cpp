#include "itm/billiards.hpp"

#include <algorithm>

#include "itm/error.hpp"

namespace itm {

namespace {

const Rational kZero(0), kOne(1), kTwo(2);

Rational mod2(const Rational& v) { return v - kTwo * Rational(mpz_class((v / kTwo).floor()), mpz_class(1)); }

Rational fold(const Rational& u) { return u <= kOne ? u : kTwo - u; }

Side flip(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

struct Column {
    Rational c;
    Rational h;
    bool reflects = false;  // left side reflective in the torus
    std::size_t partner = 0;
    int mirror = -1;
};

// Columns of slit copies in increasing u; the two copies of a mirror in one column
// (cy = 0, 1) form the arc [-h, h] mod 2.
std::vector<Column> columns(const BilliardTable& t)
{
    std::vector<Column> cols;
    for (std::size_t i = 0; i < t.mirrors.size(); ++i) {
        const auto& m = t.mirrors[i];
        cols.push_back({m.x, m.height, m.reflective == Side::Left, 0, int(i)});
        cols.push_back({kTwo - m.x, m.height, m.reflective == Side::Right, 0, int(i)});
    }
    std::sort(cols.begin(), cols.end(), [](const Column& a, const Column& b) { return a.c < b.c; });
    for (std::size_t k = 0; k < cols.size(); ++k)
        for (std::size_t l = 0; l < cols.size(); ++l)
            if (cols[l].mirror == cols[k].mirror && l != k) cols[k].partner = l;
    return cols;
}

[[noreturn]] void corner(const std::vector<BilliardEvent>& ev, const Rational& x, const Rational& y)
{
    std::vector<std::string> details;
    for (const auto& e : ev)
        details.push_back(std::string(event_kind_name(e.kind)) + " (" + e.x.str() + "," + e.y.str() + ")" +
                          (e.mirror >= 0 ? " mirror " + std::to_string(e.mirror) : ""));
    throw Error(ErrorCode::CornerHit, "trajectory meets a corner at (" + x.str() + "," + y.str() + ")", details);
}

void check_start(const BilliardTable& t, const Rational& x, const Rational& y, const Rational& slope)
{
    validate_table(t);
    if (slope.sign() <= 0) throw Error(ErrorCode::RangeViolation, "slope must be positive");
    if (x < kZero || x > kOne || y < kZero || y > kOne)
        throw Error(ErrorCode::InvalidPoint, "start (" + x.str() + "," + y.str() + ") is outside the square");
    if (x == kOne || y == kOne)
        throw Error(ErrorCode::InvalidPoint, "start on the right or top side points out of the square");
    if (x == kZero && y == kZero) throw Error(ErrorCode::InvalidPoint, "start is a corner of the square");
}

}  // namespace

const char* side_name(Side s) { return s == Side::Left ? "left" : "right"; }

Side parse_side(const std::string& s)
{
    if (s == "left") return Side::Left;
    if (s == "right") return Side::Right;
    throw Error(ErrorCode::Parse, "reflective side must be \"left\" or \"right\", got \"" + s + "\"");
}

const char* event_kind_name(EventKind k)
{
    switch (k) {
    case EventKind::LeftSide: return "left-side";
    case EventKind::RightSide: return "right-side";
    case EventKind::BottomSide: return "bottom-side";
    case EventKind::TopSide: return "top-side";
    case EventKind::MirrorReflect: return "mirror-reflect";
    case EventKind::MirrorPass: return "mirror-pass";
    }
    return "?";
}

void validate_table(const BilliardTable& t)
{
    std::vector<std::string> v;
    for (std::size_t i = 0; i < t.mirrors.size(); ++i) {
        const auto& m = t.mirrors[i];
        std::string tag = "mirror " + std::to_string(i) + ": ";
        if (!(kZero < m.x && m.x < kOne)) v.push_back(tag + "x = " + m.x.str() + " not in (0,1)");
        if (!(kZero < m.height && m.height <= kOne)) v.push_back(tag + "height = " + m.height.str() + " not in (0,1]");
        for (std::size_t j = 0; j < i; ++j)
            if (t.mirrors[j].x == m.x) v.push_back(tag + "shares x with mirror " + std::to_string(j));
    }
    if (!v.empty()) throw Error(ErrorCode::InvalidMap, "invalid billiard table", v);
}

UnfoldedFlow unfold(const BilliardTable& t)
{
    validate_table(t);
    UnfoldedFlow f;
    f.sheets = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (std::size_t i = 0; i < t.mirrors.size(); ++i) {
        const auto& m = t.mirrors[i];
        std::size_t base = f.slits.size();
        for (int cx : {0, 1})
            for (int cy : {0, 1}) {
                Slit s;
                s.mirror = i;
                s.cx = cx;
                s.cy = cy;
                s.u = cx == 0 ? m.x : kTwo - m.x;
                s.v0 = cy == 0 ? kZero : kTwo - m.height;
                s.v1 = cy == 0 ? m.height : kTwo;
                s.reflective = cx == 0 ? m.reflective : flip(m.reflective);
                f.slits.push_back(s);
            }
        // Order within a mirror: (0,0), (0,1), (1,0), (1,1); reflection R_z swaps cx.
        for (std::size_t k = 0; k < 2; ++k) {
            f.slits[base + k].partner = base + 2 + k;
            f.slits[base + 2 + k].partner = base + k;
            f.pairs.emplace_back(base + k, base + 2 + k);
        }
    }
    return f;
}

std::vector<BilliardEvent> trace(const BilliardTable& t, const Rational& x0, const Rational& y0, const Rational& slope,
                                 long n_events)
{
    check_start(t, x0, y0, slope);
    std::vector<BilliardEvent> ev;
    Rational x = x0, y = y0;
    int vx = 1, vy = 1;
    while (long(ev.size()) < n_events) {
        Rational tx = vx > 0 ? kOne - x : x;
        Rational ty = (vy > 0 ? kOne - y : y) / slope;
        Rational step = min(tx, ty);
        int hit = -1;
        Rational tm, ym;
        for (std::size_t i = 0; i < t.mirrors.size(); ++i) {
            const auto& m = t.mirrors[i];
            Rational d = vx > 0 ? m.x - x : x - m.x;
            if (d.sign() <= 0 || d > step || (hit >= 0 && d >= tm)) continue;
            Rational yy = y + Rational(vy) * slope * d;
            if (yy > m.height) continue;
            hit = int(i);
            tm = d;
            ym = yy;
        }
        if (hit >= 0) {
            const auto& m = t.mirrors[std::size_t(hit)];
            if (ym == m.height || ym.is_zero()) corner(ev, m.x, ym);
            bool reflect = (vx > 0) == (m.reflective == Side::Left);
            ev.push_back({reflect ? EventKind::MirrorReflect : EventKind::MirrorPass, m.x, ym, hit});
            x = m.x;
            y = ym;
            if (reflect) vx = -vx;
            continue;
        }
        x += Rational(vx) * step;
        y += Rational(vy) * slope * step;
        if (tx == ty) corner(ev, x, y);
        if (tx < ty) {
            ev.push_back({vx > 0 ? EventKind::RightSide : EventKind::LeftSide, x, y, -1});
            vx = -vx;
        } else {
            ev.push_back({vy > 0 ? EventKind::TopSide : EventKind::BottomSide, x, y, -1});
            vy = -vy;
        }
    }
    return ev;
}

std::vector<BilliardEvent> trace_unfolded(const BilliardTable& t, const Rational& x0, const Rational& y0,
                                          const Rational& slope, long n_events)
{
    check_start(t, x0, y0, slope);
    UnfoldedFlow f = unfold(t);
    std::vector<BilliardEvent> ev;
    Rational u = x0, v = y0;
    while (long(ev.size()) < n_events) {
        Rational tu = (u < kOne ? kOne : kTwo) - u;
        Rational tv = ((v < kOne ? kOne : kTwo) - v) / slope;
        int hit = -1;
        Rational tm, vm;
        for (std::size_t k = 0; k < f.slits.size(); ++k) {
            const Slit& s = f.slits[k];
            Rational d = s.u - u;
            if (d.sign() <= 0 || d > min(tu, tv)) continue;
            Rational vv = v + slope * d;
            if (vv < s.v0 || vv > s.v1) continue;
            if (hit >= 0 && d >= tm) continue;
            hit = int(k);
            tm = d;
            vm = vv;
        }
        Rational step = min(tu, tv);
        if (hit >= 0) {
            const Slit& s = f.slits[std::size_t(hit)];
            const Rational& top = s.cy == 0 ? s.v1 : s.v0;
            if (vm == top || vm == kTwo || vm.is_zero()) corner(ev, fold(s.u), fold(vm));
            bool reflect = s.reflective == Side::Left;
            ev.push_back({reflect ? EventKind::MirrorReflect : EventKind::MirrorPass, fold(s.u), fold(vm),
                          int(s.mirror)});
            u = reflect ? f.slits[s.partner].u : s.u;
            v = vm;
            continue;
        }
        u += step;
        v += slope * step;
        if (tu == tv) corner(ev, fold(u), fold(v));
        if (tu < tv) {
            ev.push_back({u == kOne ? EventKind::RightSide : EventKind::LeftSide, fold(u), fold(v), -1});
            if (u == kTwo) u = kZero;
        } else {
            ev.push_back({v == kOne ? EventKind::TopSide : EventKind::BottomSide, fold(u), fold(v), -1});
            if (v == kTwo) v = kZero;
        }
    }
    return ev;
}

BilliardReturn first_return(const BilliardTable& t, const Rational& slope)
{
    validate_table(t);
    if (slope.sign() <= 0) throw Error(ErrorCode::RangeViolation, "slope must be positive");
    auto cols = columns(t);

    struct Work {
        Rational a, b;  // source
        Rational u;     // just right of column u (or the transversal)
        Rational shift;
        long jumps = 0;
        std::vector<std::pair<std::size_t, Rational>> seen;  // (column, shift mod 2) after jumps
    };
    std::vector<ReturnPiece> done;
    std::vector<HalfOpenInterval> trapped;
    std::vector<Work> stack{{kZero, kTwo, kZero, kZero, 0, {}}};
    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        std::size_t k = 0;
        while (k < cols.size() && cols[k].c <= w.u) ++k;
        if (k == cols.size()) {
            done.push_back({HalfOpenInterval(w.a, w.b), mod2(w.shift + slope * (kTwo - w.u)), w.jumps});
            continue;
        }
        const Column& col = cols[k];
        Rational shift = w.shift + slope * (col.c - w.u);
        // Breakpoints where a + shift meets 2j ± h.
        std::vector<Rational> cuts{w.a, w.b};
        if (col.h < kOne) {
            Rational lo = w.a + shift, hi = w.b + shift;
            mpz_class j0 = ((lo - col.h) / kTwo).floor();
            for (mpz_class j = j0; Rational(j, 1) * kTwo - col.h < hi + kTwo; ++j)
                for (const Rational& e : {Rational(j, 1) * kTwo - col.h, Rational(j, 1) * kTwo + col.h}) {
                    Rational s = e - shift;
                    if (w.a < s && s < w.b) cuts.push_back(s);
                }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = cuts.size() - 1; i-- > 0;) {
            Work n = w;
            n.a = cuts[i];
            n.b = cuts[i + 1];
            n.shift = shift;
            n.u = col.c;
            Rational r = mod2((n.a + n.b) / kTwo + shift);
            bool on_slit = col.h == kOne || r <= col.h || r >= kTwo - col.h;
            if (on_slit && col.reflects) {
                n.u = cols[col.partner].c;
                ++n.jumps;
                std::pair<std::size_t, Rational> st{col.partner, mod2(shift)};
                if (std::find(n.seen.begin(), n.seen.end(), st) != n.seen.end()) {
                    trapped.emplace_back(n.a, n.b);
                    continue;
                }
                n.seen.push_back(std::move(st));
            }
            stack.push_back(std::move(n));
        }
    }
    for (const auto& iv : trapped) done.push_back({iv, std::nullopt, 0});
    std::sort(done.begin(), done.end(),
              [](const ReturnPiece& a, const ReturnPiece& b) { return a.source.left < b.source.left; });
    BilliardReturn out;
    for (auto& p : done) {
        if (!out.pieces.empty()) {
            auto& last = out.pieces.back();
            if (last.source.right == p.source.left && last.translation == p.translation) {
                last.source.right = p.source.right;
                last.jumps = std::max(last.jumps, p.jumps);
                continue;
            }
        }
        out.pieces.push_back(std::move(p));
    }
    out.trapped = IntervalSet::from_pieces(trapped);
    if (out.trapped.empty()) {
        // Breakpoints of the circle map; 0 only if the translation jumps there.
        std::vector<Rational> candidates;
        for (std::size_t i = 1; i < out.pieces.size(); ++i) candidates.push_back(out.pieces[i].source.left);
        if (candidates.empty() || out.pieces.front().translation != out.pieces.back().translation)
            candidates.insert(candidates.begin(), kZero);
        std::size_t best = 0;
        for (const auto& c : candidates) {
            std::size_t n = cut_open(out, c).size();
            if (best == 0 || n < best) {
                best = n;
                out.cut = c;
            }
        }
    }
    return out;
}

std::vector<ReturnPiece> cut_open(const BilliardReturn& br, const Rational& cut)
{
    std::vector<ReturnPiece> rot;
    for (const auto& p : br.pieces) {
        Rational a = mod2(p.source.left - cut);
        Rational b = a + p.source.length();
        if (b > kTwo) {
            rot.push_back({HalfOpenInterval(a, kTwo), p.translation, p.jumps});
            rot.push_back({HalfOpenInterval(kZero, b - kTwo), p.translation, p.jumps});
        } else {
            rot.push_back({HalfOpenInterval(a, b), p.translation, p.jumps});
        }
    }
    std::vector<ReturnPiece> out;
    for (const auto& p : rot) {
        if (!p.translation) {
            out.push_back(p);
            continue;
        }
        // Split where the image crosses the cut.
        const Rational& T = *p.translation;
        Rational edge = kTwo - T;
        if (p.source.left < edge && edge < p.source.right) {
            out.push_back({HalfOpenInterval(p.source.left, edge), T, p.jumps});
            out.push_back({HalfOpenInterval(edge, p.source.right), T - kTwo, p.jumps});
        } else {
            out.push_back({p.source, p.source.left >= edge ? T - kTwo : T, p.jumps});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ReturnPiece& a, const ReturnPiece& b) { return a.source.left < b.source.left; });
    std::vector<ReturnPiece> merged;
    for (auto& p : out) {
        if (!merged.empty() && merged.back().source.right == p.source.left && merged.back().translation == p.translation) {
            merged.back().source.right = p.source.right;
            merged.back().jumps = std::max(merged.back().jumps, p.jumps);
            continue;
        }
        merged.push_back(std::move(p));
    }
    return merged;
}

ITMap first_return_itm(const BilliardTable& t, const Rational& slope)
{
    BilliardReturn br = first_return(t, slope);
    if (!br.trapped.empty()) {
        std::vector<std::string> details;
        for (const auto& p : br.pieces)
            if (!p.translation) details.push_back("trapped " + p.source.str());
        throw Error(ErrorCode::Degenerate, "part of the transversal never returns: " + br.trapped.str(), details);
    }
    std::vector<Rational> beta{kZero}, gamma;
    for (const auto& p : cut_open(br, br.cut)) {
        beta.push_back(p.source.right / kTwo);
        gamma.push_back(*p.translation / kTwo);
    }
    ITMap m(std::move(beta), std::move(gamma));
    auto rep = validate(m);
    if (!rep.ok()) throw Error(ErrorCode::InvalidMap, "first return map failed validation", rep.violations);
    return m;
}

}  // namespace itm
