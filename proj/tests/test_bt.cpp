#include <doctest.h>

#include <filesystem>
#include <set>

#include <unistd.h>

#include "fixtures.hpp"
#include "itm/render.hpp"
#include "itm/stability.hpp"
#include "oracle.hpp"

using namespace itm;

namespace {

oracle::Map to_oracle(const ITMap& m)
{
    oracle::Map om;
    for (const auto& b : m.beta()) om.beta.push_back(b.to_mpq());
    for (const auto& g : m.gamma()) om.gamma.push_back(g.to_mpq());
    return om;
}

// Component count, distinct return times per component and n from direct iteration.
struct OracleFingerprint {
    std::size_t components = 0;
    std::vector<std::set<long>> times;
    long n = 0;
};

std::optional<OracleFingerprint> oracle_fingerprint(const ITMap& m, long budget)
{
    oracle::Map om = to_oracle(m);
    auto a = oracle::attractor(om, budget);
    if (!a) return std::nullopt;
    OracleFingerprint f;
    f.components = a->second.size();
    f.n = a->first;
    for (const auto& J : a->second) {
        std::set<long> ts;
        for (const auto& b : oracle::return_branches(om, J, 4 * budget)) ts.insert(b.time);
        f.times.push_back(ts);
    }
    std::sort(f.times.begin(), f.times.end());
    return f;
}

std::vector<std::set<long>> distinct(const Fingerprint& f)
{
    std::vector<std::set<long>> out;
    for (const auto& t : f.return_times) out.emplace_back(t.begin(), t.end());
    std::sort(out.begin(), out.end());
    return out;
}

struct TempDir {
    std::filesystem::path path;
    TempDir()
    {
        path = std::filesystem::temp_directory_path() / ("itm-bt-" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("the family map and its triangle")
{
    ITMap m = bt_map({Rational(1, 2), Rational(1, 4)});
    CHECK(m == ITMap({0, Rational(1, 2), Rational(3, 4), 1}, {Rational(1, 2), Rational(1, 4), Rational(-3, 4)}));
    CHECK(validate(m).ok());
    CHECK(bt_map({Rational(1, 2), Rational(1, 2)}).r() == 2);
    CHECK(bt_map({Rational(0), Rational(0)}).r() == 1);
    CHECK(in_triangle({Rational(1), Rational(0)}));
    CHECK_FALSE(in_triangle({Rational(1, 4), Rational(1, 2)}));
    try {
        bt_map({Rational(1, 4), Rational(1, 2)});
        FAIL("expected OutOfTriangle");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfTriangle);
    }
    CHECK_THROWS_AS(bt_map({Rational(3, 2), Rational(0)}), Error);
}

TEST_CASE("fingerprints round trip and match the oracle at (1/2,1/4)")
{
    CellClass c = classify_cell(fixtures::bt_half_quarter(), 500);
    CHECK(c.tag == CellTag::FiniteUnstable);
    REQUIRE(c.fingerprint);
    auto want = oracle_fingerprint(fixtures::bt_half_quarter(), 500);
    REQUIRE(want);
    CHECK(c.fingerprint->components == want->components);
    CHECK(c.fingerprint->n_stable == want->n);
    CHECK(distinct(*c.fingerprint) == want->times);
    std::string s = c.fingerprint->str();
    CHECK(s.find(',') == std::string::npos);
    CHECK(Fingerprint::parse(s) == *c.fingerprint);
    CHECK_THROWS_AS(Fingerprint::parse("2-1"), Error);
    CHECK(std::string(cell_tag_name(CellTag::FiniteStable)) != cell_tag_name(CellTag::FiniteUnstable));
    CHECK(parse_cell_tag(cell_tag_name(CellTag::Undetermined)) == CellTag::Undetermined);
}

TEST_CASE("a small scan agrees with direct iteration")
{
    ScanRequest req;
    req.res = 12;
    req.budget = 500;
    ScanResult sr = scan(req);
    CHECK(sr.cells.size() == 12 * 13 / 2);
    for (const auto& c : sr.cells) {
        CAPTURE(c.a.str());
        CAPTURE(c.b.str());
        BTParams p = grid_point(req.region, req.res, c.i, c.j);
        CHECK(p.a == c.a);
        CHECK(p.b == c.b);
        REQUIRE(in_triangle(p));
        auto want = oracle_fingerprint(bt_map(p), req.budget);
        CHECK(bool(want) == (c.cls.tag != CellTag::Undetermined));
        if (!want || !c.cls.fingerprint) continue;
        CHECK(c.cls.fingerprint->components == want->components);
        CHECK(c.cls.fingerprint->n_stable == want->n);
        CHECK(distinct(*c.cls.fingerprint) == want->times);
        CHECK((c.cls.tag == CellTag::FiniteStable) == is_stable(bt_map(p), req.budget).stable);
    }
    CHECK(sr.at(3, 1) != nullptr);
    CHECK(sr.at(1, 3) == nullptr);
}

TEST_CASE("scan arguments are range checked")
{
    ScanRequest req;
    req.res = 1;
    CHECK_THROWS_AS(scan(req), Error);
    req.res = 4;
    req.budget = 0;
    CHECK_THROWS_AS(scan(req), Error);
    req.budget = 10;
    req.workers = 0;
    CHECK_THROWS_AS(scan(req), Error);
    req.workers = 1;
    req.region = {Rational(1, 2), Rational(0), Rational(1, 2), Rational(1)};
    CHECK_THROWS_AS(scan(req), Error);
}

TEST_CASE("scans are deterministic across worker counts")
{
    ScanRequest req;
    req.res = 16;
    req.region = {Rational(1, 4), Rational(0), Rational(1), Rational(3, 4)};
    ScanResult one = scan(req);
    req.workers = 3;
    ScanResult three = scan(req);
    CHECK(one.cells == three.cells);
    CHECK(scan_to_csv(one) == scan_to_csv(three));
    CHECK(encode_ppm(render_scan(one)) == encode_ppm(render_scan(three)));
}

TEST_CASE("CSV round trip and the on-disk cache")
{
    ScanRequest req;
    req.res = 8;
    req.budget = 200;
    ScanResult sr = scan(req);
    std::string csv = scan_to_csv(sr);
    CHECK(csv.find("i,j,a,b,tag,fingerprint,n_stable\n") != std::string::npos);
    ScanResult back = scan_from_csv(csv);
    CHECK(back.region == sr.region);
    CHECK(back.res == sr.res);
    CHECK(back.budget == sr.budget);
    CHECK(back.cells == sr.cells);
    CHECK_THROWS_AS(scan_from_csv(csv.substr(0, csv.size() - 20)), Error);
    CHECK_THROWS_AS(scan_from_csv(""), Error);

    CHECK(scan_key(sr.region, 8, 200) != scan_key(sr.region, 8, 201));
    CHECK(scan_cache_name(sr.region, 8, 200) != scan_cache_name(sr.region, 9, 200));

    TempDir dir;
    bool hit = true;
    ScanResult first = scan_cached(req, dir.path.string(), &hit);
    CHECK_FALSE(hit);
    ScanResult second = scan_cached(req, dir.path.string(), &hit);
    CHECK(hit);
    CHECK(first.cells == second.cells);
    CHECK(std::filesystem::exists(dir.path / scan_cache_name(sr.region, 8, 200)));
    std::string file = (dir.path / "copy.csv").string();
    write_scan_file(file, first);
    CHECK(read_scan_file(file).cells == first.cells);
}

TEST_CASE("rendering")
{
    ScanRequest req;
    req.res = 6;
    ScanResult sr = scan(req);
    Palette pal;
    Image img = render_scan(sr, pal);
    CHECK(img.width == 6);
    CHECK(img.height == 6);
    REQUIRE(img.rgb.size() == 6 * 6 * 3);
    auto px = [&](int i, int j) {
        std::size_t o = (std::size_t(5 - j) * 6 + std::size_t(i)) * 3;
        return RGB{img.rgb[o], img.rgb[o + 1], img.rgb[o + 2]};
    };
    CHECK(px(0, 5) == pal.outside);
    for (const auto& c : sr.cells) {
        if (c.cls.tag == CellTag::FiniteUnstable) CHECK(px(c.i, c.j) == pal.unstable);
        if (c.cls.tag == CellTag::FiniteStable) CHECK(px(c.i, c.j) == fingerprint_color(*c.cls.fingerprint, pal));
    }
    Fingerprint f{2, {{1, 2}, {3}}, 1};
    RGB col = fingerprint_color(f, pal);
    CHECK(col != pal.unstable);
    CHECK(col != pal.undetermined);
    CHECK(col != pal.outside);
    std::string ppm = encode_ppm(img);
    CHECK(ppm.rfind("P6\n6 6\n255\n", 0) == 0);
    CHECK(ppm.size() == 11 + 108);
    if (png_available()) {
        std::string png = encode_png(img);
        CHECK(png.rfind("\x89PNG\r\n\x1a\n", 0) == 0);
        CHECK(png == encode_png(img));
    } else {
        CHECK_THROWS_AS(encode_png(img), Error);
    }
}
