#pragma once

#include <optional>
#include <string>
#include <vector>

#include "itm/itmap.hpp"

namespace itm {

inline constexpr const char* kCodeVersion = "itmlab-0.1.0";

// 0 <= b <= a <= 1.
struct BTParams {
    Rational a, b;
};

// x+a on [0,1-a), x+b on [1-a,1-b), x+b-1 on [1-b,1); empty branches are dropped.
// Throws OutOfTriangle.
ITMap bt_map(const BTParams& p);
bool in_triangle(const BTParams& p);

enum class CellTag { FiniteStable, FiniteUnstable, Undetermined };

const char* cell_tag_name(CellTag t);
CellTag parse_cell_tag(const std::string& s);

struct Fingerprint {
    std::size_t components = 0;
    // Sorted return-time multiset per component, components sorted lexicographically.
    std::vector<std::vector<long>> return_times;
    long n_stable = 0;

    // "2|1 2;3|5": component count, return times, n_stable. Contains no commas.
    std::string str() const;
    static Fingerprint parse(const std::string& s);
    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct CellClass {
    CellTag tag = CellTag::Undetermined;
    std::optional<Fingerprint> fingerprint;  // set iff Finite
};

CellClass classify_cell(const ITMap& m, long budget);

// Parameter rectangle a ∈ [x0,x1), b ∈ [y0,y1).
struct ScanRegion {
    Rational x0{0}, y0{0}, x1{1}, y1{1};
    friend bool operator==(const ScanRegion&, const ScanRegion&) = default;
};

struct ScanRequest {
    ScanRegion region;
    int res = 64;
    long budget = 500;
    int workers = 1;
};

// Cell (i,j) sits at a = x0 + i(x1-x0)/res, b = y0 + j(y1-y0)/res.
struct ScanCell {
    int i = 0, j = 0;
    Rational a, b;
    CellClass cls;
    friend bool operator==(const ScanCell& x, const ScanCell& y)
    {
        return x.i == y.i && x.j == y.j && x.a == y.a && x.b == y.b && x.cls.tag == y.cls.tag &&
               x.cls.fingerprint == y.cls.fingerprint;
    }
};

struct ScanResult {
    ScanRegion region;
    int res = 0;
    long budget = 0;
    std::vector<ScanCell> cells;  // triangle cells only, ordered by (j, i)
    double seconds = 0;           // wall time; not persisted
    long undetermined = 0;

    const ScanCell* at(int i, int j) const;
};

BTParams grid_point(const ScanRegion& r, int res, int i, int j);

// Deterministic for any worker count. Throws RangeViolation on res < 2, budget < 1 or
// workers < 1.
ScanResult scan(const ScanRequest& req);

// Key over (region, resolution, budget, code version).
std::string scan_key(const ScanRegion& r, int res, long budget);
std::string scan_cache_name(const ScanRegion& r, int res, long budget);

// Header line JSON, then "i,j,a,b,tag,fingerprint,n_stable" and one row per cell.
std::string scan_to_csv(const ScanResult& sr);
ScanResult scan_from_csv(const std::string& text);
void write_scan_file(const std::string& path, const ScanResult& sr);
ScanResult read_scan_file(const std::string& path);

// Reads the cache entry for req if present, otherwise scans and writes it.
ScanResult scan_cached(const ScanRequest& req, const std::string& cache_dir, bool* hit = nullptr);

}  // namespace itm
