#include "itm/bt.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "itm/error.hpp"
#include "itm/stability.hpp"

namespace itm {

bool in_triangle(const BTParams& p)
{
    return Rational(0) <= p.b && p.b <= p.a && p.a <= Rational(1);
}

ITMap bt_map(const BTParams& p)
{
    if (!in_triangle(p))
        throw Error(ErrorCode::OutOfTriangle, "(a,b) = (" + p.a.str() + "," + p.b.str() + ") violates 0 <= b <= a <= 1");
    const Rational one(1);
    std::vector<Rational> ends{one - p.a, one - p.b, one};
    std::vector<Rational> shifts{p.a, p.b, p.b - one};
    std::vector<Rational> beta{Rational(0)}, gamma;
    for (std::size_t s = 0; s < 3; ++s) {
        if (ends[s] == beta.back()) continue;
        beta.push_back(ends[s]);
        gamma.push_back(shifts[s]);
    }
    return ITMap(std::move(beta), std::move(gamma));
}

const char* cell_tag_name(CellTag t)
{
    switch (t) {
    case CellTag::FiniteStable: return "FiniteStable";
    case CellTag::FiniteUnstable: return "FiniteUnstable";
    case CellTag::Undetermined: return "Undetermined";
    }
    return "?";
}

CellTag parse_cell_tag(const std::string& s)
{
    for (CellTag t : {CellTag::FiniteStable, CellTag::FiniteUnstable, CellTag::Undetermined})
        if (s == cell_tag_name(t)) return t;
    throw Error(ErrorCode::Parse, "unknown cell tag '" + s + "'");
}

std::string Fingerprint::str() const
{
    std::string s = std::to_string(components) + "|";
    for (std::size_t c = 0; c < return_times.size(); ++c) {
        if (c) s += ";";
        for (std::size_t k = 0; k < return_times[c].size(); ++k) s += (k ? " " : "") + std::to_string(return_times[c][k]);
    }
    return s + "|" + std::to_string(n_stable);
}

Fingerprint Fingerprint::parse(const std::string& s)
{
    auto p1 = s.find('|');
    auto p2 = s.rfind('|');
    if (p1 == std::string::npos || p1 == p2) throw Error(ErrorCode::Parse, "malformed fingerprint '" + s + "'");
    Fingerprint f;
    try {
        f.components = std::stoul(s.substr(0, p1));
        f.n_stable = std::stol(s.substr(p2 + 1));
        std::stringstream comps(s.substr(p1 + 1, p2 - p1 - 1));
        std::string part;
        while (std::getline(comps, part, ';')) {
            std::stringstream ts(part);
            std::vector<long> times;
            long t;
            while (ts >> t) times.push_back(t);
            f.return_times.push_back(std::move(times));
        }
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::Parse, "malformed fingerprint '" + s + "'");
    }
    return f;
}

CellClass classify_cell(const ITMap& m, long budget)
{
    CellClass c;
    StabilityReport rep = is_stable(m, budget);
    if (!rep.finite_type.finite()) return c;
    Fingerprint f;
    f.components = rep.finite_type.X.size();
    f.n_stable = rep.finite_type.n_stable;
    for (const auto& rmd : rep.return_maps) {
        std::vector<long> times;
        for (const auto& b : rmd.branches) times.push_back(b.return_time);
        std::sort(times.begin(), times.end());
        f.return_times.push_back(std::move(times));
    }
    std::sort(f.return_times.begin(), f.return_times.end());
    c.tag = rep.stable ? CellTag::FiniteStable : CellTag::FiniteUnstable;
    c.fingerprint = std::move(f);
    return c;
}

const ScanCell* ScanResult::at(int i, int j) const
{
    auto it = std::lower_bound(cells.begin(), cells.end(), std::make_pair(j, i),
                               [](const ScanCell& c, const std::pair<int, int>& k) { return std::make_pair(c.j, c.i) < k; });
    if (it == cells.end() || it->i != i || it->j != j) return nullptr;
    return &*it;
}

BTParams grid_point(const ScanRegion& r, int res, int i, int j)
{
    return {r.x0 + (r.x1 - r.x0) * Rational(i, res), r.y0 + (r.y1 - r.y0) * Rational(j, res)};
}

ScanResult scan(const ScanRequest& req)
{
    if (req.res < 2) throw Error(ErrorCode::RangeViolation, "resolution must be at least 2");
    if (req.budget < 1) throw Error(ErrorCode::RangeViolation, "budget must be at least 1");
    if (req.workers < 1) throw Error(ErrorCode::RangeViolation, "worker count must be at least 1");
    if (!(req.region.x0 < req.region.x1) || !(req.region.y0 < req.region.y1))
        throw Error(ErrorCode::RangeViolation, "empty scan region");
    auto t0 = std::chrono::steady_clock::now();
    ScanResult sr;
    sr.region = req.region;
    sr.res = req.res;
    sr.budget = req.budget;
    for (int j = 0; j < req.res; ++j)
        for (int i = 0; i < req.res; ++i) {
            BTParams p = grid_point(req.region, req.res, i, j);
            if (in_triangle(p)) sr.cells.push_back({i, j, p.a, p.b, {}});
        }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < sr.cells.size(); k = next++) {
            ScanCell& c = sr.cells[k];
            try {
                c.cls = classify_cell(bt_map({c.a, c.b}), req.budget);
            } catch (const Error&) {
                c.cls = CellClass{};
            }
        }
    };
    int nw = std::min<int>(req.workers, std::max<int>(1, int(sr.cells.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < nw; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& c : sr.cells)
        if (c.cls.tag == CellTag::Undetermined) {
            ++sr.undetermined;
            std::cerr << "scan: undetermined cell (" << c.a.str() << "," << c.b.str() << ") at budget " << req.budget
                      << "\n";
        }
    sr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sr;
}

namespace {

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

nlohmann::ordered_json header_json(const ScanRegion& r, int res, long budget)
{
    nlohmann::ordered_json h;
    h["family"] = "bt";
    h["region"] = {r.x0.str(), r.y0.str(), r.x1.str(), r.y1.str()};
    h["res"] = res;
    h["budget"] = budget;
    h["version"] = kCodeVersion;
    return h;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
}

}  // namespace

std::string scan_key(const ScanRegion& r, int res, long budget) { return header_json(r, res, budget).dump(); }

std::string scan_cache_name(const ScanRegion& r, int res, long budget)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(scan_key(r, res, budget))));
    return std::string("bt-") + buf + ".csv";
}

std::string scan_to_csv(const ScanResult& sr)
{
    auto h = header_json(sr.region, sr.res, sr.budget);
    h["cells"] = sr.cells.size();
    std::string out = h.dump() + "\n" + "i,j,a,b,tag,fingerprint,n_stable\n";
    for (const auto& c : sr.cells) {
        out += std::to_string(c.i) + "," + std::to_string(c.j) + "," + c.a.str() + "," + c.b.str() + "," +
               cell_tag_name(c.cls.tag) + ",";
        if (c.cls.fingerprint) out += c.cls.fingerprint->str() + "," + std::to_string(c.cls.fingerprint->n_stable);
        else out += ",";
        out += "\n";
    }
    return out;
}

ScanResult scan_from_csv(const std::string& text)
{
    std::stringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty scan file");
    ScanResult sr;
    std::size_t expected = 0;
    try {
        auto h = nlohmann::json::parse(line);
        auto reg = h.at("region");
        sr.region = {Rational::parse(reg.at(0).get<std::string>()), Rational::parse(reg.at(1).get<std::string>()),
                     Rational::parse(reg.at(2).get<std::string>()), Rational::parse(reg.at(3).get<std::string>())};
        sr.res = h.at("res").get<int>();
        sr.budget = h.at("budget").get<long>();
        expected = h.at("cells").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("scan header: ") + e.what());
    }
    if (!std::getline(in, line) || line != "i,j,a,b,tag,fingerprint,n_stable")
        throw Error(ErrorCode::Parse, "scan file lacks the column line");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() < 5) throw Error(ErrorCode::Parse, "short scan row '" + line + "'");
        ScanCell c;
        c.i = std::stoi(f[0]);
        c.j = std::stoi(f[1]);
        c.a = Rational::parse(f[2]);
        c.b = Rational::parse(f[3]);
        c.cls.tag = parse_cell_tag(f[4]);
        if (c.cls.tag != CellTag::Undetermined) {
            if (f.size() < 6) throw Error(ErrorCode::Parse, "finite cell without fingerprint '" + line + "'");
            c.cls.fingerprint = Fingerprint::parse(f[5]);
        } else {
            ++sr.undetermined;
        }
        sr.cells.push_back(std::move(c));
    }
    if (sr.cells.size() != expected) throw Error(ErrorCode::Parse, "scan file is truncated");
    return sr;
}

void write_scan_file(const std::string& path, const ScanResult& sr)
{
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error(ErrorCode::RangeViolation, "cannot write " + tmp);
        out << scan_to_csv(sr);
    }
    std::filesystem::rename(tmp, path);
}

ScanResult read_scan_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Parse, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scan_from_csv(ss.str());
}

ScanResult scan_cached(const ScanRequest& req, const std::string& cache_dir, bool* hit)
{
    std::filesystem::path path = std::filesystem::path(cache_dir) / scan_cache_name(req.region, req.res, req.budget);
    if (hit) *hit = false;
    if (std::filesystem::exists(path)) {
        try {
            ScanResult sr = read_scan_file(path.string());
            if (hit) *hit = true;
            return sr;
        } catch (const Error&) {
            // corrupt entry: rescan and overwrite
        }
    }
    ScanResult sr = scan(req);
    std::filesystem::create_directories(cache_dir);
    write_scan_file(path.string(), sr);
    return sr;
}

}  // namespace itm
