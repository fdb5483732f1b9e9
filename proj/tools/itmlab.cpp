#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "itm/render.hpp"
#include "itm/service.hpp"

using namespace itm;

namespace {

std::string read_input(const std::string& path)
{
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Parse, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& out, const std::string& data)
{
    if (out.empty()) {
        std::cout << data;
        std::cout.flush();
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(ErrorCode::RangeViolation, "cannot write " + out);
    f << data;
}

ScanRegion parse_region(const std::string& s)
{
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
    if (parts.size() != 4) throw Error(ErrorCode::Parse, "region must be x0,y0,x1,y1");
    return {Rational::parse(parts[0]), Rational::parse(parts[1]), Rational::parse(parts[2]), Rational::parse(parts[3])};
}

int exit_code(const Error& e)
{
    switch (error_class(e.code())) {
    case ErrorClass::Budget: return 3;
    case ErrorClass::Infeasible: return 4;
    default: return 2;
    }
}

Service* g_service = nullptr;

void on_signal(int)
{
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exact-arithmetic engine for interval translation maps"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string out;
    app.add_option("--out", out, "write the result here instead of standard output");

    std::string map_file;
    long budget = -1;
    auto* classify = app.add_subcommand("classify", "attractor, stability verdicts and return maps");
    classify->add_option("--map", map_file, "map JSON file, - for stdin")->required();
    classify->add_option("--budget", budget, "attractor iteration budget (default 4Qr)");
    long iterates = 0;
    classify->add_option("--iterates", iterates, "also emit X_0..X_n");

    auto* report = app.add_subcommand("report", "classify plus discontinuity orbits and certified delta0");
    report->add_option("--map", map_file, "map JSON file, - for stdin")->required();
    report->add_option("--budget", budget, "attractor iteration budget (default 4Qr)");

    std::string eps = "1/50", family = "none";
    int max_steps = StabilizeOptions{}.max_steps;
    auto* stab = app.add_subcommand("stabilize", "perturb to a stable map within eps");
    stab->add_option("--map", map_file, "map JSON file, - for stdin")->required();
    stab->add_option("--eps", eps, "total perturbation budget");
    stab->add_option("--family", family, "none or bt");
    stab->add_option("--max-steps", max_steps, "pipeline step limit");

    std::string region = "0,0,1,1", scan_family = "bt", cache_dir, format = "ppm";
    int res = 64, workers = 1;
    long scan_budget = 500;
    auto add_scan_opts = [&](CLI::App* sc) {
        sc->add_option("--family", scan_family, "parameter family (bt)");
        sc->add_option("--region", region, "x0,y0,x1,y1 with rational entries");
        sc->add_option("--res", res, "grid resolution per axis");
        sc->add_option("--budget", scan_budget, "attractor budget per cell");
        sc->add_option("--workers", workers, "worker threads");
        sc->add_option("--cache-dir", cache_dir, "scan cache directory (default ITMLAB_CACHE_DIR)");
    };
    auto* scan_cmd = app.add_subcommand("scan", "classify a parameter grid; writes the scan CSV");
    add_scan_opts(scan_cmd);
    auto* render_cmd = app.add_subcommand("render", "render a scan as PPM or PNG");
    add_scan_opts(render_cmd);
    render_cmd->add_option("--format", format, "ppm or png");

    std::string table_file, slope, trace_from;
    long events = 0;
    auto* bil = app.add_subcommand("billiard", "first return ITM of a billiard with spy mirrors");
    bil->add_option("--table", table_file, "table JSON file, - for stdin")->required();
    bil->add_option("--slope", slope, "flow slope p/q > 0")->required();
    bil->add_option("--trace", trace_from, "x,y start point: emit the event sequence instead");
    bil->add_option("--events", events, "number of events for --trace");

    ServiceConfig cfg;
    auto* serve = app.add_subcommand("serve", "HTTP API");
    serve->add_option("--host", cfg.host, "bind address");
    serve->add_option("--port", cfg.port, "port, 0 for any");
    serve->add_option("--workers", cfg.workers, "computation pool size");
    serve->add_option("--cache-dir", cache_dir, "scan cache directory (default ITMLAB_CACHE_DIR)");
    serve->add_option("--classify-budget", cfg.classify_budget, "default attractor budget, -1 for 4Qr");
    serve->add_option("--scan-budget", cfg.scan_budget, "default per-cell budget for tiles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (cache_dir.empty()) cache_dir = default_cache_dir();
        if (*classify || *report) {
            Json body = {{"map", parse_json(read_input(map_file))}, {"budget", budget}, {"report", bool(*report)}};
            if (iterates) body["iterates"] = iterates;
            write_output(out, classify_request(body, budget).dump(2) + "\n");
        } else if (*stab) {
            Json body = {{"map", parse_json(read_input(map_file))}, {"eps", eps}, {"family", family},
                         {"max_steps", max_steps}};
            write_output(out, stabilize_request(body).dump(2) + "\n");
        } else if (*scan_cmd || *render_cmd) {
            if (scan_family != "bt") throw Error(ErrorCode::Parse, "unknown family " + scan_family);
            if (*render_cmd && format != "ppm" && format != "png")
                throw Error(ErrorCode::Parse, "format must be ppm or png");
            ScanRequest req{parse_region(region), res, scan_budget, workers};
            bool hit = false;
            ScanResult sr = scan_cached(req, cache_dir, &hit);
            std::string entry = (std::filesystem::path(cache_dir) / scan_cache_name(req.region, req.res, req.budget)).string();
            if (*render_cmd) {
                Image img = render_scan(sr);
                write_output(out, format == "png" ? encode_png(img) : encode_ppm(img));
            } else {
                if (!out.empty()) write_scan_file(out, sr);
                long stable = 0, unstable = 0;
                for (const auto& c : sr.cells) {
                    stable += c.cls.tag == CellTag::FiniteStable;
                    unstable += c.cls.tag == CellTag::FiniteUnstable;
                }
                Json summary = {{"file", out.empty() ? entry : out},
                                {"cache", entry},
                                {"cache_hit", hit},
                                {"res", sr.res},
                                {"budget", sr.budget},
                                {"cells", sr.cells.size()},
                                {"finite_stable", stable},
                                {"finite_unstable", unstable},
                                {"undetermined", sr.undetermined}};
                std::cout << summary.dump(2) << "\n";
            }
            if (sr.undetermined > 0) return 3;
        } else if (*bil) {
            Json body = {{"table", parse_json(read_input(table_file))}, {"slope", slope}};
            if (trace_from.empty()) {
                write_output(out, billiard_request(body).dump(2) + "\n");
            } else {
                auto comma = trace_from.find(',');
                if (comma == std::string::npos) throw Error(ErrorCode::Parse, "--trace must be x,y");
                BilliardTable t = table_from_json(body.at("table"));
                auto ev = trace(t, Rational::parse(trace_from.substr(0, comma)),
                                Rational::parse(trace_from.substr(comma + 1)), Rational::parse(slope), events);
                write_output(out, Json{{"events", events_json(ev)}}.dump(2) + "\n");
            }
        } else if (*serve) {
            cfg.cache_dir = cache_dir;
            Service svc(cfg);
            g_service = &svc;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            svc.run([&](int port) {
                std::cerr << "listening on " << cfg.host << ":" << port << "\n";
            });
            g_service = nullptr;
        }
    } catch (const Error& e) {
        std::cout << error_json(e).dump(2) << "\n";
        return exit_code(e);
    }
    return 0;
}
