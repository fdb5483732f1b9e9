#include "itm/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <semaphore>
#include <shared_mutex>
#include <thread>
#include <variant>

#include "itm/attractor.hpp"
#include "itm/render.hpp"

namespace itm {

void validate_config(const ServiceConfig& c)
{
    std::vector<std::string> bad;
    if (c.workers < 1) bad.push_back("workers must be >= 1");
    if (c.port < 0 || c.port > 65535) bad.push_back("port must be in [0, 65535]");
    if (c.classify_budget == 0 || c.classify_budget < -1) bad.push_back("classify budget must be >= 1 or -1");
    if (c.scan_budget < 1) bad.push_back("scan budget must be >= 1");
    if (c.sync_cells < 0) bad.push_back("sync cell threshold must be >= 0");
    if (!bad.empty()) throw Error(ErrorCode::RangeViolation, "invalid service configuration", bad);
}

std::string default_cache_dir()
{
    const char* env = std::getenv("ITMLAB_CACHE_DIR");
    return env && *env ? env : ".itmlab-cache";
}

int http_status(const Error& e)
{
    switch (error_class(e.code())) {
    case ErrorClass::Infeasible: return 422;
    case ErrorClass::Budget: return 503;
    default: return 400;
    }
}

namespace {

const Json& map_part(const Json& body)
{
    if (!body.is_object()) throw Error(ErrorCode::Parse, "request body must be a JSON object");
    if (body.contains("beta")) return body;
    if (!body.contains("map")) throw Error(ErrorCode::Parse, "request: missing field \"map\"");
    return body.at("map");
}

long long_field(const Json& body, const char* key, long dflt)
{
    if (!body.is_object() || !body.contains(key)) return dflt;
    const Json& v = body.at(key);
    if (!v.is_number_integer()) throw Error(ErrorCode::Parse, std::string(key) + " must be an integer");
    return v.get<long>();
}

bool bool_field(const Json& body, const char* key)
{
    if (!body.is_object() || !body.contains(key)) return false;
    const Json& v = body.at(key);
    if (!v.is_boolean()) throw Error(ErrorCode::Parse, std::string(key) + " must be a boolean");
    return v.get<bool>();
}

long parse_long(const std::string& s, const std::string& what)
{
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorCode::Parse, what + " must be an integer");
    return v;
}

Json not_found(const std::string& what)
{
    return {{"error", {{"code", "NotFound"}, {"class", "validation"}, {"message", what}, {"details", Json::array()}}}};
}

}  // namespace

Json classify_request(const Json& body, long default_budget)
{
    ITMap m = checked_map_from_json(map_part(body));
    long budget = long_field(body, "budget", default_budget);
    if (budget == 0 || budget < -1) throw Error(ErrorCode::RangeViolation, "budget must be >= 1");
    long iterates = long_field(body, "iterates", 0);
    if (iterates < 0 || iterates > 4096) throw Error(ErrorCode::RangeViolation, "iterates must be in [0, 4096]");
    Json j = bool_field(body, "report") ? report_json(m, budget) : classify_json(m, budget);
    if (j.at("status") != "finite")
        throw Error(ErrorCode::BudgetExhausted, "attractor not reached within budget",
                    {"budget_used=" + std::to_string(j.at("budget_used").get<long>())});
    if (iterates > 0) {
        Json xs = Json::array();
        IntervalSet x = IntervalSet::unit();
        xs.push_back(interval_set_json(x));
        for (long n = 0; n < iterates; ++n) {
            x = image(m, x);
            xs.push_back(interval_set_json(x));
        }
        j["iterates"] = std::move(xs);
    }
    return j;
}

Json stabilize_request(const Json& body)
{
    ITMap m = checked_map_from_json(map_part(body));
    if (!body.contains("eps")) throw Error(ErrorCode::Parse, "request: missing field \"eps\"");
    Rational eps = rational_from(body.at("eps"), "eps");
    StabilizeOptions opt;
    if (body.contains("family")) {
        const Json& f = body.at("family");
        if (f == "bt")
            opt.family = FamilyConstraint::BruinTroubetzkoy;
        else if (f != "none")
            throw Error(ErrorCode::Parse, "family must be \"none\" or \"bt\"");
    }
    long steps = long_field(body, "max_steps", opt.max_steps);
    if (steps < 1 || steps > 1000) throw Error(ErrorCode::RangeViolation, "max_steps must be in [1, 1000]");
    opt.max_steps = int(steps);
    return stabilization_json(stabilize(m, eps, opt));
}

Json billiard_request(const Json& body)
{
    if (!body.is_object() || !body.contains("table") || !body.contains("slope"))
        throw Error(ErrorCode::Parse, "request needs \"table\" and \"slope\"");
    BilliardTable t = table_from_json(body.at("table"));
    Rational slope = rational_from(body.at("slope"), "slope");
    ITMap m = first_return_itm(t, slope);
    return {{"map", map_json(m)}, {"return", billiard_return_json(first_return(t, slope))}};
}

ScanRequest tile_request(const Query& q, long default_budget, int workers)
{
    ScanRequest req;
    auto rat = [&](const char* key, Rational& out) {
        if (auto it = q.find(key); it != q.end()) out = Rational::parse(it->second);
    };
    rat("x0", req.region.x0);
    rat("y0", req.region.y0);
    rat("x1", req.region.x1);
    rat("y1", req.region.y1);
    if (auto it = q.find("res"); it != q.end()) {
        long r = parse_long(it->second, "res");
        if (r < 2 || r > 4096) throw Error(ErrorCode::RangeViolation, "res must be in [2, 4096]");
        req.res = int(r);
    }
    req.budget = default_budget;
    if (auto it = q.find("budget"); it != q.end()) req.budget = parse_long(it->second, "budget");
    if (req.budget < 1) throw Error(ErrorCode::RangeViolation, "budget must be >= 1");
    req.workers = workers;
    return req;
}

struct Service::Impl {
    ServiceConfig cfg;
    std::shared_mutex cache_mu;
    std::counting_semaphore<> compute;

    struct Job {
        std::string status = "running";  // running | done | failed
        ScanRequest req;
        Json error;
        int error_status = 0;
    };
    std::mutex jobs_mu;
    std::map<std::string, Job> jobs;
    std::vector<std::thread> threads;

    std::mutex server_mu;
    httplib::Server* server = nullptr;

    explicit Impl(ServiceConfig c) : cfg(std::move(c)), compute(cfg.workers) {}

    std::filesystem::path entry(const ScanRequest& req) const
    {
        return std::filesystem::path(cfg.cache_dir) / scan_cache_name(req.region, req.res, req.budget);
    }

    std::optional<ScanResult> lookup(const ScanRequest& req)
    {
        std::shared_lock lk(cache_mu);
        auto path = entry(req);
        if (!std::filesystem::exists(path)) return std::nullopt;
        try {
            return read_scan_file(path.string());
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    ScanResult tile(const ScanRequest& req, bool* hit)
    {
        if (hit) *hit = false;
        if (auto sr = lookup(req)) {
            if (hit) *hit = true;
            return *sr;
        }
        compute.acquire();
        ScanResult sr;
        try {
            sr = scan(req);
        } catch (...) {
            compute.release();
            throw;
        }
        compute.release();
        std::unique_lock lk(cache_mu);
        std::filesystem::create_directories(cfg.cache_dir);
        write_scan_file(entry(req).string(), sr);
        return sr;
    }

    template <class F>
    Json computed(F&& f)
    {
        compute.acquire();
        try {
            Json j = f();
            compute.release();
            return j;
        } catch (...) {
            compute.release();
            throw;
        }
    }

    std::string job_id(const ScanRequest& req) const
    {
        std::string name = scan_cache_name(req.region, req.res, req.budget);
        return name.substr(0, name.size() - 4);
    }

    Response start_job(const ScanRequest& req)
    {
        std::string id = job_id(req);
        std::lock_guard lk(jobs_mu);
        auto [it, fresh] = jobs.try_emplace(id);
        if (fresh || it->second.status == "failed") {
            it->second = Job{};
            it->second.req = req;
            threads.emplace_back([this, id, req] {
                Job done;
                done.req = req;
                try {
                    tile(req, nullptr);
                    done.status = "done";
                } catch (const Error& e) {
                    done.status = "failed";
                    done.error = error_json(e);
                    done.error_status = http_status(e);
                } catch (const std::exception& e) {
                    done.status = "failed";
                    done.error = error_json(Error(ErrorCode::RangeViolation, e.what()));
                    done.error_status = 500;
                }
                std::lock_guard lk2(jobs_mu);
                jobs[id] = std::move(done);
            });
        }
        Json j = {{"job", id}, {"status", it->second.status}, {"poll", "/api/v1/jobs/" + id}};
        return {202, "application/json", j.dump()};
    }

    Response job_status(const std::string& id)
    {
        Job job;
        {
            std::lock_guard lk(jobs_mu);
            auto it = jobs.find(id);
            if (it == jobs.end()) return {404, "application/json", not_found("no job " + id).dump()};
            job = it->second;
        }
        Json j = {{"job", id}, {"status", job.status}};
        if (job.status == "done") {
            auto sr = lookup(job.req);
            if (!sr) return {500, "application/json", not_found("cache entry for job " + id + " vanished").dump()};
            j["result"] = scan_json(*sr);
        } else if (job.status == "failed") {
            j["error"] = job.error.contains("error") ? job.error.at("error") : job.error;
        }
        return {200, "application/json", j.dump()};
    }

    // Small tiles are computed inline; large uncached ones become jobs.
    std::variant<ScanResult, Response> tile_or_job(const ScanRequest& req)
    {
        long cells = long(req.res) * long(req.res);
        if (cells > cfg.sync_cells) {
            if (auto sr = lookup(req)) return *sr;
            return start_job(req);
        }
        return tile(req, nullptr);
    }

    Response dispatch(const std::string& method, const std::string& path, const Query& q, const std::string& body)
    {
        auto json_ok = [](const Json& j) { return Response{200, "application/json", j.dump()}; };
        auto expect = [&](const char* m) {
            if (method != m)
                throw Response{405, "application/json", not_found(method + " not allowed on " + path).dump()};
        };
        const std::string api = "/api/v1/";
        if (path.rfind(api, 0) != 0) return {404, "application/json", not_found("no route " + path).dump()};
        std::string route = path.substr(api.size());
        if (route == "health") {
            expect("GET");
            return json_ok({{"status", "ok"},
                            {"version", kCodeVersion},
                            {"workers", cfg.workers},
                            {"png", png_available()}});
        }
        if (route == "classify") {
            expect("POST");
            Json req = parse_json(body);
            return json_ok(computed([&] { return classify_request(req, cfg.classify_budget); }));
        }
        if (route == "stabilize") {
            expect("POST");
            Json req = parse_json(body);
            return json_ok(computed([&] { return stabilize_request(req); }));
        }
        if (route == "billiard/return") {
            expect("POST");
            Json req = parse_json(body);
            return json_ok(computed([&] { return billiard_request(req); }));
        }
        if (route == "bt/tile") {
            expect("GET");
            auto r = tile_or_job(tile_request(q, cfg.scan_budget, cfg.workers));
            if (auto* resp = std::get_if<Response>(&r)) return *resp;
            return json_ok(scan_json(std::get<ScanResult>(r)));
        }
        if (route == "bt/image") {
            expect("GET");
            std::string format = q.count("format") ? q.at("format") : "ppm";
            if (format != "ppm" && format != "png") throw Error(ErrorCode::Parse, "format must be ppm or png");
            if (format == "png" && !png_available()) throw Error(ErrorCode::RangeViolation, "built without PNG support");
            auto r = tile_or_job(tile_request(q, cfg.scan_budget, cfg.workers));
            if (auto* resp = std::get_if<Response>(&r)) return *resp;
            Image img = render_scan(std::get<ScanResult>(r));
            if (format == "png") return {200, "image/png", encode_png(img)};
            return {200, "image/x-portable-pixmap", encode_ppm(img)};
        }
        if (route.rfind("jobs/", 0) == 0) {
            expect("GET");
            return job_status(route.substr(5));
        }
        return {404, "application/json", not_found("no route " + path).dump()};
    }
};

Service::Service(ServiceConfig cfg)
{
    validate_config(cfg);
    if (cfg.cache_dir.empty()) cfg.cache_dir = default_cache_dir();
    impl_ = std::make_unique<Impl>(std::move(cfg));
}

Service::~Service()
{
    stop();
    std::vector<std::thread> ts;
    {
        std::lock_guard lk(impl_->jobs_mu);
        ts.swap(impl_->threads);
    }
    for (auto& t : ts) t.join();
}

const ServiceConfig& Service::config() const { return impl_->cfg; }

ScanResult Service::tile(const ScanRequest& req, bool* hit) { return impl_->tile(req, hit); }

Response Service::handle(const std::string& method, const std::string& path, const Query& query,
                         const std::string& body)
{
    try {
        return impl_->dispatch(method, path, query, body);
    } catch (const Response& r) {
        return r;
    } catch (const Error& e) {
        return {http_status(e), "application/json", error_json(e).dump()};
    } catch (const std::exception& e) {
        Json j = {{"error", {{"code", "Internal"}, {"class", "internal"}, {"message", e.what()}, {"details", Json::array()}}}};
        return {500, "application/json", j.dump()};
    }
}

void Service::run(const std::function<void(int)>& on_bound)
{
    httplib::Server svr;
    int pool = impl_->cfg.workers + 4;
    svr.new_task_queue = [pool] { return new httplib::ThreadPool(std::size_t(pool)); };
    auto serve = [this](const httplib::Request& req, httplib::Response& res) {
        Query q;
        for (const auto& [k, v] : req.params) q.emplace(k, v);
        Response r = handle(req.method, req.path, q, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    svr.Get(".*", serve);
    svr.Post(".*", serve);
    svr.Put(".*", serve);
    svr.Delete(".*", serve);
    int port = impl_->cfg.port;
    if (port == 0) {
        port = svr.bind_to_any_port(impl_->cfg.host);
    } else if (!svr.bind_to_port(impl_->cfg.host, port)) {
        port = -1;
    }
    if (port < 0) throw Error(ErrorCode::RangeViolation, "cannot bind " + impl_->cfg.host + ":" + std::to_string(impl_->cfg.port));
    {
        std::lock_guard lk(impl_->server_mu);
        impl_->server = &svr;
    }
    if (on_bound) on_bound(port);
    svr.listen_after_bind();
    std::lock_guard lk(impl_->server_mu);
    impl_->server = nullptr;
}

void Service::stop()
{
    std::lock_guard lk(impl_->server_mu);
    if (impl_->server) impl_->server->stop();
}

}  // namespace itm
