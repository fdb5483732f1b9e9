#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "itm/json_io.hpp"

namespace itm {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 binds an ephemeral port
    std::string cache_dir;  // empty: default_cache_dir()
    int workers = 1;
    long classify_budget = -1;  // -1: per-map default 4Qr
    long scan_budget = 500;
    int sync_cells = 64 * 64;  // larger tiles run as background jobs
};

// Throws RangeViolation.
void validate_config(const ServiceConfig& c);
// ITMLAB_CACHE_DIR if set, else ".itmlab-cache".
std::string default_cache_dir();
// 400 validation, 422 infeasible, 503 budget.
int http_status(const Error& e);

using Query = std::map<std::string, std::string>;

// Request bodies shared by the CLI and the HTTP API. A bare map is accepted where a
// {"map": ...} object is.
// {"map", "budget"?, "report"?, "iterates"?}; BudgetExhausted if X is not reached.
Json classify_request(const Json& body, long default_budget);
// {"map", "eps", "family"? ("none" | "bt"), "max_steps"?}
Json stabilize_request(const Json& body);
// {"table", "slope"} -> {"map", "return"}
Json billiard_request(const Json& body);
// x0, y0, x1, y1, res, budget; missing keys take the full square and the defaults.
ScanRequest tile_request(const Query& q, long default_budget, int workers);

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

class Service {
public:
    explicit Service(ServiceConfig cfg);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    const ServiceConfig& config() const;

    // Transport-independent dispatch; never throws.
    Response handle(const std::string& method, const std::string& path, const Query& query, const std::string& body);

    // Cache-backed scan under the single-writer/multi-reader lock.
    ScanResult tile(const ScanRequest& req, bool* hit = nullptr);

    // Blocks until stop(); on_bound receives the bound port.
    void run(const std::function<void(int)>& on_bound = {});
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace itm
