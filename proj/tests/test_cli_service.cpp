#include <doctest.h>

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "itm/render.hpp"
#include "itm/service.hpp"

// After Eigen: <resolv.h> defines _res.
#include <httplib.h>

using namespace itm;
namespace fs = std::filesystem;

namespace {

const char* kFig3 = R"({"beta":["0","1/3","2/3","1"],"gamma":["1/3","1/7","-1/2"]})";
const char* kIet3 = R"({"beta":["0","1/4","1/2","1"],"gamma":["3/4","1/4","-1/2"]})";
const char* kTable = R"({"mirrors":[{"x":"1/3","h":"1/3","reflect":"left"},{"x":"2/3","h":"2/3","reflect":"left"}]})";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
    {
        path = fs::temp_directory_path() / ("itm-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
};

struct Run {
    int code = -1;
    std::string out;
};

Run run_cli(const std::string& args)
{
    const char* bin = std::getenv("ITMLAB_BIN");
    REQUIRE(bin != nullptr);
    Run r;
    FILE* p = ::popen((std::string(bin) + " " + args + " 2>/dev/null").c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int st = ::pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

Json body_of(const Response& r) { return Json::parse(r.body); }

ServiceConfig config_in(const TempDir& d)
{
    ServiceConfig c;
    c.port = 0;
    c.cache_dir = (d.path / "cache").string();
    return c;
}

}  // namespace

TEST_CASE("cli classify, report and stabilize")
{
    TempDir d("cli");
    std::string fig3 = d.write("fig3.json", kFig3);
    Run r = run_cli("classify --map " + fig3);
    REQUIRE(r.code == 0);
    Json j = Json::parse(r.out);
    CHECK(j["status"] == "finite");
    CHECK(j["n"] == 3);
    CHECK(j["stable"] == true);
    CHECK(j["X"].size() == 2);

    r = run_cli("classify --map " + fig3 + " --iterates 3");
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["iterates"].size() == 4);

    r = run_cli("report --map " + fig3);
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["discontinuities"].size() == 4);

    r = run_cli("classify --map " + fig3 + " --budget 2");
    CHECK(r.code == 3);
    CHECK(Json::parse(r.out)["error"]["class"] == "budget");

    std::string bad = d.write("bad.json", R"({"beta":["0","1/2","1"],"gamma":["1/2","1/2"]})");
    r = run_cli("classify --map " + bad);
    CHECK(r.code == 2);
    CHECK(Json::parse(r.out)["error"]["code"] == "InvalidMap");
    CHECK(run_cli("classify").code == 2);
    CHECK(run_cli("frobnicate").code == 2);

    std::string iet = d.write("iet.json", kIet3);
    std::string out = (d.path / "stab.json").string();
    r = run_cli("--out " + out + " stabilize --map " + iet + " --eps 1/50");
    REQUIRE(r.code == 0);
    Json s = Json::parse(std::ifstream(out));
    std::string stabilized = d.write("stabilized.json", s["map"].dump());
    r = run_cli("classify --map " + stabilized);
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["stable"] == true);
}

TEST_CASE("cli scan, render and billiard")
{
    TempDir d("scan");
    std::string cache = (d.path / "cache").string();
    std::string csv = (d.path / "scan.csv").string();
    Run r = run_cli("--out " + csv + " scan --res 8 --budget 200 --cache-dir " + cache);
    REQUIRE(r.code == 0);
    Json j = Json::parse(r.out);
    CHECK(j["cache_hit"] == false);
    CHECK(j["cells"] == 36);
    CHECK(j["undetermined"] == 0);
    CHECK(read_scan_file(csv).cells.size() == 36);
    r = run_cli("scan --res 8 --budget 200 --cache-dir " + cache);
    CHECK(Json::parse(r.out)["cache_hit"] == true);
    CHECK(run_cli("scan --res 8 --budget 1 --cache-dir " + cache).code == 3);
    CHECK(run_cli("scan --res 1 --cache-dir " + cache).code == 2);

    std::string ppm = (d.path / "scan.ppm").string();
    REQUIRE(run_cli("--out " + ppm + " render --res 8 --budget 200 --cache-dir " + cache).code == 0);
    std::ifstream in(ppm, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    CHECK(bytes.rfind("P6\n8 8\n255\n", 0) == 0);

    std::string table = d.write("table.json", kTable);
    r = run_cli("billiard --table " + table + " --slope 1/3");
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["map"]["gamma"].size() == 4);
    r = run_cli("billiard --table " + table + " --slope 1/3 --trace 1/7,1/11 --events 10");
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["events"].size() == 10);
    CHECK(run_cli("billiard --table " + table + " --slope -1").code == 2);
}

TEST_CASE("service configuration and error classes")
{
    ServiceConfig c;
    CHECK_NOTHROW(validate_config(c));
    c.workers = 0;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = {};
    c.port = 70000;
    CHECK_THROWS_AS(validate_config(c), Error);
    CHECK(http_status(Error(ErrorCode::InvalidMap, "x")) == 400);
    CHECK(http_status(Error(ErrorCode::Infeasible, "x")) == 422);
    CHECK(http_status(Error(ErrorCode::BudgetExhausted, "x")) == 503);
    ::setenv("ITMLAB_CACHE_DIR", "/tmp/itm-elsewhere", 1);
    CHECK(default_cache_dir() == "/tmp/itm-elsewhere");
    ::unsetenv("ITMLAB_CACHE_DIR");
    CHECK(default_cache_dir() == ".itmlab-cache");

    ScanRequest req = tile_request({{"x0", "1/2"}, {"res", "16"}}, 300, 2);
    CHECK(req.region.x0 == Rational(1, 2));
    CHECK(req.region.x1 == Rational(1));
    CHECK(req.res == 16);
    CHECK(req.budget == 300);
    CHECK(req.workers == 2);
    CHECK_THROWS_AS(tile_request({{"res", "1"}}, 300, 1), Error);
    CHECK_THROWS_AS(tile_request({{"x0", "0.5"}}, 300, 1), Error);
}

TEST_CASE("service routes")
{
    TempDir d("svc");
    Service svc(config_in(d));

    Response r = svc.handle("GET", "/api/v1/health", {}, "");
    CHECK(r.status == 200);
    CHECK(body_of(r)["status"] == "ok");
    CHECK(svc.handle("POST", "/api/v1/health", {}, "").status == 405);
    CHECK(svc.handle("GET", "/api/v1/nothing", {}, "").status == 404);
    CHECK(svc.handle("GET", "/elsewhere", {}, "").status == 404);

    r = svc.handle("POST", "/api/v1/classify", {}, std::string(R"({"map":)") + kFig3 + "}");
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["stable"] == true);
    CHECK(body_of(r)["n"] == 3);
    r = svc.handle("POST", "/api/v1/classify", {}, kFig3);
    CHECK(r.status == 200);
    r = svc.handle("POST", "/api/v1/classify", {}, std::string(R"({"budget":2,"map":)") + kFig3 + "}");
    CHECK(r.status == 503);
    CHECK(body_of(r)["error"]["code"] == "BudgetExhausted");
    r = svc.handle("POST", "/api/v1/classify", {}, "{not json");
    CHECK(r.status == 400);
    CHECK(body_of(r)["error"]["code"] == "ParseError");
    r = svc.handle("POST", "/api/v1/classify", {}, R"({"beta":["0","1"],"gamma":[0.5]})");
    CHECK(r.status == 400);

    r = svc.handle("POST", "/api/v1/stabilize", {}, std::string(R"({"eps":"1/50","map":)") + kIet3 + "}");
    REQUIRE(r.status == 200);
    Json st = body_of(r);
    CHECK(st["trace"]["steps"].size() >= 1);
    r = svc.handle("POST", "/api/v1/classify", {}, st["map"].dump());
    CHECK(body_of(r)["stable"] == true);
    CHECK(svc.handle("POST", "/api/v1/stabilize", {}, kIet3).status == 400);

    r = svc.handle("POST", "/api/v1/billiard/return", {}, std::string(R"({"slope":"1/3","table":)") + kTable + "}");
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["map"]["beta"].size() == 5);
    CHECK(body_of(r).contains("return"));

    Query tile{{"res", "8"}, {"budget", "200"}};
    Response t1 = svc.handle("GET", "/api/v1/bt/tile", tile, "");
    REQUIRE(t1.status == 200);
    CHECK(body_of(t1)["cells"].size() == 36);
    Response t2 = svc.handle("GET", "/api/v1/bt/tile", tile, "");
    CHECK(t2.body == t1.body);
    bool hit = false;
    svc.tile(tile_request(tile, 200, 1), &hit);
    CHECK(hit);

    Query img = tile;
    img["format"] = "ppm";
    r = svc.handle("GET", "/api/v1/bt/image", img, "");
    CHECK(r.status == 200);
    CHECK(r.content_type == "image/x-portable-pixmap");
    CHECK(r.body.rfind("P6\n8 8\n", 0) == 0);
    img["format"] = "gif";
    CHECK(svc.handle("GET", "/api/v1/bt/image", img, "").status == 400);
    if (png_available()) {
        img["format"] = "png";
        r = svc.handle("GET", "/api/v1/bt/image", img, "");
        CHECK(r.status == 200);
        CHECK(r.content_type == "image/png");
    }
    CHECK(svc.handle("GET", "/api/v1/jobs/bt-nope", {}, "").status == 404);
}

TEST_CASE("large uncached tiles run as jobs")
{
    TempDir d("jobs");
    ServiceConfig c = config_in(d);
    c.sync_cells = 10;
    Service svc(c);
    Query tile{{"res", "8"}, {"budget", "200"}};
    Response r = svc.handle("GET", "/api/v1/bt/tile", tile, "");
    REQUIRE(r.status == 202);
    Json j = body_of(r);
    std::string poll = j["poll"];
    CHECK(poll == "/api/v1/jobs/" + j["job"].get<std::string>());
    Json status;
    for (int k = 0; k < 600; ++k) {
        status = body_of(svc.handle("GET", poll, {}, ""));
        if (status["status"] != "running") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    REQUIRE(status["status"] == "done");
    CHECK(status["result"]["cells"].size() == 36);
    Response again = svc.handle("GET", "/api/v1/bt/tile", tile, "");
    CHECK(again.status == 200);
    CHECK(body_of(again) == status["result"]);
}

TEST_CASE("HTTP round trip on an ephemeral port")
{
    TempDir d("http");
    Service svc(config_in(d));
    std::promise<int> bound;
    std::thread server([&] { svc.run([&](int port) { bound.set_value(port); }); });
    auto fut = bound.get_future();
    REQUIRE(fut.wait_for(std::chrono::seconds(10)) == std::future_status::ready);
    int port = fut.get();
    CHECK(port > 0);
    {
        httplib::Client cli("127.0.0.1", port);
        auto h = cli.Get("/api/v1/health");
        REQUIRE(h);
        CHECK(h->status == 200);
        CHECK(Json::parse(h->body)["status"] == "ok");
        auto c = cli.Post("/api/v1/classify", kFig3, "application/json");
        REQUIRE(c);
        CHECK(c->status == 200);
        CHECK(Json::parse(c->body)["stable"] == true);
        auto t = cli.Get("/api/v1/bt/tile?res=4&budget=100");
        REQUIRE(t);
        CHECK(t->status == 200);
        auto m = cli.Get("/api/v1/missing");
        REQUIRE(m);
        CHECK(m->status == 404);
    }
    svc.stop();
    server.join();
}
