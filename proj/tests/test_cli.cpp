#include "doctest.h"

#include "cli.hpp"
#include "regimekit/json_io.hpp"
#include "regimekit/timeseries.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace regimekit;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = REGIMEKIT_FIXTURES;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("regimekit_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

const std::string kMonthly = kFixtures + "/btc_mpu_monthly.csv";

}  // namespace

TEST_CASE("version, help and usage errors") {
    auto r = run({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find("1.0.0") != std::string::npos);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
    CHECK(run({"describe"}).code == 2);
    CHECK(run({"describe", "--input", kMonthly, "--format", "xml"}).code == 2);
}

TEST_CASE("sha256 of a known vector") {
    const auto dir = scratch("sha");
    std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
    CHECK(cli::sha256_hex(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("describe") {
    const auto dir = scratch("describe");
    auto r = run({"describe", "--input", kMonthly, "--returns", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Panel B: returns") != std::string::npos);
    CHECK(r.out.find("| Count | 157 | 157 |") != std::string::npos);
    CHECK(r.out.find("| Count | 158 | 158 |") != std::string::npos);
    CHECK(slurp(dir / "describe.md") == r.out);

    const Json manifest = Json::parse(slurp(dir / "run.manifest.json"));
    CHECK(manifest["tool"] == "regimekit");
    CHECK(manifest["version"] == cli::kVersion);
    CHECK(manifest["command"] == "describe");
    CHECK(manifest["flags"]["seed"] == "42");
    CHECK(manifest["flags"]["returns"] == "true");
    REQUIRE(manifest["inputs"].size() == 1);
    CHECK(manifest["inputs"][0]["sha256"] == cli::sha256_hex(kMonthly));
    CHECK(manifest["outputs"] == Json::array({"describe.md"}));

    const auto jdir = scratch("describe_json");
    REQUIRE(run({"describe", "--input", kMonthly, "--format", "json", "--out", jdir.string()}).code == 0);
    const Json doc = Json::parse(slurp(jdir / "describe.json"));
    for (const auto& col : doc["panels"][0]["columns"]) {
        for (const char* key : {"mean", "median", "std_dev", "kurtosis", "skewness", "range", "minimum", "maximum", "count"})
            CHECK(col.contains(key));
        CHECK(col["count"] == 158);
    }

    const auto one = scratch("one_row");
    std::ofstream(one / "one.csv") << "date,x\n2020-01-01,1\n";
    r = run({"describe", "--input", (one / "one.csv").string(), "--out", one.string()});
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("fixture lookup through the environment") {
    const auto dir = scratch("envlookup");
    const auto r = run({"describe", "--input", "btc_monthly.csv", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("| Count | 158 |") != std::string::npos);
}

TEST_CASE("unitroot") {
    const auto dir = scratch("unitroot");
    auto r = run({"unitroot", "--input", kMonthly, "--tests", "adf,pp,kpss", "--forms", "level,log,return", "--format",
                  "csv", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto rows = lines(slurp(dir / "unitroot.csv"));
    CHECK(rows.size() == 1 + 2 * 3 * 3);

    const auto md = scratch("unitroot_md");
    r = run({"unitroot", "--input", kMonthly, "--tests", "adf,pp,kpss", "--forms", "level,log,return", "--out",
             md.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("| BTC | ADF | PP | KPSS |") != std::string::npos);
    CHECK(r.out.find("| MPU | ADF | PP | KPSS |") != std::string::npos);
    for (const char* form : {"| level |", "| log |", "| return |"}) CHECK(r.out.find(form) != std::string::npos);

    const auto rw = scratch("unitroot_rw");
    r = run({"unitroot", "--input", kFixtures + "/random_walks.csv", "--tests", "adf", "--forms", "level", "--format",
             "csv", "--out", rw.string()});
    REQUIRE(r.code == 0);
    for (const auto& line : lines(slurp(rw / "unitroot.csv"))) {
        if (line.rfind("column", 0) == 0) continue;
        CHECK(split(line, ',').back() == "fail-to-reject");
    }

    r = run({"unitroot", "--input", kMonthly, "--tests", "adf,zivot", "--out", rw.string()});
    CHECK(r.code == 2);
}

TEST_CASE("lagselect and johansen") {
    const auto dir = scratch("lagselect");
    auto r = run({"lagselect", "--input", kMonthly, "--max-lag", "8", "--format", "csv", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto rows = lines(slurp(dir / "lagselect.csv"));
    REQUIRE(rows.size() == 10);
    REQUIRE(rows[0] == "lag,log_likelihood,fpe,aic,sc,hq,selected");
    for (const std::string key : {"fpe", "aic", "sc", "hq"}) {
        int stars = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto cells = split(rows[i], ',');
            if (cells.size() < 7) continue;
            for (const auto& s : split(cells[6], ';')) stars += s == key;
        }
        CAPTURE(key);
        CHECK(stars == 1);
    }
    r = run({"lagselect", "--input", kMonthly, "--max-lag", "8", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '*') == 5);  // four minima plus the footnote

    r = run({"lagselect", "--input", kMonthly, "--max-lag", "200", "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("too large") != std::string::npos);

    const auto jdir = scratch("johansen");
    r = run({"johansen", "--input", kFixtures + "/random_walks.csv", "--format", "json", "--out", jdir.string()});
    REQUIRE(r.code == 0);
    const Json doc = Json::parse(slurp(jdir / "johansen.json"));
    CHECK(doc["result"]["selected_rank"] == 0);
    CHECK(doc["result"]["ranks"][0]["trace_critical"]["0.05"] == 17.95);
}

TEST_CASE("fit-msvar, irf and determinism") {
    const auto a = scratch("fit_a");
    const auto b = scratch("fit_b");
    const std::vector<std::string> args = {"fit-msvar", "--input", kMonthly, "--regimes", "2", "--lags", "1",
                                           "--switch", "mean", "--restarts", "20", "--seed", "42"};
    auto with_out = [&](const fs::path& d) {
        auto v = args;
        v.push_back("--out");
        v.push_back(d.string());
        return v;
    };
    const auto ra = run(with_out(a));
    REQUIRE(ra.code == 0);
    const auto rb = run(with_out(b));
    REQUIRE(rb.code == 0);
    CHECK(ra.out == rb.out);
    for (const char* f : {"model.json", "probabilities.csv", "smoothed_probabilities.csv", "coefficients.md",
                          "transitions.md"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(lines(slurp(a / "probabilities.csv")).front() == "date,prob_regime_1,prob_regime_2");
    CHECK(lines(slurp(a / "probabilities.csv")).size() == 1 + 156);
    const Json model = Json::parse(slurp(a / "model.json"));
    CHECK(model["format"] == "regimekit.msvar");
    CHECK(model["model"]["spec"]["label"] == "MSMH(2)-VAR(1)");

    CHECK(run({"fit-msvar", "--input", kMonthly, "--regimes", "1", "--out", a.string()}).code == 2);

    // impulse responses from the saved model
    const auto i1 = scratch("irf");
    auto r = run({"irf", "--model", (a / "model.json").string(), "--horizon", "12", "--regime", "1", "--out", i1.string()});
    REQUIRE(r.code == 0);
    const auto csv = lines(slurp(i1 / "irf_regime_1.csv"));
    REQUIRE(csv.size() == 14);
    CHECK(csv[0] == "horizon,response_BTC_to_BTC,response_BTC_to_MPU,response_MPU_to_BTC,response_MPU_to_MPU");
    CHECK(csv[1] == "0,1,0,0,1");

    const auto i2 = scratch("irf_all");
    REQUIRE(run({"irf", "--model", (a / "model.json").string(), "--horizon", "4", "--out", i2.string()}).code == 0);
    for (const char* f : {"irf_regime_1.csv", "irf_regime_2.csv"}) {
        const auto row1 = split(lines(slurp(i2 / f))[2], ',');
        CAPTURE(f);
        CHECK(std::stod(row1[2]) < 0.0);  // BTC response to MPU at horizon 1
    }

    const auto i0 = scratch("irf_zero");
    REQUIRE(run({"irf", "--model", (a / "model.json").string(), "--horizon", "0", "--regime", "2", "--out", i0.string()})
                .code == 0);
    CHECK(lines(slurp(i0 / "irf_regime_2.csv")) ==
          std::vector<std::string>{"horizon,response_BTC_to_BTC,response_BTC_to_MPU,response_MPU_to_BTC,response_MPU_to_MPU",
                                   "0,1,0,0,1"});
    CHECK(run({"irf", "--model", (a / "model.json").string(), "--regime", "3", "--out", i0.string()}).code == 2);
}

TEST_CASE("event study") {
    const auto dir = scratch("event");
    auto r = run({"event-study", "--prices", kFixtures + "/btc_hourly_fomc.csv", "--calendar",
                  kFixtures + "/fomc_calendar.csv", "--window", "1", "--lags", "1", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("| return | rate_change(-1) |") != std::string::npos);
    CHECK(r.out.find("(Std. Error)") != std::string::npos);
    CHECK(lines(slurp(dir / "event_returns.csv")).size() == 56);
    CHECK(fs::exists(dir / "event_irf.csv"));

    // an announcement outside the price range
    const auto out = scratch("event_outside");
    std::ofstream(out / "cal.csv") << "datetime,actual,forecast,previous\n2017-02-01 15:00:00,0.0075,0.0075,0.0075\n"
                                      "2030-01-01 15:00:00,0.01,0.01,0.01\n";
    r = run({"event-study", "--prices", kFixtures + "/btc_hourly_fomc.csv", "--calendar", (out / "cal.csv").string(),
             "--out", out.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("2030-01-01 15:00:00") != std::string::npos);

    // flat prices: every event return is zero
    const auto flat = scratch("event_flat");
    const auto cal = load_event_calendar(kFixtures + "/fomc_calendar.csv");
    std::string prices = "date,BTC\n";
    for (const auto& ev : cal.rows())
        for (int h = -2; h <= 2; ++h) prices += format_instant(ev.datetime + std::chrono::hours{h}) + ",100\n";
    std::ofstream(flat / "flat.csv") << prices;
    run({"event-study", "--prices", (flat / "flat.csv").string(), "--calendar", kFixtures + "/fomc_calendar.csv",
         "--window", "1", "--out", flat.string()});
    const auto ev = lines(slurp(flat / "event_returns.csv"));
    REQUIRE(ev.size() == 56);
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(split(ev[i], ',').back() == "0");
}
