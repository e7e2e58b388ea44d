#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

#include "carbex/scenario.hpp"

using namespace carbex;

namespace {

ScenarioConfig parse_str(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test");
}

const char* kMinimalSingle = R"(
[gbm]
mu = 0.02
sigma = 0.08
x0 = 100

[economy]
rho = 0.03
gamma = 4
calibrate = true
price = 1.825e10

[market]
firm = 1.0,1.825e10
)";

}  // namespace

TEST_CASE("calibrate_ell") {
    CHECK(calibrate_ell(1.825e10, 100.0, 4.0) == doctest::Approx(1.825e4).epsilon(1e-12));
    CHECK(calibrate_ell(7.0, 3.0, 2.0) == doctest::Approx(7.0 / 3.0).epsilon(1e-12));
    // Defining identity pi x0 = ell x0^gamma.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int i = 0; i < 50; ++i) {
        const double pi = u(rng), x0 = u(rng), gamma = 2.0 + u(rng);
        const double ell = calibrate_ell(pi, x0, gamma);
        CHECK(pi * x0 == doctest::Approx(ell * std::pow(x0, gamma)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(calibrate_ell(-1.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("config round trip") {
    const ScenarioConfig cfg = parse_str(kMinimalSingle);
    CHECK(cfg.gbm.mu == 0.02);
    CHECK(cfg.gbm.sigma == 0.08);
    CHECK(cfg.gbm.x0 == 100.0);
    CHECK(cfg.rho == 0.03);
    CHECK(cfg.calibrate);
    CHECK(cfg.price == 1.825e10);
    CHECK(cfg.kind == MarketKind::firm_list);
    REQUIRE(cfg.firm_list.size() == 1);
    CHECK(cfg.firm_list[0].pi == 1.825e10);
    // Runs and reproduces the monopoly threshold.
    const auto res = run_single(cfg);
    bool found = false;
    for (const auto& row : res.table.rows) {
        if (std::get<std::string>(row[2].v) == "x_hat") {
            found = true;
            CHECK(std::get<double>(row[4].v) == doctest::Approx(140.668).epsilon(1e-4));
        }
    }
    CHECK(found);
}

TEST_CASE("config errors carry line numbers") {
    try {
        parse_str("[gbm]\nmu = 0.02\nbogus = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("test:3") != std::string::npos);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_str("[nosuch]\n"), ConfigError);
    CHECK_THROWS_AS(parse_str("[gbm]\nmu == 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_str("[gbm]\nmu = abc\n"), ConfigError);
    // Two market kinds at once.
    CHECK_THROWS_AS(parse_str("[market]\nfirm = 0.5,1\nn = 3\n"), ConfigError);
}

TEST_CASE("rho equal to mu is rejected at run time") {
    std::string bad(kMinimalSingle);
    const auto pos = bad.find("rho = 0.03");
    bad.replace(pos, 10, "rho = 0.02");
    const ScenarioConfig cfg = parse_str(bad);
    try {
        run_single(cfg);
        FAIL("expected validation failure");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("rho > mu") != std::string::npos);
    }
}

TEST_CASE("fractions parse as division") {
    const ScenarioConfig cfg = parse_str(R"(
[duopoly]
lambda1 = 13/23
lambda2 = 10/23
pi1 = 1e10
pi2 = 2e10
regime = nash
)");
    CHECK(cfg.duopoly.lambda1 == doctest::Approx(13.0 / 23.0).epsilon(1e-15));
    CHECK(cfg.duopoly.lambda2 == doctest::Approx(10.0 / 23.0).epsilon(1e-15));
    CHECK_THROWS_AS(parse_str("[duopoly]\nlambda1 = 1/0\n"), ConfigError);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.0, 10) == "0");
    CHECK(format_number(1.0, 10) == "1");
    CHECK(format_number(-2.5, 10) == "-2.5");
    CHECK(format_number(0.125, 10) == "0.125");
    CHECK(format_number(1e-4, 10) == "0.0001");
    CHECK(format_number(9.9e-5, 10).find('e') != std::string::npos);
    CHECK(format_number(1e15, 10).find('e') != std::string::npos);
    CHECK(format_number(999999999999999.0, 10).find('e') == std::string::npos);
    // Round trip at 10 significant digits.
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double mag = std::pow(10.0, -8.0 + 26.0 * std::abs(u(rng)));
        const double v = u(rng) * mag;
        const std::string s = format_number(v, 10);
        const double back = std::strtod(s.c_str(), nullptr);
        CHECK(std::abs(back - v) <= 1e-9 * std::abs(v));
    }
}

TEST_CASE("csv output is deterministic") {
    ScenarioConfig cfg = preset_config("fig2");
    cfg.sweep_steps = 4;
    const auto res1 = run_figures(cfg);
    const auto res2 = run_figures(cfg);
    std::ostringstream a, b;
    write_csv(res1.table, a, cfg.precision);
    write_csv(res2.table, b, cfg.precision);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("\r") == std::string::npos);  // LF endings
}

TEST_CASE("presets are self-contained") {
    for (const auto& name : preset_names()) CHECK_NOTHROW(preset_config(name));
    CHECK_THROWS_AS(preset_config("nope"), ConfigError);
    const auto t1 = run_preset("table1", std::nullopt);
    CHECK(t1.table.rows.size() >= 20);  // both discount-rate rows
}

TEST_CASE("single-point sweep reduces to the single run") {
    ScenarioConfig cfg = preset_config("fig1");
    cfg.sweep_from = cfg.sweep_to = 1.0;
    cfg.sweep_steps = 1;
    cfg.gen_theta = 0.5;
    const auto fig = run_figures(cfg);
    REQUIRE(fig.table.rows.size() == 1);
    const double pay = std::get<double>(fig.table.rows[0][4].v);
    const double tclose = std::get<double>(fig.table.rows[0][5].v);

    ScenarioConfig single = cfg;
    single.gen_n = 1;
    const auto res = run_single(single);
    double pay_single = -1.0, t_single = -1.0;
    for (const auto& row : res.table.rows) {
        const auto& q = std::get<std::string>(row[2].v);
        if (q == "total_expected_payment") pay_single = std::get<double>(row[4].v);
        if (q == "time_to_close") t_single = std::get<double>(row[4].v);
    }
    CHECK(pay == doctest::Approx(pay_single).epsilon(1e-12));
    CHECK(tclose == doctest::Approx(t_single).epsilon(1e-12));
}

TEST_CASE("mc-verify passes clean and fails corrupted") {
    ScenarioConfig cfg = parse_str(R"(
[gbm]
mu = 0.02
sigma = 0.08
x0 = 100

[economy]
rho = 0.1
gamma = 4
calibrate = true
price = 1.825e10

[market]
firm = 1.0,1.825e10

[mc]
paths = 8000
seed = 5
)");
    const auto ok = run_mc_verify(cfg);
    CHECK(ok.oracle_pass);
    cfg.corrupt_threshold_scale = 1.1;
    const auto bad = run_mc_verify(cfg);
    CHECK_FALSE(bad.oracle_pass);
}
