#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "carbex/duopoly.hpp"
#include "carbex/model.hpp"
#include "carbex/montecarlo.hpp"
#include "carbex/single_market.hpp"

// User-facing surface: scenario configs (file format and embedded presets),
// the run drivers behind the CLI subcommands, and CSV emission.

namespace carbex {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class MarketKind { none, firm_list, generator, duopoly };

// fixed: pi_i = alpha lambda_i with the configured alpha.
// market_revenue: alpha = price / sum(lambda_i^2), so the aggregate profit
// rate at x0 equals the market revenue at the configured price; ell is then
// calibrated from alpha.
enum class AlphaMode { fixed, market_revenue };

enum class DuopolyRegimeChoice { nash, individual, uniform, central, all };

enum class SweepVar { none, firms, theta };

struct ScenarioConfig {
    GbmParams gbm{0.02, 0.08, 100.0};

    double rho = 0.0;
    double gamma = 0.0;
    double ell = -1.0;       // < 0: use calibration
    bool calibrate = false;  // ell = price * x0^(1-gamma)
    double price = 0.0;

    MarketKind kind = MarketKind::none;
    std::vector<Firm> firm_list;

    int gen_n = 0;
    double gen_theta = 0.0;
    double gen_alpha = 0.0;
    AlphaMode alpha_mode = AlphaMode::fixed;

    DuopolySpec duopoly;
    DuopolyRegimeChoice regime = DuopolyRegimeChoice::nash;

    SweepVar sweep = SweepVar::none;
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 0;

    bool has_mc = false;
    McConfig mc;

    std::string csv_path;
    int precision = 10;

    // Test hook: simulate a buggy implementation by scaling the thresholds
    // fed to the MC side of mc-verify.
    double corrupt_threshold_scale = 1.0;
};

// Line-oriented format: [section] headers, key = value pairs, repeated
// firm = <lambda>,<pi> lines. Values accept scientific notation and literal
// fractions (13/23). Unknown sections or keys are errors. '#' starts a
// comment line.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(std::istream& in, const std::string& label);

// ell such that pi_effective * x0 = ell * x0^gamma.
double calibrate_ell(double pi_effective, double x0, double gamma);

// Embedded presets: table1, table2, fig1, fig2.
ScenarioConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

// ------------------------------------------------------------ result tables

struct Cell {
    std::variant<std::monostate, double, long long, std::string> v;

    Cell() = default;
    Cell(double d) : v(d) {}
    Cell(long long i) : v(i) {}
    Cell(int i) : v(static_cast<long long>(i)) {}
    Cell(std::string s) : v(std::move(s)) {}
    Cell(const char* s) : v(std::string(s)) {}
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> cells);
};

// Default 10 significant digits; scientific notation outside [1e-4, 1e15).
std::string format_number(double v, int significant);
void write_csv(const ResultTable& table, std::ostream& os, int precision);

// ------------------------------------------------------------- run drivers

struct RunResult {
    ResultTable table;
    bool oracle_pass = true;  // only meaningful for mc-verify
};

RunResult run_single(const ScenarioConfig& cfg);
RunResult run_duopoly(const ScenarioConfig& cfg);
RunResult run_figures(const ScenarioConfig& cfg);
RunResult run_mc_verify(const ScenarioConfig& cfg);
// table1 runs both discount-rate rows; other presets dispatch on their kind.
RunResult run_preset(const std::string& name, std::optional<std::uint64_t> seed_override);

}  // namespace carbex
