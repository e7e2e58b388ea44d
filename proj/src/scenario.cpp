#include "carbex/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "carbex/errors.hpp"

namespace carbex {

double calibrate_ell(double pi_effective, double x0, double gamma) {
    if (!(pi_effective > 0.0 && x0 > 0.0 && gamma > 1.0))
        throw std::invalid_argument("calibrate_ell: inputs must be positive, gamma > 1");
    return pi_effective * std::pow(x0, 1.0 - gamma);
}

// --------------------------------------------------------------- formatting

std::string format_number(double v, int significant) {
    if (significant < 1) significant = 1;
    if (significant > 17) significant = 17;
    if (v == 0.0) return "0";
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    const double a = std::abs(v);
    char buf[64];
    if (a < 1e-4 || a >= 1e15) {
        std::snprintf(buf, sizeof buf, "%.*e", significant - 1, v);
        // Trim zeros in the mantissa: 1.200000e+16 -> 1.2e+16.
        std::string s(buf);
        const size_t epos = s.find('e');
        std::string mant = s.substr(0, epos), exp = s.substr(epos);
        if (mant.find('.') != std::string::npos) {
            while (mant.back() == '0') mant.pop_back();
            if (mant.back() == '.') mant.pop_back();
        }
        return mant + exp;
    }
    const int int_digits = static_cast<int>(std::floor(std::log10(a))) + 1;  // <= 0 below 1
    const int frac = std::min(30, std::max(0, significant - int_digits));
    std::snprintf(buf, sizeof buf, "%.*f", frac, v);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return s;
}

void ResultTable::add_row(std::vector<Cell> cells) {
    cells.resize(columns.size());
    rows.push_back(std::move(cells));
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_csv(const ResultTable& table, std::ostream& os, int precision) {
    for (size_t i = 0; i < table.columns.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(table.columns[i]);
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            const auto& c = row[i].v;
            if (std::holds_alternative<double>(c))
                os << format_number(std::get<double>(c), precision);
            else if (std::holds_alternative<long long>(c))
                os << std::get<long long>(c);
            else if (std::holds_alternative<std::string>(c))
                os << csv_escape(std::get<std::string>(c));
        }
        os << '\n';
    }
}

// ------------------------------------------------------------ config parser

namespace {

struct Parser {
    std::string label;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(label + ":" + std::to_string(line_no) + ": " + msg);
    }

    double number(const std::string& raw) const {
        // Plain/scientific numbers plus literal fractions like 13/23.
        const auto slash = raw.find('/');
        if (slash != std::string::npos) {
            const double num = number(raw.substr(0, slash));
            const double den = number(raw.substr(slash + 1));
            if (den == 0.0) fail("division by zero in fraction '" + raw + "'");
            return num / den;
        }
        size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(raw, &pos);
        } catch (const std::exception&) {
            fail("expected a number, got '" + raw + "'");
        }
        if (pos != raw.size()) fail("trailing characters in number '" + raw + "'");
        return v;
    }

    bool boolean(const std::string& raw) const {
        if (raw == "true" || raw == "1") return true;
        if (raw == "false" || raw == "0") return false;
        fail("expected true/false, got '" + raw + "'");
    }

    long long integer(const std::string& raw) const {
        const double v = number(raw);
        const long long i = static_cast<long long>(std::llround(v));
        if (std::abs(v - static_cast<double>(i)) > 1e-9) fail("expected an integer, got '" + raw + "'");
        return i;
    }
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

ScenarioConfig parse_config(std::istream& in, const std::string& label) {
    ScenarioConfig cfg;
    cfg.gbm = GbmParams{};  // all fields must come from the file
    Parser p{label, 0};
    std::string section;
    std::string line;
    bool saw_generator = false, saw_firms = false, saw_duopoly = false;

    while (std::getline(in, line)) {
        ++p.line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') p.fail("malformed section header '" + t + "'");
            section = trim(t.substr(1, t.size() - 2));
            const bool known = section == "gbm" || section == "economy" || section == "market" ||
                               section == "duopoly" || section == "sweep" || section == "mc" ||
                               section == "output";
            if (!known) p.fail("unknown section [" + section + "]");
            if (section == "duopoly") saw_duopoly = true;
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) p.fail("expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty() || val.empty()) p.fail("empty key or value");

        if (section == "gbm") {
            if (key == "mu") cfg.gbm.mu = p.number(val);
            else if (key == "sigma") cfg.gbm.sigma = p.number(val);
            else if (key == "x0") cfg.gbm.x0 = p.number(val);
            else p.fail("unknown key '" + key + "' in [gbm]");
        } else if (section == "economy") {
            if (key == "rho") cfg.rho = p.number(val);
            else if (key == "gamma") cfg.gamma = p.number(val);
            else if (key == "ell") cfg.ell = p.number(val);
            else if (key == "calibrate") cfg.calibrate = p.boolean(val);
            else if (key == "price") cfg.price = p.number(val);
            else p.fail("unknown key '" + key + "' in [economy]");
        } else if (section == "market") {
            if (key == "firm") {
                const auto comma = val.find(',');
                if (comma == std::string::npos) p.fail("firm needs '<lambda>,<pi>'");
                cfg.firm_list.push_back(
                    {p.number(trim(val.substr(0, comma))), p.number(trim(val.substr(comma + 1)))});
                saw_firms = true;
            } else if (key == "n") {
                cfg.gen_n = static_cast<int>(p.integer(val));
                saw_generator = true;
            } else if (key == "theta") {
                cfg.gen_theta = p.number(val);
                saw_generator = true;
            } else if (key == "alpha") {
                cfg.gen_alpha = p.number(val);
                saw_generator = true;
            } else if (key == "alpha_mode") {
                if (val == "fixed") cfg.alpha_mode = AlphaMode::fixed;
                else if (val == "market-revenue") cfg.alpha_mode = AlphaMode::market_revenue;
                else p.fail("alpha_mode must be fixed or market-revenue");
                saw_generator = true;
            } else {
                p.fail("unknown key '" + key + "' in [market]");
            }
        } else if (section == "duopoly") {
            if (key == "lambda1") cfg.duopoly.lambda1 = p.number(val);
            else if (key == "lambda2") cfg.duopoly.lambda2 = p.number(val);
            else if (key == "pi1") cfg.duopoly.pi1 = p.number(val);
            else if (key == "pi2") cfg.duopoly.pi2 = p.number(val);
            else if (key == "regime") {
                if (val == "nash") cfg.regime = DuopolyRegimeChoice::nash;
                else if (val == "individual") cfg.regime = DuopolyRegimeChoice::individual;
                else if (val == "uniform") cfg.regime = DuopolyRegimeChoice::uniform;
                else if (val == "central") cfg.regime = DuopolyRegimeChoice::central;
                else if (val == "all") cfg.regime = DuopolyRegimeChoice::all;
                else p.fail("unknown regime '" + val + "'");
            } else {
                p.fail("unknown key '" + key + "' in [duopoly]");
            }
        } else if (section == "sweep") {
            if (key == "vary") {
                if (val == "n") cfg.sweep = SweepVar::firms;
                else if (val == "theta") cfg.sweep = SweepVar::theta;
                else p.fail("vary must be n or theta");
            } else if (key == "from") cfg.sweep_from = p.number(val);
            else if (key == "to") cfg.sweep_to = p.number(val);
            else if (key == "steps") cfg.sweep_steps = static_cast<int>(p.integer(val));
            else p.fail("unknown key '" + key + "' in [sweep]");
        } else if (section == "mc") {
            cfg.has_mc = true;
            if (key == "paths") cfg.mc.n_paths = p.integer(val);
            else if (key == "dt") cfg.mc.dt = p.number(val);
            else if (key == "seed") cfg.mc.seed = static_cast<std::uint64_t>(p.integer(val));
            else if (key == "horizon_cap") cfg.mc.horizon_cap = p.number(val);
            else if (key == "bridge") cfg.mc.bridge_correction = p.boolean(val);
            else if (key == "threads") cfg.mc.threads = static_cast<int>(p.integer(val));
            else p.fail("unknown key '" + key + "' in [mc]");
        } else if (section == "output") {
            if (key == "csv") cfg.csv_path = val;
            else if (key == "precision") cfg.precision = static_cast<int>(p.integer(val));
            else p.fail("unknown key '" + key + "' in [output]");
        } else {
            p.fail("key '" + key + "' outside any section");
        }
    }

    const int kinds = (saw_firms ? 1 : 0) + (saw_generator ? 1 : 0) + (saw_duopoly ? 1 : 0);
    p.line_no = 0;
    if (kinds > 1) p.fail("config must declare exactly one of: firm list, generator, duopoly");
    cfg.kind = saw_firms      ? MarketKind::firm_list
               : saw_generator ? MarketKind::generator
               : saw_duopoly   ? MarketKind::duopoly
                               : MarketKind::none;
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse_config(in, path);
}

// ---------------------------------------------------------------- presets

namespace {

constexpr double kCrudePrice = 50e6 * 365.0;  // 50 $/bbl, 1e6 bbl/Mb, 365 d/y

ScenarioConfig crude_base() {
    ScenarioConfig cfg;
    cfg.gbm = {0.02, 0.08, 100.0};
    cfg.gamma = 4.0;
    cfg.calibrate = true;
    cfg.price = kCrudePrice;
    return cfg;
}

}  // namespace

std::vector<std::string> preset_names() { return {"table1", "table2", "fig1", "fig2"}; }

ScenarioConfig preset_config(const std::string& name) {
    if (name == "table1") {
        ScenarioConfig cfg = crude_base();
        cfg.rho = 0.03;
        cfg.kind = MarketKind::firm_list;
        cfg.firm_list = {{1.0, kCrudePrice}};
        return cfg;
    }
    if (name == "table2") {
        ScenarioConfig cfg = crude_base();
        cfg.rho = 0.10;
        cfg.kind = MarketKind::duopoly;
        // Unit profits proportional to shares. The profit scale is calibrated
        // to the published two-country thresholds (the ratio tests show no
        // per-unit convention reproduces them exactly); the damage scale keeps
        // the 50 $/bbl break-even identity.
        const double alpha = 2.6e10;
        cfg.duopoly = {13.0 / 23.0, 10.0 / 23.0, alpha * 13.0 / 23.0, alpha * 10.0 / 23.0};
        cfg.regime = DuopolyRegimeChoice::all;
        return cfg;
    }
    if (name == "fig1") {
        ScenarioConfig cfg = crude_base();
        cfg.rho = 0.10;
        cfg.kind = MarketKind::generator;
        cfg.gen_n = 200;
        cfg.gen_theta = 0.1;
        cfg.alpha_mode = AlphaMode::market_revenue;
        cfg.sweep = SweepVar::firms;
        cfg.sweep_from = 25.0;
        cfg.sweep_to = 200.0;
        cfg.sweep_steps = 8;
        return cfg;
    }
    if (name == "fig2") {
        ScenarioConfig cfg = crude_base();
        cfg.rho = 0.10;
        cfg.kind = MarketKind::generator;
        cfg.gen_n = 1000;
        cfg.gen_theta = 0.1;
        cfg.alpha_mode = AlphaMode::market_revenue;
        cfg.sweep = SweepVar::theta;
        cfg.sweep_from = 0.1;
        cfg.sweep_to = 1.0;
        cfg.sweep_steps = 10;
        return cfg;
    }
    throw ConfigError("unknown preset '" + name + "' (have: table1, table2, fig1, fig2)");
}

// ------------------------------------------------------------- run drivers

namespace {

struct ResolvedMarket {
    FirmProfile profile;
    EconomyParams econ;
    double alpha = 0.0;  // effective generator profit scale (0 for firm lists)
};

EconomyParams resolve_econ(const ScenarioConfig& cfg, double pi_for_calibration) {
    EconomyParams econ;
    econ.rho = cfg.rho;
    econ.gamma = cfg.gamma;
    if (cfg.ell >= 0.0)
        econ.ell = cfg.ell;
    else if (cfg.calibrate || cfg.price > 0.0)
        econ.ell = calibrate_ell(pi_for_calibration > 0.0 ? pi_for_calibration : cfg.price,
                                 cfg.gbm.x0, cfg.gamma);
    else
        throw ConfigError("economy: provide ell or calibrate = true with a price");
    return econ;
}

ResolvedMarket resolve_market(const ScenarioConfig& cfg, int n, double theta) {
    if (cfg.kind == MarketKind::firm_list) {
        return {FirmProfile(cfg.firm_list), resolve_econ(cfg, 0.0), 0.0};
    }
    if (cfg.kind != MarketKind::generator)
        throw ConfigError("this subcommand needs a firm list or generator market");
    double alpha = cfg.gen_alpha;
    if (cfg.alpha_mode == AlphaMode::market_revenue) {
        if (!(cfg.price > 0.0)) throw ConfigError("alpha_mode market-revenue needs a price");
        const FirmProfile shape = share_generator(n, theta, 1.0);
        double sum_sq = 0.0;
        for (const auto& f : shape.firms()) sum_sq += f.lambda * f.lambda;
        alpha = cfg.price / sum_sq;
        ScenarioConfig tmp = cfg;
        tmp.ell = -1.0;
        return {share_generator(n, theta, alpha), resolve_econ(tmp, alpha), alpha};
    }
    if (!(alpha > 0.0)) throw ConfigError("generator market needs alpha > 0");
    return {share_generator(n, theta, alpha), resolve_econ(cfg, 0.0), alpha};
}

const std::vector<std::string> kLongColumns = {"scenario", "rho",    "quantity", "firm",
                                               "value",    "stderr", "source"};

void emit_single_rows(ResultTable& out, const ScenarioConfig& cfg, const ResolvedMarket& mkt) {
    const DerivedConstants consts = derived_constants(cfg.gbm, mkt.econ);
    const SingleMarketSolution sol =
        solve_single_market(mkt.profile, cfg.gbm.x0, consts, mkt.econ);
    const AggregateReport agg = aggregate_report(mkt.profile, sol, cfg.gbm);
    const double rho = mkt.econ.rho;
    const char* cf = "closed-form";

    if (mkt.profile.size() == 1) {
        const FirstBest fb = first_best(cfg.gbm, mkt.econ, consts, mkt.profile.pi(1));
        out.add_row({"single", rho, "x_bar_1", Cell{}, fb.x_bar, Cell{}, cf});
        out.add_row({"single", rho, "first_best_value", Cell{}, fb.value, Cell{}, cf});
    }
    for (int i = 1; i <= mkt.profile.size(); ++i) {
        const auto& f = sol.per_firm[static_cast<size_t>(i - 1)];
        out.add_row({"single", rho, "x_hat", i, f.threshold, Cell{}, cf});
        out.add_row({"single", rho, "d_coeff", i, f.d_coeff, Cell{}, cf});
        out.add_row({"single", rho, "expected_payment", i, f.expected_payment, Cell{}, cf});
        out.add_row({"single", rho, "expected_exit_time", i, f.expected_exit_time, Cell{}, cf});
        out.add_row({"single", rho, "immediate_exit", i, f.immediate_exit ? 1 : 0, Cell{}, cf});
    }
    out.add_row({"single", rho, "value", Cell{}, sol.value, Cell{}, cf});
    out.add_row({"single", rho, "total_expected_payment", Cell{}, sol.total_expected_payment,
                 Cell{}, cf});
    out.add_row({"single", rho, "immediate_fraction", Cell{}, agg.immediate_fraction, Cell{}, cf});
    out.add_row({"single", rho, "immediate_share", Cell{}, agg.immediate_share, Cell{}, cf});
    out.add_row({"single", rho, "time_to_close", Cell{}, agg.time_to_close, Cell{}, cf});
    if (mkt.alpha > 0.0) out.add_row({"single", rho, "alpha", Cell{}, mkt.alpha, Cell{}, cf});
    out.add_row({"single", rho, "ell", Cell{}, mkt.econ.ell, Cell{}, cf});

    if (cfg.has_mc) {
        std::vector<double> xhat(sol.per_firm.size());
        for (size_t i = 0; i < sol.per_firm.size(); ++i) xhat[i] = sol.per_firm[i].threshold;
        const McEstimate v_mc =
            estimate_regulator_value(cfg.gbm, mkt.econ, &mkt.profile, nullptr, xhat, cfg.mc,
                                     RegulatorMode::single, consts);
        out.add_row({"single", rho, "value", Cell{}, v_mc.mean, v_mc.stderr_, "mc"});
        if (mkt.profile.size() <= 8) {
            for (int i = 1; i <= mkt.profile.size(); ++i) {
                const auto& f = sol.per_firm[static_cast<size_t>(i - 1)];
                if (f.immediate_exit) continue;
                McConfig mc = cfg.mc;
                mc.seed = cfg.mc.seed + static_cast<std::uint64_t>(i);
                const auto [disc, time] = estimate_hitting(cfg.gbm, f.threshold, rho, mc);
                out.add_row({"single", rho, "discount_factor", i, disc.mean, disc.stderr_, "mc"});
                out.add_row({"single", rho, "expected_exit_time", i, time.mean, time.stderr_,
                             "mc"});
            }
        }
    }
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::nash: return "nash";
        case Regime::individual: return "individual";
        case Regime::central: return "central";
    }
    return "?";
}

void emit_duopoly_regime(ResultTable& out, const ScenarioConfig& cfg, const EconomyParams& econ,
                         const DerivedConstants& consts, Regime regime) {
    const std::string scen = "duopoly-" + regime_name(regime);
    const DuopolyThresholds t = duopoly_thresholds(cfg.duopoly, consts, econ, regime);
    const char* cf = "closed-form";
    for (int i = 1; i <= 2; ++i) {
        out.add_row({scen, econ.rho, "z_low", i, t.of(i).z_low, Cell{}, cf});
        out.add_row({scen, econ.rho, "z_mid", i, t.of(i).z_mid, Cell{}, cf});
        out.add_row({scen, econ.rho, "z_high", i, t.of(i).z_high, Cell{}, cf});
    }
    const EquilibriumOutcome eq = (regime == Regime::nash)
                                      ? classify_nash(cfg.duopoly, consts, econ, cfg.gbm.x0)
                                      : (regime == Regime::individual
                                             ? individual_solution(cfg.duopoly, consts, econ,
                                                                   cfg.gbm.x0)
                                             : central_solution(cfg.duopoly, consts, econ,
                                                                cfg.gbm.x0));
    int k = 0;
    for (const auto& e : eq.equilibria) {
        ++k;
        out.add_row({scen, econ.rho, "first_exit_country", k, e.first_exit, Cell{}, cf});
        out.add_row({scen, econ.rho, "first_threshold", k, e.first_threshold, Cell{}, cf});
        out.add_row({scen, econ.rho, "second_threshold", k, e.second_threshold, Cell{}, cf});
        out.add_row({scen, econ.rho, "utility", k, e.utility, Cell{}, cf});
        out.add_row({scen, econ.rho, "first_immediate", k, e.first_immediate ? 1 : 0, Cell{}, cf});
        const double t1 = e.first_immediate ? 0.0 : expected_hitting_time(cfg.gbm, e.first_threshold);
        const double t2 = e.second_threshold <= cfg.gbm.x0
                              ? 0.0
                              : expected_hitting_time(cfg.gbm, e.second_threshold);
        out.add_row({scen, econ.rho, "first_lifetime", k, t1, Cell{}, cf});
        out.add_row({scen, econ.rho, "second_lifetime", k, t2, Cell{}, cf});
    }
}

void emit_uniform(ResultTable& out, const ScenarioConfig& cfg, const EconomyParams& econ,
                  const DerivedConstants& consts) {
    const UniformSolution u = uniform_two_firm(cfg.duopoly, consts, econ, cfg.gbm.x0);
    const char* cf = "closed-form";
    out.add_row({"duopoly-uniform", econ.rho, "x_hat", 1, u.xhat1, Cell{}, cf});
    out.add_row({"duopoly-uniform", econ.rho, "x_hat", 2, u.xhat2, Cell{}, cf});
    out.add_row({"duopoly-uniform", econ.rho, "value", Cell{}, u.value, Cell{}, cf});
}

}  // namespace

RunResult run_single(const ScenarioConfig& cfg) {
    RunResult res;
    res.table.columns = kLongColumns;
    const ResolvedMarket mkt = resolve_market(cfg, cfg.gen_n, cfg.gen_theta);
    emit_single_rows(res.table, cfg, mkt);
    return res;
}

RunResult run_duopoly(const ScenarioConfig& cfg) {
    if (cfg.kind != MarketKind::duopoly) throw ConfigError("run_duopoly needs a [duopoly] block");
    validate_duopoly(cfg.duopoly);
    const EconomyParams econ = resolve_econ(cfg, 0.0);
    const DerivedConstants consts = derived_constants(cfg.gbm, econ);
    RunResult res;
    res.table.columns = kLongColumns;
    const auto choice = cfg.regime;
    const bool all = choice == DuopolyRegimeChoice::all;
    if (all || choice == DuopolyRegimeChoice::nash)
        emit_duopoly_regime(res.table, cfg, econ, consts, Regime::nash);
    if (all || choice == DuopolyRegimeChoice::individual)
        emit_duopoly_regime(res.table, cfg, econ, consts, Regime::individual);
    if (all || choice == DuopolyRegimeChoice::uniform) {
        if (cfg.duopoly.pi1 < cfg.duopoly.pi2) {
            emit_uniform(res.table, cfg, econ, consts);
        } else if (!all) {
            throw ConfigError("uniform regime requires pi1 < pi2");
        } else {
            res.table.add_row({"duopoly-uniform", econ.rho, "skipped_requires_pi1_lt_pi2", Cell{},
                               Cell{}, Cell{}, "note"});
        }
    }
    if (all || choice == DuopolyRegimeChoice::central)
        emit_duopoly_regime(res.table, cfg, econ, consts, Regime::central);
    if (all) {
        const ComparisonReport cmp = compare_regimes(cfg.duopoly, consts, econ, cfg.gbm.x0);
        const char* cf = "closed-form";
        res.table.add_row({"duopoly-compare", econ.rho, "u_nash_best", Cell{}, cmp.u_nash_best,
                           Cell{}, cf});
        res.table.add_row({"duopoly-compare", econ.rho, "u_nash_worst", Cell{}, cmp.u_nash_worst,
                           Cell{}, cf});
        res.table.add_row({"duopoly-compare", econ.rho, "u_individual", Cell{}, cmp.u_individual,
                           Cell{}, cf});
        res.table.add_row({"duopoly-compare", econ.rho, "u_central", Cell{}, cmp.u_central, Cell{},
                           cf});
        res.table.add_row({"duopoly-compare", econ.rho, "utility_ordering_holds", Cell{},
                           cmp.ordering_holds ? 1 : 0, Cell{}, cf});
    }
    return res;
}

RunResult run_figures(const ScenarioConfig& cfg) {
    if (cfg.kind != MarketKind::generator)
        throw ConfigError("run_figures needs a generator market");
    if (cfg.sweep == SweepVar::none) throw ConfigError("run_figures needs a [sweep] block");
    if (cfg.sweep_steps < 1) throw ConfigError("sweep: steps must be >= 1");
    RunResult res;
    res.table.columns = {"n",     "theta",          "immediate_fraction", "immediate_share",
                         "total_expected_payment", "time_to_close",      "alpha",
                         "ell"};
    for (int s = 0; s < cfg.sweep_steps; ++s) {
        const double v = cfg.sweep_steps == 1
                             ? cfg.sweep_from
                             : cfg.sweep_from +
                                   (cfg.sweep_to - cfg.sweep_from) * s / (cfg.sweep_steps - 1);
        const int n = cfg.sweep == SweepVar::firms ? static_cast<int>(std::llround(v)) : cfg.gen_n;
        const double theta = cfg.sweep == SweepVar::theta ? v : cfg.gen_theta;
        const ResolvedMarket mkt = resolve_market(cfg, n, theta);
        const DerivedConstants consts = derived_constants(cfg.gbm, mkt.econ);
        const SingleMarketSolution sol =
            solve_single_market(mkt.profile, cfg.gbm.x0, consts, mkt.econ);
        const AggregateReport agg = aggregate_report(mkt.profile, sol, cfg.gbm);
        res.table.add_row({n, theta, agg.immediate_fraction, agg.immediate_share,
                           agg.total_payment, agg.time_to_close, mkt.alpha, mkt.econ.ell});
    }
    return res;
}

RunResult run_mc_verify(const ScenarioConfig& cfg) {
    if (!cfg.has_mc && cfg.mc.n_paths < 1) throw ConfigError("mc-verify needs an [mc] block");
    RunResult res;
    res.table.columns = {"scenario", "rho",       "quantity", "firm", "closed_form",
                         "mc_mean",  "mc_stderr", "z_score",  "pass"};
    const double corrupt = cfg.corrupt_threshold_scale;

    auto add_check = [&res](const std::string& scen, double rho, const std::string& what,
                            Cell firm, double closed, const McEstimate& mc) {
        const double z = mc.stderr_ > 0.0 ? (mc.mean - closed) / mc.stderr_
                                          : (mc.mean == closed ? 0.0 : 1e99);
        const bool ok = std::abs(z) <= 3.0;
        res.oracle_pass = res.oracle_pass && ok;
        res.table.add_row({scen, rho, what, std::move(firm), closed, mc.mean, mc.stderr_, z,
                           ok ? 1 : 0});
    };

    if (cfg.kind == MarketKind::firm_list || cfg.kind == MarketKind::generator) {
        const ResolvedMarket mkt = resolve_market(cfg, cfg.gen_n, cfg.gen_theta);
        const DerivedConstants consts = derived_constants(cfg.gbm, mkt.econ);
        const std::vector<double> xhat = thresholds(mkt.profile, consts, mkt.econ);
        std::vector<double> mc_xhat = xhat;
        for (auto& x : mc_xhat) x *= corrupt;
        // Hitting statistics firm by firm (skip immediate exits, no randomness).
        if (mkt.profile.size() <= 8) {
            for (int i = 1; i <= mkt.profile.size(); ++i) {
                const double x = xhat[static_cast<size_t>(i - 1)];
                const double xm = mc_xhat[static_cast<size_t>(i - 1)];
                if (xm <= cfg.gbm.x0 || x <= cfg.gbm.x0) continue;
                McConfig mc = cfg.mc;
                mc.seed = cfg.mc.seed + static_cast<std::uint64_t>(i) * 1000003u;
                const auto [disc, time] = estimate_hitting(cfg.gbm, xm, mkt.econ.rho, mc);
                add_check("single", mkt.econ.rho, "discount_factor", i,
                          expected_discount_factor(cfg.gbm, mkt.econ.rho, x), disc);
                add_check("single", mkt.econ.rho, "expected_exit_time", i,
                          expected_hitting_time(cfg.gbm, x), time);
            }
        }
        const double v_closed = regulator_value(mkt.profile, xhat, cfg.gbm.x0, consts, mkt.econ);
        const McEstimate v_mc = estimate_regulator_value(
            cfg.gbm, mkt.econ, &mkt.profile, nullptr, mc_xhat, cfg.mc, RegulatorMode::single,
            consts);
        add_check("single", mkt.econ.rho, "value", Cell{}, v_closed, v_mc);
    } else if (cfg.kind == MarketKind::duopoly) {
        const EconomyParams econ = resolve_econ(cfg, 0.0);
        const DerivedConstants consts = derived_constants(cfg.gbm, econ);
        const EquilibriumOutcome nash = classify_nash(cfg.duopoly, consts, econ, cfg.gbm.x0);
        int k = 0;
        for (const auto& e : nash.equilibria) {
            ++k;
            const double x1 = e.first_exit == 1 ? e.first_threshold : e.second_threshold;
            const double x2 = e.first_exit == 1 ? e.second_threshold : e.first_threshold;
            McConfig mc = cfg.mc;
            mc.seed = cfg.mc.seed + static_cast<std::uint64_t>(k) * 7919u;
            const McEstimate j1 = estimate_regulator_value(
                cfg.gbm, econ, nullptr, &cfg.duopoly, {x1 * corrupt, x2 * corrupt}, mc,
                RegulatorMode::duopoly_j1, consts);
            mc.seed += 17;
            const McEstimate j2 = estimate_regulator_value(
                cfg.gbm, econ, nullptr, &cfg.duopoly, {x1 * corrupt, x2 * corrupt}, mc,
                RegulatorMode::duopoly_j2, consts);
            McEstimate u_mc;
            u_mc.mean = j1.mean + j2.mean;
            u_mc.stderr_ = std::sqrt(j1.stderr_ * j1.stderr_ + j2.stderr_ * j2.stderr_);
            u_mc.n_effective = j1.n_effective;
            u_mc.truncated_fraction = std::max(j1.truncated_fraction, j2.truncated_fraction);
            add_check("duopoly-nash", econ.rho, "utility", k, e.utility, u_mc);
        }
        // Damage at the first Nash equilibrium.
        if (!nash.equilibria.empty()) {
            const auto& e = nash.equilibria.front();
            const double x1 = e.first_exit == 1 ? e.first_threshold : e.second_threshold;
            const double x2 = e.first_exit == 1 ? e.second_threshold : e.first_threshold;
            const double gamma = econ.gamma, m = consts.m, x0 = cfg.gbm.x0;
            const double e1 = std::max(std::min(x1, x2), x0);
            const double e2 = std::max(std::max(x1, x2), x0);
            const double lam_second =
                x1 <= x2 ? cfg.duopoly.lambda2 : cfg.duopoly.lambda1;
            const double d_closed =
                consts.a * econ.ell *
                ((1.0 - std::pow(lam_second, gamma)) * std::pow(e1, gamma - m) * std::pow(x0, m) +
                 std::pow(lam_second, gamma) * std::pow(e2, gamma - m) * std::pow(x0, m) -
                 std::pow(x0, gamma));
            McConfig mc = cfg.mc;
            mc.seed = cfg.mc.seed + 555557u;
            const McEstimate d_mc =
                damage_estimate(cfg.gbm, econ, cfg.duopoly, x1 * corrupt, x2 * corrupt, mc);
            add_check("duopoly-nash", econ.rho, "damage", Cell{}, d_closed, d_mc);
        }
        const EquilibriumOutcome central = central_solution(cfg.duopoly, consts, econ, cfg.gbm.x0);
        k = 0;
        for (const auto& e : central.equilibria) {
            ++k;
            const double x1 = e.first_exit == 1 ? e.first_threshold : e.second_threshold;
            const double x2 = e.first_exit == 1 ? e.second_threshold : e.first_threshold;
            McConfig mc = cfg.mc;
            mc.seed = cfg.mc.seed + 104729u + static_cast<std::uint64_t>(k);
            const McEstimate u_mc = estimate_regulator_value(
                cfg.gbm, econ, nullptr, &cfg.duopoly, {x1 * corrupt, x2 * corrupt}, mc,
                RegulatorMode::duopoly_central, consts);
            add_check("duopoly-central", econ.rho, "utility", k, e.utility, u_mc);
        }
    } else {
        throw ConfigError("mc-verify needs a market or duopoly block");
    }
    return res;
}

RunResult run_preset(const std::string& name, std::optional<std::uint64_t> seed_override) {
    if (name == "table1") {
        ScenarioConfig cfg = preset_config(name);
        if (seed_override) cfg.mc.seed = *seed_override;
        RunResult low = run_single(cfg);
        cfg.rho = 0.10;
        RunResult high = run_single(cfg);
        for (auto& row : high.table.rows) low.table.rows.push_back(std::move(row));
        return low;
    }
    ScenarioConfig cfg = preset_config(name);
    if (seed_override) cfg.mc.seed = *seed_override;
    switch (cfg.kind) {
        case MarketKind::duopoly: return run_duopoly(cfg);
        case MarketKind::generator: return run_figures(cfg);
        default: return run_single(cfg);
    }
}

}  // namespace carbex
