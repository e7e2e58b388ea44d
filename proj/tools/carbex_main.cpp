// carbex: exit-incentive analytics for carbon-emissive markets.
//
// Subcommands: single, duopoly, figures, mc-verify, calibrate, preset.
// Exit codes: 0 ok, 2 config/validation error, 3 numerical failure,
// 4 oracle disagreement (mc-verify).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "carbex/errors.hpp"
#include "carbex/scenario.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string csv_path;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    double corrupt_scale = 1.0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool need_scenario) {
    auto* cfg = cmd->add_option("--config", opts.config_path, "scenario config file");
    auto* pre = cmd->add_option("--preset", opts.preset, "built-in preset name");
    if (need_scenario) {
        cfg->excludes(pre);
        pre->excludes(cfg);
    }
    cmd->add_option("--csv", opts.csv_path, "write the result table to this path");
    cmd->add_option("--seed", opts.seed, "Monte Carlo seed override");
    cmd->add_flag("--quiet", opts.quiet, "suppress the summary line");
    cmd->add_option("--corrupt-thresholds", opts.corrupt_scale)->group("");  // test hook
}

carbex::ScenarioConfig resolve_config(const CommonOpts& opts) {
    if (!opts.config_path.empty() && !opts.preset.empty())
        throw carbex::ConfigError("pass either --config or --preset, not both");
    carbex::ScenarioConfig cfg;
    if (!opts.preset.empty())
        cfg = carbex::preset_config(opts.preset);
    else if (!opts.config_path.empty())
        cfg = carbex::load_config(opts.config_path);
    else
        throw carbex::ConfigError("missing --config or --preset");
    if (opts.seed) cfg.mc.seed = *opts.seed;
    cfg.corrupt_threshold_scale = opts.corrupt_scale;
    if (!opts.csv_path.empty()) cfg.csv_path = opts.csv_path;
    return cfg;
}

int emit(const carbex::RunResult& res, const carbex::ScenarioConfig& cfg, bool quiet) {
    if (cfg.csv_path.empty()) {
        carbex::write_csv(res.table, std::cout, cfg.precision);
    } else {
        std::ofstream out(cfg.csv_path, std::ios::binary);
        if (!out) {
            std::cerr << "carbex: cannot open " << cfg.csv_path << " for writing\n";
            return 2;
        }
        carbex::write_csv(res.table, out, cfg.precision);
        if (!quiet)
            std::cout << "wrote " << cfg.csv_path << " (" << res.table.rows.size() << " rows)\n";
    }
    return res.oracle_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form exit-incentive schemes, thresholds and equilibria for "
                 "carbon-emissive markets, with Monte Carlo verification"};
    app.require_subcommand(1);

    CommonOpts single_o, duopoly_o, figures_o, verify_o, preset_o;
    auto* single = app.add_subcommand("single", "single-market solution (N firms)");
    add_common(single, single_o, true);
    auto* duopoly = app.add_subcommand("duopoly", "two-market equilibria and regime comparison");
    add_common(duopoly, duopoly_o, true);
    auto* figures = app.add_subcommand("figures", "sweep over firm count or concentration");
    add_common(figures, figures_o, true);
    auto* verify = app.add_subcommand("mc-verify", "closed forms vs Monte Carlo oracles");
    add_common(verify, verify_o, true);

    auto* preset = app.add_subcommand("preset", "run a built-in preset");
    std::string preset_name;
    preset->add_option("name", preset_name, "table1, table2, fig1 or fig2")->required();
    add_common(preset, preset_o, false);

    auto* calibrate = app.add_subcommand("calibrate", "damage scale from the break-even identity");
    double cal_price = 0.0, cal_x0 = 0.0, cal_gamma = 0.0;
    calibrate->add_option("--price", cal_price, "unit profit (money/y per unit)")->required();
    calibrate->add_option("--x0", cal_x0, "production level")->required();
    calibrate->add_option("--gamma", cal_gamma, "damage exponent")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*single) {
            const auto cfg = resolve_config(single_o);
            return emit(carbex::run_single(cfg), cfg, single_o.quiet);
        }
        if (*duopoly) {
            const auto cfg = resolve_config(duopoly_o);
            return emit(carbex::run_duopoly(cfg), cfg, duopoly_o.quiet);
        }
        if (*figures) {
            const auto cfg = resolve_config(figures_o);
            return emit(carbex::run_figures(cfg), cfg, figures_o.quiet);
        }
        if (*verify) {
            auto cfg = resolve_config(verify_o);
            if (!cfg.has_mc) cfg.has_mc = true;  // defaults: 1e5 paths, dt = 1/365
            if (cfg.kind == carbex::MarketKind::generator && cfg.sweep != carbex::SweepVar::none)
                throw carbex::ConfigError("mc-verify runs a single market point, not a sweep");
            auto res = carbex::run_mc_verify(cfg);
            if (verify_o.preset == "table1") {  // the preset spans both discount rates
                cfg.rho = 0.10;
                auto high = carbex::run_mc_verify(cfg);
                for (auto& row : high.table.rows) res.table.rows.push_back(std::move(row));
                res.oracle_pass = res.oracle_pass && high.oracle_pass;
            }
            return emit(res, cfg, verify_o.quiet);
        }
        if (*preset) {
            auto cfg = carbex::preset_config(preset_name);
            if (!preset_o.csv_path.empty()) cfg.csv_path = preset_o.csv_path;
            const auto res = carbex::run_preset(preset_name, preset_o.seed);
            return emit(res, cfg, preset_o.quiet);
        }
        if (*calibrate) {
            std::cout << carbex::format_number(carbex::calibrate_ell(cal_price, cal_x0, cal_gamma),
                                               10)
                      << "\n";
            return 0;
        }
    } catch (const carbex::NumericalError& e) {
        std::cerr << "carbex: numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "carbex: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "carbex: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
