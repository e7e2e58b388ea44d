#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "carbex/duopoly.hpp"
#include "carbex/model.hpp"
#include "carbex/single_market.hpp"

// Brute-force verification engine: GBM path simulation with exact-distribution
// stepping, hitting-time and discounted-functional estimation, agent
// best-response search, and regulator-objective estimation.
//
// Randomness is counter-based (Philox4x32-10 keyed on the seed, counters
// (path, step, purpose)), so path i is reproducible independently of the path
// count, thread count, and of whether the bridge uniform was consumed.

namespace carbex {

struct McConfig {
    std::int64_t n_paths = 100000;
    double dt = 1.0 / 365.0;
    double horizon_cap = 400.0;  // years
    std::uint64_t seed = 1;
    bool bridge_correction = true;
    int threads = 0;  // 0: CARBEX_THREADS env var, else hardware concurrency
};

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t n_effective = 0;
    double truncated_fraction = 0.0;  // paths reaching horizon_cap
};

// Deterministic per-(path,step) draws.
class GbmSampler {
  public:
    GbmSampler(std::uint64_t seed);
    double normal(std::int64_t path, std::int64_t step) const;
    double bridge_uniform(std::int64_t path, std::int64_t step) const;  // in [0,1)
    std::uint64_t seed() const { return seed_; }
    std::uint64_t key0() const { return key_lo_; }
    std::uint64_t key1() const { return key_hi_; }

  private:
    std::uint64_t seed_;
    std::uint64_t key_lo_, key_hi_;
};

// One simulated path at the cfg grid: X_0, X_dt, ..., X_{n_steps dt}.
std::vector<double> simulate_path(const GbmParams& gbm, const McConfig& cfg, std::int64_t path,
                                  int n_steps);

// Terminal values X_T for every path (moment tests).
std::vector<double> simulate_terminal(const GbmParams& gbm, const McConfig& cfg, double t);

// (E[e^{-rho tau}], E[tau]) for tau the hitting time of x_hat > x0.
// Horizon-capped paths contribute e^{-rho cap} and cap.
std::pair<McEstimate, McEstimate> estimate_hitting(const GbmParams& gbm, double x_hat, double rho,
                                                   const McConfig& cfg);

struct AgentCurve {
    std::vector<double> candidates;   // threshold grid
    std::vector<McEstimate> values;   // agent objective per candidate
    std::size_t argmax = 0;
    // Largest candidate statistically tied with the maximum. The scheme pays
    // exactly the forgone value, so the objective is flat up to the designed
    // exit and drops after it; the plateau edge locates the last threshold an
    // indifferent firm would still accept.
    std::size_t plateau_end = 0;
    bool argmax_at_edge = false;
};

// Agent objective E[int_0^tau_y e^{-rho t} profit_rate X dt
//                   + payment_weight e^{-rho tau_y} offer(X, regime)]
// per candidate threshold y, common random numbers across candidates.
// `ladder` holds the scheme's exit thresholds (regime r = #crossed + 1);
// `offer(x, regime)` is the posted payment at production level x.
AgentCurve estimate_agent_value(const GbmParams& gbm, double rho, double profit_rate,
                                double payment_weight,
                                const std::function<double(double, int)>& offer,
                                const std::vector<double>& ladder,
                                const std::vector<double>& candidates, const McConfig& cfg);

enum class RegulatorMode { single, duopoly_j1, duopoly_j2, duopoly_central };

// Pathwise discounted profit - damage - compensation at the given hitting
// thresholds (single market: the full ladder; duopoly: J_i / central J-bar).
McEstimate estimate_regulator_value(const GbmParams& gbm, const EconomyParams& econ,
                                    const FirmProfile* profile, const DuopolySpec* spec,
                                    const std::vector<double>& thresholds_in, const McConfig& cfg,
                                    RegulatorMode mode, const DerivedConstants& consts);

// Global damage functional D(x0, tau_1, tau_2) of the duopoly.
McEstimate damage_estimate(const GbmParams& gbm, const EconomyParams& econ,
                           const DuopolySpec& spec, double tau1_threshold, double tau2_threshold,
                           const McConfig& cfg);

int resolve_threads(const McConfig& cfg);

}  // namespace carbex
