#pragma once

#include <string>
#include <vector>

// Core market model: GBM production dynamics, social damage parameters,
// derived constants, and exact hitting-time statistics. Everything downstream
// (free-boundary solver, single market, duopoly, Monte Carlo) consumes these.

namespace carbex {

// dX = mu X dt + sigma X dW, X_0 = x0. Rates are per year; production units
// are whatever the caller declares (the CLI presets use Mb/d).
struct GbmParams {
    double mu = 0.0;     // drift (1/y)
    double sigma = 0.0;  // volatility (1/sqrt(y))
    double x0 = 0.0;     // initial production rate
};

// Discounting and damage L(x) = ell * x^gamma.
struct EconomyParams {
    double rho = 0.0;    // discount rate (1/y)
    double gamma = 0.0;  // damage exponent, >= 2
    double ell = 0.0;    // damage scale (money/y per unit^gamma)
};

// Constants every closed form consumes:
//   a = 1 / (M - rho),  M = gamma*mu + sigma^2*(gamma^2-gamma)/2
//   b = 1 / (rho - mu)
//   m = positive root > 1 of  sigma^2 m^2/2 + (mu - sigma^2/2) m - rho = 0
//   nu = mu - sigma^2/2 (log drift)
struct DerivedConstants {
    double a = 0.0;
    double b = 0.0;
    double m = 0.0;
    double big_m = 0.0;
    double nu = 0.0;
};

struct ConstraintCheck {
    std::string name;    // e.g. "rho > mu"
    bool pass = false;
    double value = 0.0;  // offending/checked value
    double bound = 0.0;  // the bound it was compared against
};

struct ValidationReport {
    std::vector<ConstraintCheck> checks;

    bool ok() const;
    // One line per failed constraint; empty string when all pass.
    std::string failure_summary() const;
};

// Report-style parameter check. Strict inequalities, zero tolerance:
//   sigma > 0, x0 > 0, mu > sigma^2/2, gamma >= 2, ell > 0,
//   rho in (mu, gamma*mu + sigma^2*(gamma^2-gamma)/2).
ValidationReport validate(const GbmParams& gbm, const EconomyParams& econ);

// Throws std::invalid_argument when validate() fails.
DerivedConstants derived_constants(const GbmParams& gbm, const EconomyParams& econ);

// Positive root > 1 of the discounted-GBM characteristic quadratic.
// Evaluated in the cancellation-free form, then polished with one Newton step.
double root_exponent(double mu, double sigma, double rho);

// E[e^{-rho tau}] for tau the first hitting time of x_hat from below:
// (x0/x_hat)^m, or 1 when x0 >= x_hat. Rejects x_hat <= 0.
double expected_discount_factor(const GbmParams& gbm, double rho, double x_hat);

// E[tau] = ln(x_hat/x0) / nu. Rejects x_hat < x0 (downward thresholds signal
// a configuration mistake; immediate exit is the x_hat == x0 branch).
double expected_hitting_time(const GbmParams& gbm, double x_hat);

}  // namespace carbex
