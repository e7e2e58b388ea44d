#pragma once

#include <functional>
#include <span>
#include <vector>

#include "carbex/model.hpp"

// Closed-form solver for the perpetual stopping problem
//
//   u(x) = sup_tau E[ int_0^tau e^{-rho t} (alpha X - beta X^gamma) dt
//                     + e^{-rho tau} (a1 X + a2 X^m + a3 X^gamma) ]
//
// with payoffs in span{x, x^m, x^gamma}, plus two independent numeric
// oracles (1-D threshold maximisation, finite-difference variational check)
// used throughout the test suite.

namespace carbex {

struct StoppingSpec {
    double alpha = 0.0;  // running profit slope
    double beta = 0.0;   // running damage scale
    double a1 = 0.0;     // terminal linear coefficient, <= 0
    double a2 = 0.0;     // terminal x^m coefficient
    double a3 = 0.0;     // terminal x^gamma coefficient

    double payoff(double x, double m, double gamma) const;  // g(x)
};

struct FreeBoundarySolution {
    double x_star = 0.0;
    // value_at(x) =
    //   alpha b x + beta a x^gamma + a2 x^m + homog_coeff x^m   (x < x_star)
    //   g(x)                                                     (x >= x_star)
    double homog_coeff = 0.0;
    StoppingSpec spec;
    double a = 0.0, b = 0.0, m = 0.0, gamma = 0.0;

    double value_at(double x) const;
    double payoff(double x) const { return spec.payoff(x, m, gamma); }
};

// x_star = ((m-1)/(gamma-m) * (alpha b - a1)/(beta a - a3))^{1/(gamma-1)}.
// Requires a1 <= 0 and beta*a - a3 > 0.
FreeBoundarySolution solve_stopping(const StoppingSpec& spec, const DerivedConstants& consts,
                                    const EconomyParams& econ);

struct OracleResult {
    double y_star = 0.0;
    double value = 0.0;
    bool at_lower_edge = false;
    bool at_upper_edge = false;
    bool edge() const { return at_lower_edge || at_upper_edge; }
};

// Maximises y -> g_v(y) * (x0/y)^m over [y_lo, y_hi]: coarse log-spaced grid
// scan followed by golden-section refinement to relative tolerance rel_tol.
// Flags a maximiser within one grid cell of either bracket end.
OracleResult threshold_oracle(const std::function<double(double)>& g_v, double x0, double y_lo,
                              double y_hi, double rel_tol = 1e-8, double m = 0.0,
                              int grid_points = 1024);

struct VariationalReport {
    double max_obstacle_violation = 0.0;   // max over grid of (g - value)+
    double max_pde_residual = 0.0;         // continuation region, |rho u - Lu - f|, relative
    double min_operator_stopped = 0.0;     // stopped region, min of (rho u - Lu - f), relative
    double pasting_gap = 0.0;              // one-sided derivative mismatch at x_star, relative
    double grid_h = 0.0;                   // log-space step used

    bool pass(double pde_tol, double pasting_tol, double obstacle_tol = 1e-9) const;
};

// Finite-difference check of the Prop-style verification conditions on a
// log-spaced grid: (a) value >= payoff, (b) PDE residual on the continuation
// region, (c) rho u - Lu - f >= -tol on the stopped region, (d) smooth pasting.
VariationalReport verify_variational(const FreeBoundarySolution& sol, const StoppingSpec& spec,
                                     const GbmParams& gbm, const EconomyParams& econ,
                                     std::span<const double> grid);

// Same checks against an arbitrary candidate value function (used to probe
// deliberately corrupted solutions).
VariationalReport verify_variational_fn(const std::function<double(double)>& phi, double x_star,
                                        const StoppingSpec& spec, const GbmParams& gbm,
                                        const EconomyParams& econ, std::span<const double> grid,
                                        double m, double gamma);

// Log-spaced grid helper (n points covering [lo, hi]).
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace carbex
