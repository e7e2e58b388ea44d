#include "carbex/free_boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "carbex/errors.hpp"

namespace carbex {

double StoppingSpec::payoff(double x, double m, double gamma) const {
    return a1 * x + a2 * std::pow(x, m) + a3 * std::pow(x, gamma);
}

double FreeBoundarySolution::value_at(double x) const {
    if (x >= x_star) return payoff(x);
    return spec.alpha * b * x + spec.beta * a * std::pow(x, gamma) +
           (spec.a2 + homog_coeff) * std::pow(x, m);
}

FreeBoundarySolution solve_stopping(const StoppingSpec& spec, const DerivedConstants& consts,
                                    const EconomyParams& econ) {
    // a1 <= 0 in the direct problems; nested stopping stages bundle the next
    // stage's continuation value into the terminal payoff and can push a1
    // above zero. What the solution structure needs is alpha b - a1 > 0.
    const double num = spec.alpha * consts.b - spec.a1;
    if (!(num > 0.0)) throw std::invalid_argument("solve_stopping: requires alpha*b - a1 > 0");
    const double denom = spec.beta * consts.a - spec.a3;
    if (!(denom > 0.0)) throw std::invalid_argument("solve_stopping: requires beta*a - a3 > 0");

    FreeBoundarySolution sol;
    sol.spec = spec;
    sol.a = consts.a;
    sol.b = consts.b;
    sol.m = consts.m;
    sol.gamma = econ.gamma;
    sol.x_star = std::pow((consts.m - 1.0) / (econ.gamma - consts.m) * num / denom,
                          1.0 / (econ.gamma - 1.0));
    // Continuation branch: alpha b x + beta a x^gamma + a2 x^m + A x^m, where A
    // matches the payoff at x_star. The a2 term solves the homogeneous equation
    // and carries straight through (x_star is a2-free).
    const double xs = sol.x_star;
    const double g_minus_a2 =
        spec.a1 * xs + spec.a3 * std::pow(xs, econ.gamma);  // g(x*) - a2 x*^m
    sol.homog_coeff = (g_minus_a2 - spec.alpha * consts.b * xs -
                       spec.beta * consts.a * std::pow(xs, econ.gamma)) /
                      std::pow(xs, consts.m);
    return sol;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0 && hi > lo && n >= 2)) throw std::invalid_argument("log_grid: bad range");
    std::vector<double> g(static_cast<size_t>(n));
    const double u0 = std::log(lo), du = (std::log(hi) - u0) / (n - 1);
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] = std::exp(u0 + du * i);
    g.front() = lo;
    g.back() = hi;
    return g;
}

OracleResult threshold_oracle(const std::function<double(double)>& g_v, double x0, double y_lo,
                              double y_hi, double rel_tol, double m, int grid_points) {
    if (!(x0 > 0.0) || y_lo < x0 || !(y_hi > y_lo))
        throw std::invalid_argument("threshold_oracle: need y_hi > y_lo >= x0 > 0");
    if (grid_points < 8) grid_points = 8;

    const auto objective = [&](double y) { return g_v(y) * std::pow(x0 / y, m); };

    const std::vector<double> grid = log_grid(y_lo, y_hi, grid_points);
    size_t best = 0;
    double best_val = objective(grid[0]);
    for (size_t i = 1; i < grid.size(); ++i) {
        const double v = objective(grid[i]);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }

    OracleResult res;
    res.at_lower_edge = (best == 0);
    res.at_upper_edge = (best + 1 == grid.size());

    // Golden-section on the bracketing cells.
    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[std::min(best + 1, grid.size() - 1)];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = objective(c), fd = objective(d);
    int iters = 0;
    while (hi - lo > rel_tol * std::max(1.0, std::abs(lo))) {
        if (++iters > 400) throw NumericalError("threshold_oracle: golden section stalled");
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = objective(d);
        }
    }
    res.y_star = 0.5 * (lo + hi);
    res.value = objective(res.y_star);
    return res;
}

bool VariationalReport::pass(double pde_tol, double pasting_tol, double obstacle_tol) const {
    return max_obstacle_violation <= obstacle_tol && max_pde_residual <= pde_tol &&
           min_operator_stopped >= -pde_tol && pasting_gap <= pasting_tol;
}

VariationalReport verify_variational(const FreeBoundarySolution& sol, const StoppingSpec& spec,
                                     const GbmParams& gbm, const EconomyParams& econ,
                                     std::span<const double> grid) {
    return verify_variational_fn([&sol](double x) { return sol.value_at(x); }, sol.x_star, spec,
                                 gbm, econ, grid, sol.m, sol.gamma);
}

VariationalReport verify_variational_fn(const std::function<double(double)>& phi, double x_star,
                                        const StoppingSpec& spec, const GbmParams& gbm,
                                        const EconomyParams& econ, std::span<const double> grid,
                                        double m, double gamma) {
    if (grid.size() < 16) throw std::invalid_argument("verify_variational: grid too small");
    VariationalReport rep;

    const double s2 = gbm.sigma * gbm.sigma;
    const double nu = gbm.mu - 0.5 * s2;
    const auto f = [&](double x) { return spec.alpha * x - spec.beta * std::pow(x, gamma); };
    const auto g = [&](double x) { return spec.payoff(x, m, gamma); };

    // (a) obstacle: value >= payoff, relative to the local magnitude.
    for (double x : grid) {
        const double scale = std::max({std::abs(g(x)), std::abs(phi(x)), 1.0});
        rep.max_obstacle_violation =
            std::max(rep.max_obstacle_violation, (g(x) - phi(x)) / scale);
    }

    // (b)/(c) PDE residual in log coordinates: L phi = nu phi_u + s2/2 phi_uu.
    // Uniform log step taken from the grid itself.
    const double h = std::log(grid[1] / grid[0]);
    rep.grid_h = h;
    rep.min_operator_stopped = std::numeric_limits<double>::infinity();
    bool stopped_seen = false;
    for (size_t k = 1; k + 1 < grid.size(); ++k) {
        const double x = grid[k];
        // Skip stencils straddling the free boundary.
        if (grid[k - 1] < x_star && grid[k + 1] > x_star) continue;
        const double pm = phi(grid[k - 1]), p0 = phi(x), pp = phi(grid[k + 1]);
        const double du = (pp - pm) / (2.0 * h);
        const double duu = (pp - 2.0 * p0 + pm) / (h * h);
        const double residual = econ.rho * p0 - nu * du - 0.5 * s2 * duu - f(x);
        const double scale = std::max({std::abs(f(x)), econ.rho * std::abs(p0), 1.0});
        if (x < x_star) {
            rep.max_pde_residual = std::max(rep.max_pde_residual, std::abs(residual) / scale);
        } else {
            stopped_seen = true;
            rep.min_operator_stopped = std::min(rep.min_operator_stopped, residual / scale);
        }
    }
    if (!stopped_seen) rep.min_operator_stopped = 0.0;

    // (d) one-sided first derivatives at the boundary, O(h) in log space.
    // Normalised by the derivative scale of the value function away from the
    // boundary (the payoff may be flat or zero at x_star).
    const double xs = x_star;
    const double left = (phi(xs) - phi(xs * std::exp(-h))) / h;
    const double right = (phi(xs * std::exp(h)) - phi(xs)) / h;
    double dscale = std::max(std::abs(left), std::abs(right));
    for (double f : {0.25, 0.5, 0.75}) {
        const double x = xs * f;
        dscale = std::max(dscale,
                          std::abs(phi(x * std::exp(h)) - phi(x * std::exp(-h))) / (2.0 * h));
    }
    rep.pasting_gap = std::abs(left - right) / std::max(dscale, 1.0);
    return rep;
}

}  // namespace carbex
