#include "carbex/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace carbex {

bool ValidationReport::ok() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string ValidationReport::failure_summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        if (c.pass) continue;
        os << c.name << " violated (value " << c.value << ", bound " << c.bound << ")\n";
    }
    return os.str();
}

ValidationReport validate(const GbmParams& gbm, const EconomyParams& econ) {
    ValidationReport r;
    auto add = [&r](std::string name, bool pass, double value, double bound) {
        r.checks.push_back({std::move(name), pass, value, bound});
    };
    add("sigma > 0", gbm.sigma > 0.0, gbm.sigma, 0.0);
    add("x0 > 0", gbm.x0 > 0.0, gbm.x0, 0.0);
    add("gamma >= 2", econ.gamma >= 2.0, econ.gamma, 2.0);
    add("ell > 0", econ.ell > 0.0, econ.ell, 0.0);
    const double half_var = 0.5 * gbm.sigma * gbm.sigma;
    add("mu > sigma^2/2", gbm.mu > half_var, gbm.mu, half_var);
    add("rho > mu", econ.rho > gbm.mu, econ.rho, gbm.mu);
    const double big_m =
        econ.gamma * gbm.mu + half_var * (econ.gamma * econ.gamma - econ.gamma);
    add("rho < gamma*mu + sigma^2*(gamma^2-gamma)/2", econ.rho < big_m, econ.rho, big_m);
    return r;
}

double root_exponent(double mu, double sigma, double rho) {
    const double s2 = sigma * sigma;
    const double h = 0.5 - mu / s2;
    const double disc = std::sqrt(h * h + 2.0 * rho / s2);
    // h + disc cancels when h < 0 and 2 rho/s2 << h^2 (small sigma);
    // the conjugate form divides by disc - h > 0 instead.
    double m = (h <= 0.0) ? (2.0 * rho / s2) / (disc - h) : h + disc;
    // One Newton step on q(m) = -rho + mu m + s2 (m^2 - m)/2.
    const double q = -rho + mu * m + 0.5 * s2 * (m * m - m);
    const double dq = mu + 0.5 * s2 * (2.0 * m - 1.0);
    m -= q / dq;
    return m;
}

DerivedConstants derived_constants(const GbmParams& gbm, const EconomyParams& econ) {
    const ValidationReport r = validate(gbm, econ);
    if (!r.ok())
        throw std::invalid_argument("invalid model parameters:\n" + r.failure_summary());
    DerivedConstants c;
    c.big_m = econ.gamma * gbm.mu +
              0.5 * gbm.sigma * gbm.sigma * (econ.gamma * econ.gamma - econ.gamma);
    c.a = 1.0 / (c.big_m - econ.rho);
    c.b = 1.0 / (econ.rho - gbm.mu);
    c.m = root_exponent(gbm.mu, gbm.sigma, econ.rho);
    c.nu = gbm.mu - 0.5 * gbm.sigma * gbm.sigma;
    return c;
}

double expected_discount_factor(const GbmParams& gbm, double rho, double x_hat) {
    if (!(x_hat > 0.0)) throw std::invalid_argument("expected_discount_factor: x_hat must be > 0");
    if (gbm.x0 >= x_hat) return 1.0;
    const double m = root_exponent(gbm.mu, gbm.sigma, rho);
    return std::pow(gbm.x0 / x_hat, m);
}

double expected_hitting_time(const GbmParams& gbm, double x_hat) {
    if (x_hat < gbm.x0)
        throw std::invalid_argument("expected_hitting_time: x_hat below x0 (downward threshold)");
    const double nu = gbm.mu - 0.5 * gbm.sigma * gbm.sigma;
    return std::log(x_hat / gbm.x0) / nu;
}

}  // namespace carbex
