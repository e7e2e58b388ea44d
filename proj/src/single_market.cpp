#include "carbex/single_market.hpp"

#include <cmath>
#include <stdexcept>

namespace carbex {

namespace {

// Kahan-compensated running sum.
struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

FirmProfile::FirmProfile(std::vector<Firm> firms) : firms_(std::move(firms)) {
    const size_t n = firms_.size();
    if (n == 0) throw std::invalid_argument("FirmProfile: empty firm list");
    for (size_t i = 0; i < n; ++i) {
        if (!(firms_[i].lambda > 0.0)) throw std::invalid_argument("FirmProfile: lambda_i <= 0");
        if (!(firms_[i].pi > 0.0)) throw std::invalid_argument("FirmProfile: pi_i <= 0");
        if (i > 0 && firms_[i].pi - firms_[i - 1].pi < 1e-12 * firms_[i - 1].pi)
            throw std::invalid_argument("FirmProfile: pi must be strictly increasing");
    }
    lambda_tilde_.resize(n + 1);
    lambda_tilde_[0] = 0.0;
    Kahan acc;
    for (size_t i = 0; i < n; ++i) {
        acc.add(firms_[i].lambda);
        lambda_tilde_[i + 1] = acc.sum;
    }
    if (std::abs(lambda_tilde_[n] - 1.0) > 1e-12)
        throw std::invalid_argument("FirmProfile: shares must sum to 1 (within 1e-12)");
    lambda_tilde_[n] = 1.0;

    pi_bar_.assign(n + 1, 0.0);  // pi_bar_[n] is the empty tail
    for (size_t i = n; i-- > 0;)
        pi_bar_[i] = pi_bar_[i + 1] + firms_[i].pi * firms_[i].lambda;
}

std::vector<double> thresholds(const FirmProfile& profile, const DerivedConstants& consts,
                               const EconomyParams& econ) {
    const int n = profile.size();
    const double gamma = econ.gamma;
    const double front = consts.b * (consts.m - 1.0) / (consts.a * econ.ell * (gamma - consts.m));
    std::vector<double> xhat(static_cast<size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const double num = profile.pi(i) * (profile.lambda(i) + profile.lambda_tilde(i)) -
                           profile.pi(i - 1) * profile.lambda_tilde(i - 1);
        const double den = std::pow(1.0 - profile.lambda_tilde(i - 1), gamma) -
                           std::pow(1.0 - profile.lambda_tilde(i), gamma);
        xhat[static_cast<size_t>(i - 1)] = std::pow(front * num / den, 1.0 / (gamma - 1.0));
    }
    return xhat;
}

std::vector<double> payment_coeffs(const FirmProfile& profile, const std::vector<double>& xhat,
                                   double x0, const DerivedConstants& consts) {
    const int n = profile.size();
    std::vector<double> d(static_cast<size_t>(n), 0.0);
    for (int i = n - 1; i >= 1; --i) {
        const double xj = xhat[static_cast<size_t>(i)];  // x_hat_{i+1}
        const double level = (x0 >= xj) ? x0 : xj;
        d[static_cast<size_t>(i - 1)] =
            d[static_cast<size_t>(i)] +
            consts.b * (profile.pi(i + 1) - profile.pi(i)) * std::pow(level, 1.0 - consts.m);
    }
    return d;
}

double payment_process(int regime, bool at_exit, double x, const FirmProfile& profile,
                       const std::vector<double>& d_coeffs, double epsilon,
                       const DerivedConstants& consts) {
    if (regime < 1 || regime > profile.size())
        throw std::invalid_argument("payment_process: regime index out of range");
    if (!(x > 0.0)) throw std::invalid_argument("payment_process: x must be > 0");
    const double base = profile.c(regime, consts) * x +
                        d_coeffs[static_cast<size_t>(regime - 1)] * std::pow(x, consts.m);
    return at_exit ? base : base - epsilon;
}

ExpectedPayments expected_payments(const FirmProfile& profile, const std::vector<double>& xhat,
                                   const std::vector<double>& d_coeffs, double x0,
                                   const DerivedConstants& consts) {
    const int n = profile.size();
    ExpectedPayments out;
    out.per_firm.resize(static_cast<size_t>(n));
    Kahan total;
    for (int i = 1; i <= n; ++i) {
        const double xi = xhat[static_cast<size_t>(i - 1)];
        const double di = d_coeffs[static_cast<size_t>(i - 1)];
        const double ci = profile.c(i, consts);
        double e;
        if (x0 < xi)
            e = ci * std::pow(xi, 1.0 - consts.m) * std::pow(x0, consts.m) +
                di * std::pow(x0, consts.m);
        else
            e = ci * x0 + di * std::pow(x0, consts.m);
        out.per_firm[static_cast<size_t>(i - 1)] = e;
        total.add(profile.lambda(i) * e);
    }
    out.total = total.sum;
    return out;
}

double regulator_value(const FirmProfile& profile, const std::vector<double>& xhat, double x0,
                       const DerivedConstants& consts, const EconomyParams& econ) {
    const int n = profile.size();
    const double gamma = econ.gamma;
    const double a = consts.a, b = consts.b, m = consts.m;
    Kahan v;
    for (int i = 1; i <= n; ++i) {
        const double xi = xhat[static_cast<size_t>(i - 1)];
        const double xprev = (i == 1) ? 0.0 : xhat[static_cast<size_t>(i - 2)];
        const double lt_prev = profile.lambda_tilde(i - 1);
        const double lt_i = profile.lambda_tilde(i);
        if (x0 < xi) {
            const double bracket =
                -2.0 * profile.pi(i) * profile.lambda(i) * b * xi -
                lt_prev * (profile.pi(i) - profile.pi(i - 1)) * b * xi -
                a * econ.ell *
                    (std::pow(1.0 - lt_prev, gamma) - std::pow(1.0 - lt_i, gamma)) *
                    std::pow(xi, gamma);
            v.add(bracket * std::pow(x0 / xi, m));
        }
        if (xprev <= x0 && x0 < xi)
            v.add(b * profile.pi_bar(i) * x0 +
                  a * econ.ell * std::pow(1.0 - lt_prev, gamma) * std::pow(x0, gamma));
        if (x0 >= xi)
            v.add(-(profile.pi(i) * lt_i - profile.pi(i - 1) * lt_prev) * b * x0);
    }
    return v.sum;
}

SingleMarketSolution solve_single_market(const FirmProfile& profile, double x0,
                                         const DerivedConstants& consts,
                                         const EconomyParams& econ, double epsilon) {
    if (!(x0 > 0.0)) throw std::invalid_argument("solve_single_market: x0 must be > 0");
    SingleMarketSolution sol;
    const std::vector<double> xhat = thresholds(profile, consts, econ);
    const std::vector<double> d = payment_coeffs(profile, xhat, x0, consts);
    const ExpectedPayments pay = expected_payments(profile, xhat, d, x0, consts);
    const int n = profile.size();
    sol.per_firm.resize(static_cast<size_t>(n));
    const double nu = consts.nu;
    for (int i = 0; i < n; ++i) {
        auto& f = sol.per_firm[static_cast<size_t>(i)];
        f.threshold = xhat[static_cast<size_t>(i)];
        f.d_coeff = d[static_cast<size_t>(i)];
        f.expected_payment = pay.per_firm[static_cast<size_t>(i)];
        f.immediate_exit = (x0 >= f.threshold);
        f.expected_exit_time = f.immediate_exit ? 0.0 : std::log(f.threshold / x0) / nu;
    }
    sol.total_expected_payment = pay.total;
    sol.value = regulator_value(profile, xhat, x0, consts, econ);
    sol.epsilon = (epsilon > 0.0) ? epsilon : 1e-9 * profile.c(1, consts) * x0;
    return sol;
}

FirstBest first_best(const GbmParams& gbm, const EconomyParams& econ,
                     const DerivedConstants& consts, double pi) {
    if (!(pi > 0.0)) throw std::invalid_argument("first_best: pi must be > 0");
    FirstBest fb;
    const double gamma = econ.gamma;
    fb.x_bar = std::pow((consts.m - 1.0) / (gamma - consts.m) * (consts.b / consts.a) * pi /
                            econ.ell,
                        1.0 / (gamma - 1.0));
    const double x0 = gbm.x0;
    if (x0 < fb.x_bar) {
        fb.value = consts.b * pi * x0 + consts.a * econ.ell * std::pow(x0, gamma) +
                   (-consts.b * pi * fb.x_bar - consts.a * econ.ell * std::pow(fb.x_bar, gamma)) *
                       std::pow(x0 / fb.x_bar, consts.m);
    } else {
        fb.value = 0.0;  // stop at once
    }
    return fb;
}

FirmProfile share_generator(int n, double theta, double alpha) {
    if (n < 1) throw std::invalid_argument("share_generator: n must be >= 1");
    if (theta < 0.0) throw std::invalid_argument("share_generator: theta must be >= 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("share_generator: alpha must be > 0");
    if (theta == 0.0 && n > 1)
        throw std::invalid_argument(
            "share_generator: theta = 0 yields equal profits, violating the strict ordering");
    std::vector<Firm> firms(static_cast<size_t>(n));
    Kahan norm;
    for (int i = 1; i <= n; ++i) norm.add(std::pow(static_cast<double>(n + 1 - i), -theta));
    const double k_n = 1.0 / norm.sum;
    Kahan running;
    for (int i = 1; i <= n; ++i) {
        double lam = k_n * std::pow(static_cast<double>(n + 1 - i), -theta);
        if (i == n) lam = 1.0 - running.sum;  // absorb rounding so the shares sum to 1 exactly
        running.add(lam);
        firms[static_cast<size_t>(i - 1)] = {lam, alpha * lam};
    }
    return FirmProfile(std::move(firms));
}

AggregateReport aggregate_report(const FirmProfile& profile, const SingleMarketSolution& sol,
                                 const GbmParams& gbm) {
    AggregateReport rep;
    const int n = profile.size();
    int count = 0;
    Kahan share;
    for (int i = 0; i < n; ++i) {
        if (sol.per_firm[static_cast<size_t>(i)].immediate_exit) {
            ++count;
            share.add(profile.lambda(i + 1));
        }
    }
    rep.immediate_fraction = static_cast<double>(count) / n;
    rep.immediate_share = share.sum;
    rep.total_payment = sol.total_expected_payment;
    const double x_last = sol.per_firm.back().threshold;
    rep.time_to_close = (x_last <= gbm.x0) ? 0.0 : expected_hitting_time(gbm, x_last);
    return rep;
}

}  // namespace carbex
