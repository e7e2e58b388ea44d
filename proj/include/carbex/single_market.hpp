#pragma once

#include <vector>

#include "carbex/model.hpp"

// Single market, one regulator, N firms under the uniform exit-compensation
// scheme: exit thresholds, the payment process, expected payments and exit
// times, regulator value, plus the single-firm first-best benchmark.

namespace carbex {

struct Firm {
    double lambda = 0.0;  // market share, in (0,1)
    double pi = 0.0;      // unit profit (money/y per production unit)
};

// Ordered firm list (pi strictly increasing, shares summing to 1) with the
// cumulative/tail aggregates cached at construction:
//   lambda_tilde_i = sum_{j<=i} lambda_j   (compensated summation)
//   pi_bar_i       = sum_{j>=i} pi_j lambda_j
class FirmProfile {
  public:
    explicit FirmProfile(std::vector<Firm> firms);

    int size() const { return static_cast<int>(firms_.size()); }
    const std::vector<Firm>& firms() const { return firms_; }
    double lambda(int i) const { return firms_[static_cast<size_t>(i - 1)].lambda; }
    double pi(int i) const { return i == 0 ? 0.0 : firms_[static_cast<size_t>(i - 1)].pi; }
    // lambda_tilde(0) = 0, lambda_tilde(N) = 1.
    double lambda_tilde(int i) const { return lambda_tilde_[static_cast<size_t>(i)]; }
    // pi_bar(N+1) = 0.
    double pi_bar(int i) const { return pi_bar_[static_cast<size_t>(i - 1)]; }
    // c_i = pi_i / (rho - mu) = pi_i * b; c_0 = 0.
    double c(int i, const DerivedConstants& consts) const { return pi(i) * consts.b; }

  private:
    std::vector<Firm> firms_;
    std::vector<double> lambda_tilde_;  // size N+1
    std::vector<double> pi_bar_;        // size N+1, pi_bar_[i-1] = pi_bar_i
};

struct PerFirmOutcome {
    double threshold = 0.0;         // x_hat_i
    double d_coeff = 0.0;           // d_i (money per unit^m)
    double expected_payment = 0.0;  // E[e^{-rho tau_i} Yhat_{tau_i}]
    double expected_exit_time = 0.0;
    bool immediate_exit = false;    // x0 >= x_hat_i
};

struct SingleMarketSolution {
    std::vector<PerFirmOutcome> per_firm;
    double value = 0.0;                   // v(x0)
    double total_expected_payment = 0.0;  // sum_i lambda_i E[e^{-rho tau_i} Yhat_{tau_i}]
    double epsilon = 0.0;                 // strict-incentive gap
};

// x_hat_i per the threshold formula; strictly increasing in i.
std::vector<double> thresholds(const FirmProfile& profile, const DerivedConstants& consts,
                               const EconomyParams& econ);

// d_i = sum_{j>i} b (pi_j - pi_{j-1}) * (x0^{1-m} if x0 >= x_hat_j else x_hat_j^{1-m});
// d_N = 0. Non-increasing in i.
std::vector<double> payment_coeffs(const FirmProfile& profile, const std::vector<double>& xhat,
                                   double x0, const DerivedConstants& consts);

// Posted offer in regime i (firms 1..i-1 already out): c_i x + d_i x^m - epsilon
// on open intervals, c_i x + d_i x^m at exit instants.
double payment_process(int regime, bool at_exit, double x, const FirmProfile& profile,
                       const std::vector<double>& d_coeffs, double epsilon,
                       const DerivedConstants& consts);

// Per-firm E[e^{-rho tau_i} Yhat_{tau_i}] and the lambda-weighted total.
struct ExpectedPayments {
    std::vector<double> per_firm;
    double total = 0.0;
};
ExpectedPayments expected_payments(const FirmProfile& profile, const std::vector<double>& xhat,
                                   const std::vector<double>& d_coeffs, double x0,
                                   const DerivedConstants& consts);

// v(x0): the three-indicator closed form of the N-firm value function.
double regulator_value(const FirmProfile& profile, const std::vector<double>& xhat, double x0,
                       const DerivedConstants& consts, const EconomyParams& econ);

// Full assembly with epsilon defaulted to 1e-9 * c_1 * x0.
SingleMarketSolution solve_single_market(const FirmProfile& profile, double x0,
                                         const DerivedConstants& consts,
                                         const EconomyParams& econ, double epsilon = -1.0);

// First-best single-firm benchmark: threshold x_bar_1 and planner value u(x0).
// The second-best threshold satisfies x_hat_1 = 2^{1/(gamma-1)} x_bar_1.
struct FirstBest {
    double x_bar = 0.0;
    double value = 0.0;
};
FirstBest first_best(const GbmParams& gbm, const EconomyParams& econ,
                     const DerivedConstants& consts, double pi);

// lambda_i = K_N / (N+1-i)^theta (increasing in i), pi_i = alpha lambda_i.
// theta == 0 would give equal profits and is rejected.
FirmProfile share_generator(int n, double theta, double alpha);

struct AggregateReport {
    double immediate_fraction = 0.0;  // #{i : x_hat_i <= x0} / N
    double immediate_share = 0.0;     // sum of those lambda_i
    double total_payment = 0.0;
    double time_to_close = 0.0;       // E[hitting time of x_hat_N], 0 if already past
};
AggregateReport aggregate_report(const FirmProfile& profile, const SingleMarketSolution& sol,
                                 const GbmParams& gbm);

}  // namespace carbex
