#include "carbex/duopoly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "carbex/single_market.hpp"

namespace carbex {

namespace {

constexpr double kTieTol = 1e-9;  // relative tolerance for z_1 == z_2 branches

bool near_equal(double a, double b) {
    return std::abs(a - b) <= kTieTol * std::max(std::abs(a), std::abs(b));
}

double payment_weight(Regime r) { return r == Regime::central ? 1.0 : 2.0; }

// Numerator factor of the threshold formulas: 4 in the Nash game
// (compensation doubled, half damage), 2 with one regulator and individual
// contracts, 1 without compensation.
double regime_factor(Regime r) {
    switch (r) {
        case Regime::nash: return 4.0;
        case Regime::individual: return 2.0;
        case Regime::central: return 1.0;
    }
    return 4.0;
}

}  // namespace

void validate_duopoly(const DuopolySpec& spec) {
    if (!(spec.lambda1 > 0.0 && spec.lambda1 < 1.0 && spec.lambda2 > 0.0 && spec.lambda2 < 1.0))
        throw std::invalid_argument("duopoly: shares must lie in (0,1)");
    if (std::abs(spec.lambda1 + spec.lambda2 - 1.0) > 1e-12)
        throw std::invalid_argument("duopoly: lambda1 + lambda2 must equal 1 (within 1e-12)");
    if (!(spec.pi1 > 0.0 && spec.pi2 > 0.0))
        throw std::invalid_argument("duopoly: unit profits must be > 0");
}

DuopolyThresholds duopoly_thresholds(const DuopolySpec& spec, const DerivedConstants& consts,
                                     const EconomyParams& econ, Regime regime) {
    validate_duopoly(spec);
    const double gamma = econ.gamma;
    const double a = consts.a, b = consts.b, m = consts.m;
    const double kappa = regime_factor(regime);
    const double cross = 1.0 - std::pow(spec.lambda1, gamma) - std::pow(spec.lambda2, gamma);

    DuopolyThresholds out;
    out.regime = regime;
    for (int i = 1; i <= 2; ++i) {
        const double lam = spec.lambda(i);
        const double pil = spec.pi(i) * lam;
        const double lead = (m - 1.0) / (gamma - m) * kappa * pil * b / (a * econ.ell);
        const double low_den = 1.0 - std::pow(1.0 - lam, gamma);
        const double high_den = std::pow(lam, gamma);
        CountryThresholds c;
        c.z_low = std::pow(lead / low_den, 1.0 / (gamma - 1.0));
        c.z_high = std::pow(lead / high_den, 1.0 / (gamma - 1.0));
        const double num = kappa * pil * b *
                               (std::pow(c.z_low, 1.0 - m) - std::pow(c.z_high, 1.0 - m)) +
                           a * econ.ell * low_den * std::pow(c.z_low, gamma - m) -
                           a * econ.ell * high_den * std::pow(c.z_high, gamma - m);
        c.z_mid = std::pow(num / (a * econ.ell * cross), 1.0 / (gamma - m));
        out.country[static_cast<size_t>(i - 1)] = c;
    }
    return out;
}

double regulator_objective(int country, double x1, double x2, const DuopolySpec& spec,
                           const DerivedConstants& consts, const EconomyParams& econ, double x0,
                           Regime regime) {
    validate_duopoly(spec);
    if (country != 1 && country != 2)
        throw std::invalid_argument("regulator_objective: country must be 1 or 2");
    if (!(x1 > 0.0 && x2 > 0.0 && x0 > 0.0))
        throw std::invalid_argument("regulator_objective: levels must be > 0");
    const double gamma = econ.gamma;
    const double a = consts.a, b = consts.b, m = consts.m;
    const double w = payment_weight(regime);
    const int j = 3 - country;
    const double lam_i = spec.lambda(country), lam_j = spec.lambda(j);
    const double pil = spec.pi(country) * lam_i;

    // Hitting levels at or below x0 hit at time 0.
    const double own = std::max(country == 1 ? x1 : x2, x0);
    const double rival = std::max(country == 1 ? x2 : x1, x0);
    const double disc_own = std::pow(x0 / own, m);
    const double disc_rival = std::pow(x0 / rival, m);

    const double base = pil * b * x0 + 0.5 * a * econ.ell * std::pow(x0, gamma);
    const bool own_first = (country == 1) ? (x1 < x2) : (x2 < x1);  // ties: rival-first branch
    double value = base;
    if (own_first) {
        value += (-w * pil * b * own -
                  0.5 * a * econ.ell * (1.0 - std::pow(lam_j, gamma)) * std::pow(own, gamma)) *
                     disc_own -
                 0.5 * a * econ.ell * std::pow(lam_j, gamma) * std::pow(rival, gamma) * disc_rival;
    } else {
        value += (-w * pil * b * own -
                  0.5 * a * econ.ell * std::pow(lam_i, gamma) * std::pow(own, gamma)) *
                     disc_own -
                 0.5 * a * econ.ell * (1.0 - std::pow(lam_i, gamma)) * std::pow(rival, gamma) *
                     disc_rival;
    }
    return value;
}

std::vector<double> best_response(int country, double other_threshold,
                                  const DuopolyThresholds& thresholds, double x0) {
    if (country != 1 && country != 2)
        throw std::invalid_argument("best_response: country must be 1 or 2");
    const CountryThresholds& c = thresholds.of(country);
    if (!(x0 < std::min(c.z_low, other_threshold)))
        throw std::invalid_argument("best_response: requires x0 < min(z_{i,l}, x_j)");
    if (near_equal(other_threshold, c.z_mid)) return {c.z_low, c.z_high};
    if (other_threshold > c.z_mid) return {c.z_low};
    return {c.z_high};
}

namespace {

Equilibrium make_outcome(int first, double first_thr, double second_thr, const DuopolySpec& spec,
                         const DerivedConstants& consts, const EconomyParams& econ, double x0,
                         Regime regime) {
    Equilibrium e;
    e.first_exit = first;
    e.first_threshold = first_thr;
    e.second_threshold = second_thr;
    e.first_immediate = (first_thr <= x0);
    const double x1 = (first == 1) ? first_thr : second_thr;
    const double x2 = (first == 1) ? second_thr : first_thr;
    e.utility = regulator_objective(1, x1, x2, spec, consts, econ, x0, regime) +
                regulator_objective(2, x1, x2, spec, consts, econ, x0, regime);
    return e;
}

// Shared structure of the individual / central solutions: the regulator picks
// the ordering by the sign of z_1 - z_mid ... by comparing z_mid levels.
EquilibriumOutcome ordered_solution(const DuopolySpec& spec, const DerivedConstants& consts,
                                    const EconomyParams& econ, double x0, Regime regime) {
    const DuopolyThresholds t = duopoly_thresholds(spec, consts, econ, regime);
    EquilibriumOutcome out;
    out.regime = regime;
    const auto push = [&](int first) {
        const double first_thr = t.of(first).z_low;
        const double second_thr = t.of(3 - first).z_high;
        if (x0 >= second_thr)
            throw std::invalid_argument(
                "duopoly solution: x0 at or above the second exit threshold");
        out.equilibria.push_back(
            make_outcome(first, first_thr, second_thr, spec, consts, econ, x0, regime));
    };
    if (near_equal(t.of(1).z_mid, t.of(2).z_mid)) {
        push(1);
        push(2);
    } else if (t.of(1).z_mid < t.of(2).z_mid) {
        push(1);
    } else {
        push(2);
    }
    return out;
}

}  // namespace

EquilibriumOutcome classify_nash(const DuopolySpec& spec, const DerivedConstants& consts,
                                 const EconomyParams& econ, double x0) {
    const DuopolyThresholds t = duopoly_thresholds(spec, consts, econ, Regime::nash);
    const double z1 = t.of(1).z_mid, z2 = t.of(2).z_mid;
    if (!(x0 < std::min(t.of(1).z_low, t.of(2).z_low)))
        throw std::invalid_argument("classify_nash: requires x0 < min(z_{1,l}, z_{2,l})");

    EquilibriumOutcome out;
    out.regime = Regime::nash;
    const auto two_equilibria = [&] {
        out.equilibria.push_back(
            make_outcome(2, t.of(2).z_low, t.of(1).z_high, spec, consts, econ, x0, Regime::nash));
        out.equilibria.push_back(
            make_outcome(1, t.of(1).z_low, t.of(2).z_high, spec, consts, econ, x0, Regime::nash));
    };
    if (near_equal(z1, z2)) {
        two_equilibria();
    } else if (z1 < z2) {
        if (t.of(2).z_low <= z1 && z2 <= t.of(1).z_high)
            two_equilibria();
        else
            out.equilibria.push_back(make_outcome(1, t.of(1).z_low, t.of(2).z_high, spec, consts,
                                                  econ, x0, Regime::nash));
    } else {
        if (t.of(1).z_low <= z2 && z1 <= t.of(2).z_high)
            two_equilibria();
        else
            out.equilibria.push_back(make_outcome(2, t.of(2).z_low, t.of(1).z_high, spec, consts,
                                                  econ, x0, Regime::nash));
    }
    return out;
}

EquilibriumOutcome individual_solution(const DuopolySpec& spec, const DerivedConstants& consts,
                                       const EconomyParams& econ, double x0) {
    return ordered_solution(spec, consts, econ, x0, Regime::individual);
}

EquilibriumOutcome central_solution(const DuopolySpec& spec, const DerivedConstants& consts,
                                    const EconomyParams& econ, double x0) {
    return ordered_solution(spec, consts, econ, x0, Regime::central);
}

UniformSolution uniform_two_firm(const DuopolySpec& spec, const DerivedConstants& consts,
                                 const EconomyParams& econ, double x0) {
    validate_duopoly(spec);
    if (!(spec.pi1 < spec.pi2))
        throw std::invalid_argument("uniform_two_firm: requires pi1 < pi2");
    const FirmProfile profile({{spec.lambda1, spec.pi1}, {spec.lambda2, spec.pi2}});
    const std::vector<double> xhat = thresholds(profile, consts, econ);
    UniformSolution u;
    u.xhat1 = xhat[0];
    u.xhat2 = xhat[1];
    u.value = regulator_value(profile, xhat, x0, consts, econ);
    return u;
}

ComparisonReport compare_regimes(const DuopolySpec& spec, const DerivedConstants& consts,
                                 const EconomyParams& econ, double x0) {
    ComparisonReport rep;
    rep.nash = duopoly_thresholds(spec, consts, econ, Regime::nash);
    rep.individual = duopoly_thresholds(spec, consts, econ, Regime::individual);
    rep.central = duopoly_thresholds(spec, consts, econ, Regime::central);
    rep.nash_eq = classify_nash(spec, consts, econ, x0);
    rep.individual_eq = individual_solution(spec, consts, econ, x0);
    rep.central_eq = central_solution(spec, consts, econ, x0);
    rep.u_nash_best = rep.nash_eq.equilibria.front().utility;
    rep.u_nash_worst = rep.u_nash_best;
    for (const auto& e : rep.nash_eq.equilibria) {
        rep.u_nash_best = std::max(rep.u_nash_best, e.utility);
        rep.u_nash_worst = std::min(rep.u_nash_worst, e.utility);
    }
    rep.u_individual = rep.individual_eq.equilibria.front().utility;
    rep.u_central = rep.central_eq.equilibria.front().utility;
    rep.ordering_holds = rep.u_nash_best <= rep.u_individual * (1.0 + 1e-12) + 1e-9 &&
                         rep.u_individual <= rep.u_central * (1.0 + 1e-12) + 1e-9;
    return rep;
}

}  // namespace carbex
