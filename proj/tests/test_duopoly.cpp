#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "carbex/duopoly.hpp"

using namespace carbex;

namespace {

const GbmParams kCrude{0.02, 0.08, 100.0};

struct Setup {
    GbmParams gbm;
    EconomyParams econ;
    DerivedConstants consts;
};

Setup crude10() {
    Setup s{kCrude, {0.10, 4.0, 1.825e4}, {}};
    s.consts = derived_constants(s.gbm, s.econ);
    return s;
}

// The published two-country application: shares 13:10, proportional profits.
DuopolySpec crude_duopoly() {
    const double alpha = 2.6e10;
    return {13.0 / 23.0, 10.0 / 23.0, alpha * 13.0 / 23.0, alpha * 10.0 / 23.0};
}

DuopolySpec random_spec(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DuopolySpec d;
    d.lambda1 = 0.05 + 0.9 * u(rng);
    d.lambda2 = 1.0 - d.lambda1;
    d.pi1 = std::exp(4.0 * u(rng) - 2.0);
    d.pi2 = std::exp(4.0 * u(rng) - 2.0);
    return d;
}

Setup random_setup(std::mt19937_64& rng, double gamma_lo = 2.0, double gamma_hi = 7.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
        Setup s;
        s.gbm.sigma = 0.03 + 0.4 * u(rng);
        s.gbm.mu = 0.5 * s.gbm.sigma * s.gbm.sigma + 0.002 + 0.06 * u(rng);
        s.gbm.x0 = 1.0;
        s.econ.gamma = gamma_lo + (gamma_hi - gamma_lo) * u(rng);
        s.econ.ell = std::exp(-6.0 + 8.0 * u(rng));
        const double big_m = s.econ.gamma * s.gbm.mu +
                             0.5 * s.gbm.sigma * s.gbm.sigma *
                                 (s.econ.gamma * s.econ.gamma - s.econ.gamma);
        s.econ.rho = s.gbm.mu + (big_m - s.gbm.mu) * (0.1 + 0.8 * u(rng));
        if (!validate(s.gbm, s.econ).ok()) continue;
        s.consts = derived_constants(s.gbm, s.econ);
        return s;
    }
}

// Reference utility formulas for the two exit orderings, the test oracle.
double u1_display(const DuopolySpec& d, const Setup& s, const CountryThresholds& c1,
                  const CountryThresholds& c2, double x0) {
    const double a = s.consts.a, b = s.consts.b, m = s.consts.m, g = s.econ.gamma,
                 ell = s.econ.ell;
    const double l2g = std::pow(d.lambda2, g);
    return (-2.0 * d.pi1 * d.lambda1 * b * c1.z_low -
            a * ell * (1.0 - l2g) * std::pow(c1.z_low, g)) *
               std::pow(x0 / c1.z_low, m) +
           (-2.0 * d.pi2 * d.lambda2 * b * c2.z_high - a * ell * l2g * std::pow(c2.z_high, g)) *
               std::pow(x0 / c2.z_high, m) +
           a * ell * std::pow(x0, g) + (d.pi1 * d.lambda1 + d.pi2 * d.lambda2) * b * x0;
}

double u2_display(const DuopolySpec& d, const Setup& s, const CountryThresholds& c1,
                  const CountryThresholds& c2, double x0) {
    const double a = s.consts.a, b = s.consts.b, m = s.consts.m, g = s.econ.gamma,
                 ell = s.econ.ell;
    const double l1g = std::pow(d.lambda1, g);
    return (-2.0 * d.pi2 * d.lambda2 * b * c2.z_low -
            a * ell * (1.0 - l1g) * std::pow(c2.z_low, g)) *
               std::pow(x0 / c2.z_low, m) +
           (-2.0 * d.pi1 * d.lambda1 * b * c1.z_high - a * ell * l1g * std::pow(c1.z_high, g)) *
               std::pow(x0 / c1.z_high, m) +
           a * ell * std::pow(x0, g) + (d.pi1 * d.lambda1 + d.pi2 * d.lambda2) * b * x0;
}

}  // namespace

TEST_CASE("threshold symmetry and the pi-free high/low ratio") {
    const Setup s = crude10();
    {
        const DuopolySpec sym{0.5, 0.5, 3e9, 3e9};
        const auto t = duopoly_thresholds(sym, s.consts, s.econ, Regime::nash);
        CHECK(t.of(1).z_low == doctest::Approx(t.of(2).z_low).epsilon(1e-14));
        CHECK(t.of(1).z_mid == doctest::Approx(t.of(2).z_mid).epsilon(1e-14));
        CHECK(t.of(1).z_high == doctest::Approx(t.of(2).z_high).epsilon(1e-14));
    }
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const Setup rs = random_setup(rng);
        const DuopolySpec d = random_spec(rng);
        const auto t = duopoly_thresholds(d, rs.consts, rs.econ, Regime::nash);
        for (int c = 1; c <= 2; ++c) {
            const double lam = d.lambda(c);
            const double expect = std::pow((1.0 - std::pow(1.0 - lam, rs.econ.gamma)) /
                                               std::pow(lam, rs.econ.gamma),
                                           1.0 / (rs.econ.gamma - 1.0));
            CHECK(t.of(c).z_high / t.of(c).z_low == doctest::Approx(expect).epsilon(1e-10));
            CHECK(t.of(c).z_low < t.of(c).z_mid);
            CHECK(t.of(c).z_mid < t.of(c).z_high);
        }
    }
}

TEST_CASE("crude duopoly reproduces the published thresholds within 10%") {
    const Setup s = crude10();
    const auto t = duopoly_thresholds(crude_duopoly(), s.consts, s.econ, Regime::nash);
    const double table[6] = {135.0, 175.0, 292.0, 119.0, 160.0, 339.0};
    const double ours[6] = {t.of(1).z_low, t.of(1).z_mid, t.of(1).z_high,
                            t.of(2).z_low, t.of(2).z_mid, t.of(2).z_high};
    for (int i = 0; i < 6; ++i) CHECK(std::abs(ours[i] / table[i] - 1.0) <= 0.10);
}

TEST_CASE("regime scalings") {
    std::mt19937_64 rng(11);
    const double tol = 1e-12;
    for (int i = 0; i < 100; ++i) {
        const Setup s = random_setup(rng);
        const DuopolySpec d = random_spec(rng);
        const auto nash = duopoly_thresholds(d, s.consts, s.econ, Regime::nash);
        const auto ind = duopoly_thresholds(d, s.consts, s.econ, Regime::individual);
        const auto cen = duopoly_thresholds(d, s.consts, s.econ, Regime::central);
        const double f2 = std::pow(2.0, -1.0 / (s.econ.gamma - 1.0));
        const double f4 = std::pow(4.0, -1.0 / (s.econ.gamma - 1.0));
        for (int c = 1; c <= 2; ++c) {
            CHECK(std::abs(ind.of(c).z_low / (f2 * nash.of(c).z_low) - 1.0) <= tol);
            CHECK(std::abs(ind.of(c).z_mid / (f2 * nash.of(c).z_mid) - 1.0) <= tol);
            CHECK(std::abs(ind.of(c).z_high / (f2 * nash.of(c).z_high) - 1.0) <= tol);
            CHECK(std::abs(cen.of(c).z_low / (f4 * nash.of(c).z_low) - 1.0) <= tol);
            CHECK(std::abs(cen.of(c).z_mid / (f4 * nash.of(c).z_mid) - 1.0) <= tol);
            CHECK(std::abs(cen.of(c).z_high / (f4 * nash.of(c).z_high) - 1.0) <= tol);
        }
    }
}

TEST_CASE("best response cases") {
    const Setup s = crude10();
    const DuopolySpec d = crude_duopoly();
    const auto t = duopoly_thresholds(d, s.consts, s.econ, Regime::nash);
    const double x0 = 100.0;
    {
        const auto r = best_response(1, t.of(1).z_mid * 1.2, t, x0);
        REQUIRE(r.size() == 1);
        CHECK(r[0] == t.of(1).z_low);
    }
    {
        const auto r = best_response(1, t.of(1).z_mid * 0.8, t, x0);
        REQUIRE(r.size() == 1);
        CHECK(r[0] == t.of(1).z_high);
    }
    {
        const auto r = best_response(2, t.of(2).z_mid, t, x0);
        REQUIRE(r.size() == 2);
        CHECK(r[0] == t.of(2).z_low);
        CHECK(r[1] == t.of(2).z_high);
    }
    CHECK_THROWS_AS(best_response(1, 90.0, t, 95.0), std::invalid_argument);
}

TEST_CASE("objective matches the reference utility formulas") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        const Setup s = random_setup(rng);
        const DuopolySpec d = random_spec(rng);
        const auto t = duopoly_thresholds(d, s.consts, s.econ, Regime::nash);
        const double x0 = 0.5 * std::min(t.of(1).z_low, t.of(2).z_low);
        // The displays assume the exit order of the corresponding equilibrium.
        if (t.of(1).z_low < t.of(2).z_high) {
            const double u1 = regulator_objective(1, t.of(1).z_low, t.of(2).z_high, d, s.consts,
                                                  s.econ, x0) +
                              regulator_objective(2, t.of(1).z_low, t.of(2).z_high, d, s.consts,
                                                  s.econ, x0);
            CHECK(u1 == doctest::Approx(u1_display(d, s, t.of(1), t.of(2), x0)).epsilon(1e-10));
        }
        if (t.of(2).z_low < t.of(1).z_high) {
            const double u2 = regulator_objective(1, t.of(1).z_high, t.of(2).z_low, d, s.consts,
                                                  s.econ, x0) +
                              regulator_objective(2, t.of(1).z_high, t.of(2).z_low, d, s.consts,
                                                  s.econ, x0);
            CHECK(u2 == doctest::Approx(u2_display(d, s, t.of(1), t.of(2), x0)).epsilon(1e-10));
        }
    }
}

TEST_CASE("symmetric spec gives symmetric objectives") {
    const Setup s = crude10();
    const DuopolySpec sym{0.5, 0.5, 4e9, 4e9};
    const auto t = duopoly_thresholds(sym, s.consts, s.econ, Regime::nash);
    const double x0 = 0.5 * t.of(1).z_low;
    const double y = 0.8 * t.of(1).z_high;
    CHECK(regulator_objective(1, y, y, sym, s.consts, s.econ, x0) ==
          doctest::Approx(regulator_objective(2, y, y, sym, s.consts, s.econ, x0))
              .epsilon(1e-12));
}

TEST_CASE("indifference level solves the branch-value equality") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 60; ++i) {
        const Setup s = random_setup(rng);
        const DuopolySpec d = random_spec(rng);
        const auto t = duopoly_thresholds(d, s.consts, s.econ, Regime::nash);
        const double x0 = 0.5 * std::min({t.of(1).z_low, t.of(2).z_low});
        // Country 1's two candidate responses tie exactly when the rival
        // plays z_1: root of F over (z_low, z_high).
        const auto F = [&](double x2) {
            return regulator_objective(1, t.of(1).z_high, x2, d, s.consts, s.econ, x0) -
                   regulator_objective(1, t.of(1).z_low, x2, d, s.consts, s.econ, x0);
        };
        double lo = t.of(1).z_low * 1.0000001, hi = t.of(1).z_high * 0.9999999;
        REQUIRE(F(lo) * F(hi) < 0.0);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (F(mid) > 0.0 ? lo : hi) = mid;  // F > 0 below the indifference point
        }
        const double root = 0.5 * (lo + hi);
        CHECK(std::abs(root - t.of(1).z_mid) <= 1e-3 * t.of(1).z_mid);
    }
}

TEST_CASE("nash classification cases") {
    const Setup s = crude10();
    {
        // Symmetric: z_1 = z_2, two equilibria.
        const DuopolySpec sym{0.5, 0.5, 4e9, 4e9};
        const auto t = duopoly_thresholds(sym, s.consts, s.econ, Regime::nash);
        const auto eq = classify_nash(sym, s.consts, s.econ, 0.5 * t.of(1).z_low);
        CHECK(eq.equilibria.size() == 2);
    }
    {
        // Published two-country case: z_2 < z_1 with the overlap condition.
        const auto eq = classify_nash(crude_duopoly(), s.consts, s.econ, 100.0);
        REQUIRE(eq.equilibria.size() == 2);
        CHECK(eq.equilibria[0].first_exit == 2);
        CHECK(eq.equilibria[1].first_exit == 1);
        CHECK(eq.equilibria[0].first_threshold < eq.equilibria[0].second_threshold);
        CHECK(eq.equilibria[1].first_threshold < eq.equilibria[1].second_threshold);
    }
    {
        // gamma = 2, proportional profits, small lambda_1: either a unique
        // equilibrium (z_1 < z_{2,l}) or two (overlap); classification must
        // match the inequality exactly.
        std::mt19937_64 rng(47);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        bool saw_unique = false, saw_two = false;
        for (int i = 0; i < 200; ++i) {
            const Setup rs = random_setup(rng, 2.0, 2.0);
            DuopolySpec d;
            d.lambda1 = 0.03 + 0.44 * u(rng);
            d.lambda2 = 1.0 - d.lambda1;
            const double alpha = std::exp(4.0 * u(rng) - 2.0);
            d.pi1 = alpha * d.lambda1;
            d.pi2 = alpha * d.lambda2;
            const auto t = duopoly_thresholds(d, rs.consts, rs.econ, Regime::nash);
            // Remark-style orderings for this family; the high thresholds tie
            // exactly at gamma = 2 with proportional profits.
            CHECK(t.of(1).z_low < t.of(2).z_low);
            CHECK(t.of(2).z_high <= t.of(1).z_high * (1.0 + 1e-12));
            CHECK(t.of(1).z_mid < t.of(2).z_mid);
            const auto eq =
                classify_nash(d, rs.consts, rs.econ, 0.5 * std::min(t.of(1).z_low, t.of(2).z_low));
            if (t.of(1).z_mid < t.of(2).z_low) {
                CHECK(eq.equilibria.size() == 1);
                CHECK(eq.equilibria[0].first_exit == 1);
                saw_unique = true;
            } else {
                CHECK(eq.equilibria.size() == 2);
                saw_two = true;
            }
        }
        CHECK(saw_unique);
        CHECK(saw_two);
    }
    CHECK_THROWS_AS(classify_nash(crude_duopoly(), s.consts, s.econ, 500.0),
                    std::invalid_argument);
}

TEST_CASE("proportional-profit orderings for gamma above 2") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Setup s = random_setup(rng, 2.05, 7.0);
        DuopolySpec d;
        d.lambda1 = 0.03 + 0.44 * u(rng);
        d.lambda2 = 1.0 - d.lambda1;
        const double alpha = std::exp(4.0 * u(rng) - 2.0);
        d.pi1 = alpha * d.lambda1;
        d.pi2 = alpha * d.lambda2;
        const auto t = duopoly_thresholds(d, s.consts, s.econ, Regime::nash);
        CHECK(t.of(1).z_low < t.of(2).z_low);
        CHECK(t.of(2).z_high < t.of(1).z_high);
    }
}

TEST_CASE("equilibria are mutual best responses") {
    std::mt19937_64 rng(59);
    for (int i = 0; i < 100; ++i) {
        const Setup s = random_setup(rng);
        const DuopolySpec d = random_spec(rng);
        const auto t = duopoly_thresholds(d, s.consts, s.econ, Regime::nash);
        const double x0 = 0.4 * std::min(t.of(1).z_low, t.of(2).z_low);
        const auto eq = classify_nash(d, s.consts, s.econ, x0);
        for (const auto& e : eq.equilibria) {
            const double x1 = e.first_exit == 1 ? e.first_threshold : e.second_threshold;
            const double x2 = e.first_exit == 1 ? e.second_threshold : e.first_threshold;
            const auto br1 = best_response(1, x2, t, x0);
            const auto br2 = best_response(2, x1, t, x0);
            CHECK(std::any_of(br1.begin(), br1.end(),
                              [&](double v) { return std::abs(v - x1) <= 1e-12 * x1; }));
            CHECK(std::any_of(br2.begin(), br2.end(),
                              [&](double v) { return std::abs(v - x2) <= 1e-12 * x2; }));
        }
    }
}

TEST_CASE("individual and central solutions") {
    const Setup s = crude10();
    const DuopolySpec d = crude_duopoly();
    {
        const auto ind = individual_solution(d, s.consts, s.econ, 90.0);
        REQUIRE(ind.equilibria.size() == 1);
        const auto nash = classify_nash(d, s.consts, s.econ, 90.0);
        for (const auto& e : nash.equilibria) CHECK(ind.equilibria[0].utility >= e.utility);
    }
    {
        // Central: country 2's first-exit threshold sits below x0 = 100.
        const auto cen = central_solution(d, s.consts, s.econ, 100.0);
        REQUIRE(cen.equilibria.size() == 1);
        CHECK(cen.equilibria[0].first_exit == 2);
        CHECK(cen.equilibria[0].first_immediate);
        CHECK(cen.equilibria[0].first_threshold < 100.0);
    }
    {
        const DuopolySpec sym{0.5, 0.5, 4e9, 4e9};
        const auto t = duopoly_thresholds(sym, s.consts, s.econ, Regime::individual);
        const auto ind = individual_solution(sym, s.consts, s.econ, 0.5 * t.of(1).z_low);
        REQUIRE(ind.equilibria.size() == 2);
        CHECK(ind.equilibria[0].utility == doctest::Approx(ind.equilibria[1].utility));
    }
    // x0 at or above the second exit threshold is rejected.
    CHECK_THROWS_AS(central_solution(d, s.consts, s.econ, 1e4), std::invalid_argument);
}

TEST_CASE("uniform scheme against the single-market specialisation") {
    const Setup s = crude10();
    {
        // pi1 < pi2 required.
        CHECK_THROWS_AS(uniform_two_firm(crude_duopoly(), s.consts, s.econ, 100.0),
                        std::invalid_argument);
    }
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        const Setup rs = random_setup(rng);
        DuopolySpec d = random_spec(rng);
        if (d.pi1 >= d.pi2) std::swap(d.pi1, d.pi2);
        if (d.pi1 >= d.pi2 * (1.0 - 1e-9)) continue;
        const auto t = duopoly_thresholds(d, rs.consts, rs.econ, Regime::individual);
        const auto uni = uniform_two_firm(d, rs.consts, rs.econ,
                                          0.5 * std::min(t.of(1).z_low, t.of(2).z_low));
        // x_hat_1 coincides with the individual-contract first threshold.
        CHECK(uni.xhat1 == doctest::Approx(t.of(1).z_low).epsilon(1e-10));
        if (t.of(1).z_mid < t.of(2).z_mid) {
            const double x0 = 0.5 * std::min(t.of(1).z_low, t.of(2).z_low);
            const auto ind = individual_solution(d, rs.consts, rs.econ, x0);
            const auto uni0 = uniform_two_firm(d, rs.consts, rs.econ, x0);
            CHECK(t.of(2).z_high < uni0.xhat2);
            CHECK(ind.equilibria[0].utility > uni0.value);
        }
    }
}

TEST_CASE("uniform second threshold can sit below the individual one") {
    // lambda_1 = 0.1, gamma = 2, pi = (1, 5): z_hat_{1,h} = 20 k while
    // x_hat_2 = (9.4/0.81) k with k = (m-1)/(2-m) b/(ell a).
    std::mt19937_64 rng(67);
    const Setup s = random_setup(rng, 2.0, 2.0);
    const DuopolySpec d{0.1, 0.9, 1.0, 5.0};
    const double k = (s.consts.m - 1.0) / (2.0 - s.consts.m) * s.consts.b /
                     (s.econ.ell * s.consts.a);
    const auto t = duopoly_thresholds(d, s.consts, s.econ, Regime::individual);
    CHECK(t.of(1).z_high == doctest::Approx(20.0 * k).epsilon(1e-10));
    const auto uni = uniform_two_firm(d, s.consts, s.econ, 1e-3 * k);
    CHECK(uni.xhat2 == doctest::Approx(9.4 / 0.81 * k).epsilon(1e-10));
    CHECK(t.of(1).z_high > uni.xhat2);
}

TEST_CASE("regime comparison ordering for the gamma = 2 proportional family") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        const Setup s = random_setup(rng, 2.0, 2.0);
        DuopolySpec d;
        d.lambda1 = 0.05 + 0.4 * u(rng);
        d.lambda2 = 1.0 - d.lambda1;
        const double alpha = std::exp(4.0 * u(rng) - 2.0);
        d.pi1 = alpha * d.lambda1;
        d.pi2 = alpha * d.lambda2;
        const auto cen = duopoly_thresholds(d, s.consts, s.econ, Regime::central);
        const double x0 = 0.5 * std::min(cen.of(1).z_low, cen.of(2).z_low);
        const auto rep = compare_regimes(d, s.consts, s.econ, x0);
        CHECK(rep.ordering_holds);
        CHECK(rep.u_nash_best <= rep.u_individual + 1e-9 * std::abs(rep.u_individual));
        CHECK(rep.u_individual <= rep.u_central + 1e-9 * std::abs(rep.u_central));
        // First exits come earliest without compensation, latest in the game.
        CHECK(rep.central.of(1).z_low < rep.individual.of(1).z_low);
        CHECK(rep.individual.of(1).z_low < rep.nash.of(1).z_low);
    }
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(validate_duopoly({0.6, 0.6, 1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate_duopoly({0.5, 0.5, -1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate_duopoly({1.2, -0.2, 1.0, 2.0}), std::invalid_argument);
}
