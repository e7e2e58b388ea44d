#include "carbex/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <stdexcept>
#include <thread>

namespace carbex {

namespace {

// ---------------------------------------------------------------- RNG core

struct U128 {
    std::uint32_t c[4];
};

// Philox4x32-10 block at the given 128-bit counter / 64-bit key.
inline U128 philox(std::uint64_t ctr_lo, std::uint64_t ctr_hi, std::uint32_t k0,
                   std::uint32_t k1) {
    constexpr std::uint32_t wA = 0x9E3779B9u, wB = 0xBB67AE85u;
    constexpr std::uint32_t mA = 0xD2511F53u, mB = 0xCD9E8D57u;
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
    for (int r = 0; r < 10; ++r) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(mA) * c0;
        const std::uint64_t p1 = static_cast<std::uint64_t>(mB) * c2;
        const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
        const std::uint32_t n1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
        const std::uint32_t n3 = static_cast<std::uint32_t>(p0);
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
        k0 += wA;
        k1 += wB;
    }
    return U128{{c0, c1, c2, c3}};
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline double to_unit_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;  // (0,1], log-safe
}

inline double to_unit_half_open(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1p-53;  // [0,1)
}

inline std::uint64_t word64(const U128& r, int i) {
    return (static_cast<std::uint64_t>(r.c[2 * i]) << 32) |
           static_cast<std::uint64_t>(r.c[2 * i + 1]);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Box-Muller pair from one block; the sine comes from the quadrant identity.
inline void normal_pair(const U128& r, double& z0, double& z1) {
    const double u1 = to_unit_open(word64(r, 0));
    const double u2 = to_unit_half_open(word64(r, 1));
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double c = std::cos(kTwoPi * u2);
    const double s = std::copysign(std::sqrt(std::max(0.0, 1.0 - c * c)), 0.5 - u2);
    z0 = rad * c;
    z1 = rad * s;
}

// Purpose lanes: normals and bridge uniforms never share a counter, so
// skipping a bridge draw cannot shift any other stream.
constexpr std::uint64_t kPurposeBridge = 1ull << 62;

// Sequential per-path cursor amortising one Philox call per two steps.
struct NormalStream {
    std::uint32_t k0, k1;
    std::uint64_t path;
    std::int64_t blk = -1;
    double z0 = 0.0, z1 = 0.0;

    NormalStream(const GbmSampler& s, std::int64_t p)
        : k0(static_cast<std::uint32_t>(s.key0())),
          k1(static_cast<std::uint32_t>(s.key1())),
          path(static_cast<std::uint64_t>(p)) {}

    double operator()(std::int64_t step) {
        const std::int64_t b = step >> 1;
        if (b != blk) {
            blk = b;
            normal_pair(philox(path, static_cast<std::uint64_t>(b), k0, k1), z0, z1);
        }
        return (step & 1) ? z1 : z0;
    }
};

// ------------------------------------------------------- block accumulation

constexpr std::int64_t kBlockPaths = 1024;

struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

// Per-block running moments (Welford), merged in block order afterwards, so
// results do not depend on which thread ran which block and constant samples
// give an exactly zero variance.
struct BlockMoments {
    std::int64_t count = 0;
    double mean = 0.0, m2 = 0.0;
    std::int64_t truncated = 0;

    void add(double v) {
        ++count;
        const double d = v - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (v - mean);
    }
};

McEstimate reduce_moments(const std::vector<BlockMoments>& blocks, std::int64_t n) {
    std::int64_t count = 0, trunc = 0;
    double mean = 0.0, m2 = 0.0;
    for (const auto& b : blocks) {
        trunc += b.truncated;
        if (b.count == 0) continue;
        const double delta = b.mean - mean;
        const std::int64_t total = count + b.count;
        m2 += b.m2 + delta * delta * static_cast<double>(count) *
                         static_cast<double>(b.count) / static_cast<double>(total);
        mean += delta * static_cast<double>(b.count) / static_cast<double>(total);
        count = total;
    }
    McEstimate e;
    e.n_effective = n;
    e.mean = mean;
    const double var = n > 1 ? std::max(0.0, m2 / static_cast<double>(n - 1)) : 0.0;
    e.stderr_ = std::sqrt(var / static_cast<double>(n));
    e.truncated_fraction = static_cast<double>(trunc) / static_cast<double>(n);
    return e;
}

void run_blocks(std::int64_t n_paths, int threads,
                const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) {
    const std::int64_t n_blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
    if (threads <= 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b)
            fn(b, b * kBlockPaths, std::min(n_paths, (b + 1) * kBlockPaths));
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t b = next.fetch_add(1);
                if (b >= n_blocks) return;
                fn(b, b * kBlockPaths, std::min(n_paths, (b + 1) * kBlockPaths));
            }
        });
    }
    for (auto& th : pool) th.join();
}

void warn_truncation(const char* what, const McEstimate& e) {
    if (e.truncated_fraction > 1e-3)
        std::cerr << "[carbex] warning: " << what << ": " << e.truncated_fraction * 100.0
                  << "% of paths hit the horizon cap\n";
}

void check_config(const McConfig& cfg) {
    if (cfg.n_paths < 1 || !(cfg.dt > 0.0) || cfg.horizon_cap < cfg.dt)
        throw std::invalid_argument("McConfig: need n_paths >= 1, dt > 0, horizon_cap >= dt");
}

}  // namespace

int resolve_threads(const McConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    if (const char* env = std::getenv("CARBEX_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

GbmSampler::GbmSampler(std::uint64_t seed) : seed_(seed) {
    const std::uint64_t k = splitmix64(seed);
    key_lo_ = k;
    key_hi_ = splitmix64(k);
}

double GbmSampler::normal(std::int64_t path, std::int64_t step) const {
    double z0, z1;
    normal_pair(philox(static_cast<std::uint64_t>(path), static_cast<std::uint64_t>(step >> 1),
                       static_cast<std::uint32_t>(key_lo_), static_cast<std::uint32_t>(key_hi_)),
                z0, z1);
    return (step & 1) ? z1 : z0;
}

double GbmSampler::bridge_uniform(std::int64_t path, std::int64_t step) const {
    const U128 r = philox(static_cast<std::uint64_t>(path),
                          static_cast<std::uint64_t>(step) | kPurposeBridge,
                          static_cast<std::uint32_t>(key_lo_),
                          static_cast<std::uint32_t>(key_hi_));
    return to_unit_half_open(word64(r, 0));
}

std::vector<double> simulate_path(const GbmParams& gbm, const McConfig& cfg, std::int64_t path,
                                  int n_steps) {
    check_config(cfg);
    GbmSampler sampler(cfg.seed);
    NormalStream normals(sampler, path);
    std::vector<double> out(static_cast<size_t>(n_steps) + 1);
    const double nu_dt = (gbm.mu - 0.5 * gbm.sigma * gbm.sigma) * cfg.dt;
    const double sig_dt = gbm.sigma * std::sqrt(cfg.dt);
    double logx = std::log(gbm.x0);
    out[0] = gbm.x0;
    for (int k = 0; k < n_steps; ++k) {
        logx += nu_dt + sig_dt * normals(k);
        out[static_cast<size_t>(k) + 1] = std::exp(logx);
    }
    return out;
}

std::vector<double> simulate_terminal(const GbmParams& gbm, const McConfig& cfg, double t) {
    check_config(cfg);
    const int n_steps = std::max(1, static_cast<int>(std::llround(t / cfg.dt)));
    const GbmSampler sampler(cfg.seed);
    const double nu_dt = (gbm.mu - 0.5 * gbm.sigma * gbm.sigma) * cfg.dt;
    const double sig_dt = gbm.sigma * std::sqrt(cfg.dt);
    std::vector<double> out(static_cast<size_t>(cfg.n_paths));
    run_blocks(cfg.n_paths, resolve_threads(cfg),
               [&](std::int64_t, std::int64_t begin, std::int64_t end) {
                   for (std::int64_t p = begin; p < end; ++p) {
                       NormalStream normals(sampler, p);
                       double logx = std::log(gbm.x0);
                       for (int k = 0; k < n_steps; ++k) logx += nu_dt + sig_dt * normals(k);
                       out[static_cast<size_t>(p)] = std::exp(logx);
                   }
               });
    return out;
}

std::pair<McEstimate, McEstimate> estimate_hitting(const GbmParams& gbm, double x_hat, double rho,
                                                   const McConfig& cfg) {
    check_config(cfg);
    if (!(x_hat > gbm.x0)) throw std::invalid_argument("estimate_hitting: requires x_hat > x0");
    const GbmSampler sampler(cfg.seed);
    const double nu_dt = (gbm.mu - 0.5 * gbm.sigma * gbm.sigma) * cfg.dt;
    const double sig_dt = gbm.sigma * std::sqrt(cfg.dt);
    const double s2dt = gbm.sigma * gbm.sigma * cfg.dt;
    const double barrier = std::log(x_hat / gbm.x0);  // walk starts at 0
    const std::int64_t max_steps = static_cast<std::int64_t>(cfg.horizon_cap / cfg.dt);
    // Crossing probability below ~1e-18: an automatic miss, skip the draw.
    const double ab_skip = 20.8 * s2dt;

    const std::int64_t n_blocks = (cfg.n_paths + kBlockPaths - 1) / kBlockPaths;
    std::vector<BlockMoments> disc_blocks(static_cast<size_t>(n_blocks));
    std::vector<BlockMoments> time_blocks(static_cast<size_t>(n_blocks));

    run_blocks(cfg.n_paths, resolve_threads(cfg),
               [&](std::int64_t blk, std::int64_t begin, std::int64_t end) {
                   BlockMoments disc, time;
                   for (std::int64_t p = begin; p < end; ++p) {
                       NormalStream normals(sampler, p);
                       double walk = 0.0;
                       double tau = cfg.horizon_cap;
                       bool hit = false;
                       for (std::int64_t k = 0; k < max_steps; ++k) {
                           const double next = walk + nu_dt + sig_dt * normals(k);
                           if (next >= barrier) {
                               tau = static_cast<double>(k + 1) * cfg.dt;
                               hit = true;
                               break;
                           }
                           if (cfg.bridge_correction) {
                               const double ab = (barrier - walk) * (barrier - next);
                               if (ab < ab_skip &&
                                   sampler.bridge_uniform(p, k) < std::exp(-2.0 * ab / s2dt)) {
                                   tau = static_cast<double>(k + 1) * cfg.dt;
                                   hit = true;
                                   break;
                               }
                           }
                           walk = next;
                       }
                       if (!hit) {
                           ++disc.truncated;
                           ++time.truncated;
                       }
                       disc.add(std::exp(-rho * tau));
                       time.add(tau);
                   }
                   disc_blocks[static_cast<size_t>(blk)] = disc;
                   time_blocks[static_cast<size_t>(blk)] = time;
               });

    auto result = std::make_pair(reduce_moments(disc_blocks, cfg.n_paths),
                                 reduce_moments(time_blocks, cfg.n_paths));
    warn_truncation("estimate_hitting", result.first);
    return result;
}

AgentCurve estimate_agent_value(const GbmParams& gbm, double rho, double profit_rate,
                                double payment_weight,
                                const std::function<double(double, int)>& offer,
                                const std::vector<double>& ladder,
                                const std::vector<double>& candidates, const McConfig& cfg) {
    check_config(cfg);
    if (candidates.empty()) throw std::invalid_argument("estimate_agent_value: no candidates");
    for (size_t i = 1; i < candidates.size(); ++i)
        if (!(candidates[i] > candidates[i - 1]))
            throw std::invalid_argument("estimate_agent_value: candidates must increase");

    const GbmSampler sampler(cfg.seed);
    const double nu_dt = (gbm.mu - 0.5 * gbm.sigma * gbm.sigma) * cfg.dt;
    const double sig_dt = gbm.sigma * std::sqrt(cfg.dt);
    const std::int64_t max_steps = static_cast<std::int64_t>(cfg.horizon_cap / cfg.dt);
    const size_t n_cand = candidates.size();
    const double disc_step = std::exp(-rho * cfg.dt);

    std::vector<double> log_cand(n_cand);  // walk coordinates, log relative to x0
    for (size_t i = 0; i < n_cand; ++i) log_cand[i] = std::log(candidates[i] / gbm.x0);
    std::vector<double> log_ladder(ladder.size());
    for (size_t i = 0; i < ladder.size(); ++i) log_ladder[i] = std::log(ladder[i] / gbm.x0);

    const std::int64_t n_blocks = (cfg.n_paths + kBlockPaths - 1) / kBlockPaths;
    std::vector<std::vector<BlockMoments>> blocks(static_cast<size_t>(n_blocks),
                                                  std::vector<BlockMoments>(n_cand));

    run_blocks(
        cfg.n_paths, resolve_threads(cfg),
        [&](std::int64_t blk, std::int64_t begin, std::int64_t end) {
            auto& acc = blocks[static_cast<size_t>(blk)];
            for (std::int64_t p = begin; p < end; ++p) {
                NormalStream normals(sampler, p);
                double walk = 0.0;
                double x = gbm.x0;
                double disc = 1.0;
                Kahan profit;  // int_0^t e^{-rho s} X ds, trapezoid
                size_t next_cand = 0;
                size_t rung = 0;
                while (rung < ladder.size() && ladder[rung] <= gbm.x0) ++rung;
                while (next_cand < n_cand && candidates[next_cand] <= gbm.x0) {
                    // Claims at time 0.
                    acc[next_cand].add(payment_weight *
                                       offer(gbm.x0, static_cast<int>(rung) + 1));
                    ++next_cand;
                }
                for (std::int64_t k = 0; k < max_steps && next_cand < n_cand; ++k) {
                    walk += nu_dt + sig_dt * normals(k);
                    const double x_new = gbm.x0 * std::exp(walk);
                    const double disc_new = disc * disc_step;
                    profit.add(0.5 * cfg.dt * (disc * x + disc_new * x_new));
                    disc = disc_new;
                    x = x_new;
                    while (rung < ladder.size() && walk >= log_ladder[rung]) ++rung;
                    while (next_cand < n_cand && walk >= log_cand[next_cand]) {
                        // Claim at the first crossing; the level is snapped to
                        // the candidate so every candidate carries the same
                        // discrete-crossing bias.
                        const double y = candidates[next_cand];
                        acc[next_cand].add(
                            profit_rate * profit.sum +
                            payment_weight * disc * offer(y, static_cast<int>(rung) + 1));
                        ++next_cand;
                    }
                }
                for (; next_cand < n_cand; ++next_cand) {
                    acc[next_cand].add(profit_rate * profit.sum);  // capped, no claim
                    ++acc[next_cand].truncated;
                }
            }
        });

    AgentCurve curve;
    curve.candidates = candidates;
    curve.values.resize(n_cand);
    std::vector<BlockMoments> column(static_cast<size_t>(n_blocks));
    for (size_t i = 0; i < n_cand; ++i) {
        for (std::int64_t b = 0; b < n_blocks; ++b)
            column[static_cast<size_t>(b)] = blocks[static_cast<size_t>(b)][i];
        curve.values[i] = reduce_moments(column, cfg.n_paths);
        if (curve.values[i].mean > curve.values[curve.argmax].mean) curve.argmax = i;
    }
    curve.argmax_at_edge = (curve.argmax == 0 || curve.argmax + 1 == n_cand);
    // Contiguous run of candidates statistically tied with the maximum;
    // heavily discounted far candidates can drift back within noise of the
    // plateau, so the scan stops at the first significant drop.
    const McEstimate& top = curve.values[curve.argmax];
    size_t k = curve.argmax;
    while (k + 1 < n_cand &&
           curve.values[k + 1].mean >=
               top.mean - 3.0 * (top.stderr_ + curve.values[k + 1].stderr_))
        ++k;
    curve.plateau_end = k;
    warn_truncation("estimate_agent_value", curve.values.back());
    return curve;
}

McEstimate estimate_regulator_value(const GbmParams& gbm, const EconomyParams& econ,
                                    const FirmProfile* profile, const DuopolySpec* spec,
                                    const std::vector<double>& thresholds_in, const McConfig& cfg,
                                    RegulatorMode mode, const DerivedConstants& consts) {
    check_config(cfg);
    const GbmSampler sampler(cfg.seed);
    const double nu_dt = (gbm.mu - 0.5 * gbm.sigma * gbm.sigma) * cfg.dt;
    const double sig_dt = gbm.sigma * std::sqrt(cfg.dt);
    const double s2dt = gbm.sigma * gbm.sigma * cfg.dt;
    const double ab_skip = 20.8 * s2dt;
    const std::int64_t max_steps = static_cast<std::int64_t>(cfg.horizon_cap / cfg.dt);
    const double disc_step = std::exp(-econ.rho * cfg.dt);
    const double gamma = econ.gamma;
    const double x0g = std::pow(gbm.x0, gamma);
    const std::int64_t n_blocks = (cfg.n_paths + kBlockPaths - 1) / kBlockPaths;
    std::vector<BlockMoments> blocks(static_cast<size_t>(n_blocks));

    if (mode == RegulatorMode::single) {
        if (profile == nullptr) throw std::invalid_argument("regulator MC: profile required");
        const int n = profile->size();
        if (static_cast<int>(thresholds_in.size()) != n)
            throw std::invalid_argument("regulator MC: threshold count mismatch");
        for (int i = 1; i < n; ++i)
            if (thresholds_in[static_cast<size_t>(i)] < thresholds_in[static_cast<size_t>(i - 1)])
                throw std::invalid_argument("regulator MC: thresholds must be non-decreasing");
        const std::vector<double> d = payment_coeffs(*profile, thresholds_in, gbm.x0, consts);
        std::vector<double> log_thr(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
            log_thr[static_cast<size_t>(i)] =
                std::log(thresholds_in[static_cast<size_t>(i)] / gbm.x0);
        std::vector<double> dmg(static_cast<size_t>(n) + 1);  // ell*(1-lt_{r-1})^gamma per regime
        for (int r = 1; r <= n + 1; ++r)
            dmg[static_cast<size_t>(r - 1)] =
                econ.ell * std::pow(1.0 - profile->lambda_tilde(r - 1), gamma);

        run_blocks(
            cfg.n_paths, resolve_threads(cfg),
            [&](std::int64_t blk, std::int64_t begin, std::int64_t end) {
                BlockMoments acc;
                for (std::int64_t p = begin; p < end; ++p) {
                    NormalStream normals(sampler, p);
                    double walk = 0.0, x = gbm.x0, xg = x0g, disc = 1.0;
                    Kahan val;
                    int regime = 1;
                    auto exit_firm = [&](double level) {
                        val.add(-profile->lambda(regime) * disc *
                                payment_process(regime, true, level, *profile, d, 0.0, consts));
                        ++regime;
                    };
                    while (regime <= n && thresholds_in[static_cast<size_t>(regime - 1)] <= gbm.x0)
                        exit_firm(gbm.x0);
                    auto integrand = [&] {
                        return regime <= n ? disc * (profile->pi_bar(regime) * x -
                                                     dmg[static_cast<size_t>(regime - 1)] * xg)
                                           : 0.0;
                    };
                    double g_prev = integrand();
                    std::int64_t k = 0;
                    for (; k < max_steps && regime <= n; ++k) {
                        const double walk_new = walk + nu_dt + sig_dt * normals(k);
                        x = gbm.x0 * std::exp(walk_new);
                        xg = x0g * std::exp(gamma * walk_new);
                        disc *= disc_step;
                        const double g_new = integrand();
                        val.add(0.5 * cfg.dt * (g_prev + g_new));
                        bool crossed = false;
                        while (regime <= n && walk_new >= log_thr[static_cast<size_t>(regime - 1)]) {
                            exit_firm(thresholds_in[static_cast<size_t>(regime - 1)]);
                            crossed = true;
                        }
                        if (cfg.bridge_correction && regime <= n) {
                            double u = -1.0;
                            while (regime <= n) {
                                const double lb = log_thr[static_cast<size_t>(regime - 1)];
                                const double ab = (lb - walk) * (lb - walk_new);
                                if (ab >= ab_skip) break;
                                if (u < 0.0) u = sampler.bridge_uniform(p, k);
                                if (u >= std::exp(-2.0 * ab / s2dt)) break;
                                exit_firm(thresholds_in[static_cast<size_t>(regime - 1)]);
                                crossed = true;
                            }
                        }
                        walk = walk_new;
                        g_prev = crossed ? integrand() : g_new;
                    }
                    if (regime <= n) ++acc.truncated;
                    acc.add(val.sum);
                }
                blocks[static_cast<size_t>(blk)] = acc;
            });
    } else {
        if (spec == nullptr) throw std::invalid_argument("regulator MC: duopoly spec required");
        if (thresholds_in.size() != 2)
            throw std::invalid_argument("regulator MC: duopoly needs two thresholds");
        if (!(thresholds_in[0] > 0.0 && thresholds_in[1] > 0.0))
            throw std::invalid_argument("regulator MC: thresholds must be > 0");
        const bool central = (mode == RegulatorMode::duopoly_central);
        // J_i: own profit until own exit, compensation Z_i at own exit, half
        // the global damage. Central: both profit legs, no compensation, the
        // full damage (the planner's total objective).
        const int country = (mode == RegulatorMode::duopoly_j2) ? 2 : 1;
        const double thr1 = central ? thresholds_in[0] : thresholds_in[static_cast<size_t>(country - 1)];
        const double thr2 = central ? thresholds_in[1] : thresholds_in[static_cast<size_t>(2 - country)];
        const double prof1 = central ? spec->pi1 * spec->lambda1
                                     : spec->pi(country) * spec->lambda(country);
        const double prof2 = central ? spec->pi2 * spec->lambda2 : 0.0;
        const double comp_w = central ? 0.0 : prof1 * consts.b;
        const double lam1 = central ? spec->lambda1 : spec->lambda(country);
        const double lam2 = central ? spec->lambda2 : spec->lambda(3 - country);
        const double dshare = central ? 1.0 : 0.5;
        const double log1 = std::log(std::max(thr1, gbm.x0) / gbm.x0);
        const double log2 = std::log(std::max(thr2, gbm.x0) / gbm.x0);
        const double dmg_both = dshare * econ.ell * std::pow(lam1 + lam2, gamma);
        const double dmg_1 = dshare * econ.ell * std::pow(lam1, gamma);
        const double dmg_2 = dshare * econ.ell * std::pow(lam2, gamma);

        run_blocks(
            cfg.n_paths, resolve_threads(cfg),
            [&](std::int64_t blk, std::int64_t begin, std::int64_t end) {
                BlockMoments acc;
                for (std::int64_t p = begin; p < end; ++p) {
                    NormalStream normals(sampler, p);
                    double walk = 0.0, x = gbm.x0, xg = x0g, disc = 1.0;
                    Kahan val;
                    bool on1 = thr1 > gbm.x0;
                    bool on2 = thr2 > gbm.x0;
                    if (!on1) val.add(-comp_w * gbm.x0);
                    auto integrand = [&] {
                        const double dscale = on1 ? (on2 ? dmg_both : dmg_1) : (on2 ? dmg_2 : 0.0);
                        return disc *
                               ((on1 ? prof1 * x : 0.0) + (on2 ? prof2 * x : 0.0) - dscale * xg);
                    };
                    double g_prev = integrand();
                    std::int64_t k = 0;
                    for (; k < max_steps && (on1 || on2); ++k) {
                        const double walk_new = walk + nu_dt + sig_dt * normals(k);
                        x = gbm.x0 * std::exp(walk_new);
                        xg = x0g * std::exp(gamma * walk_new);
                        disc *= disc_step;
                        const double g_new = integrand();
                        val.add(0.5 * cfg.dt * (g_prev + g_new));
                        bool crossed = false;
                        double u = -1.0;
                        auto crossing = [&](bool active, double lb) {
                            if (!active) return false;
                            if (walk_new >= lb) return true;
                            if (!cfg.bridge_correction) return false;
                            const double ab = (lb - walk) * (lb - walk_new);
                            if (ab >= ab_skip) return false;
                            if (u < 0.0) u = sampler.bridge_uniform(p, k);
                            return u < std::exp(-2.0 * ab / s2dt);
                        };
                        if (crossing(on1, log1)) {
                            on1 = false;
                            val.add(-comp_w * disc * thr1);
                            crossed = true;
                        }
                        if (crossing(on2, log2)) {
                            on2 = false;
                            crossed = true;
                        }
                        walk = walk_new;
                        g_prev = crossed ? integrand() : g_new;
                    }
                    if (on1 || on2) ++acc.truncated;
                    acc.add(val.sum);
                }
                blocks[static_cast<size_t>(blk)] = acc;
            });
    }

    McEstimate e = reduce_moments(blocks, cfg.n_paths);
    warn_truncation("estimate_regulator_value", e);
    return e;
}

McEstimate damage_estimate(const GbmParams& gbm, const EconomyParams& econ,
                           const DuopolySpec& spec, double tau1_threshold, double tau2_threshold,
                           const McConfig& cfg) {
    check_config(cfg);
    if (!(tau1_threshold > 0.0 && tau2_threshold > 0.0))
        throw std::invalid_argument("damage_estimate: thresholds must be > 0");
    const GbmSampler sampler(cfg.seed);
    const double nu_dt = (gbm.mu - 0.5 * gbm.sigma * gbm.sigma) * cfg.dt;
    const double sig_dt = gbm.sigma * std::sqrt(cfg.dt);
    const double s2dt = gbm.sigma * gbm.sigma * cfg.dt;
    const double ab_skip = 20.8 * s2dt;
    const std::int64_t max_steps = static_cast<std::int64_t>(cfg.horizon_cap / cfg.dt);
    const double disc_step = std::exp(-econ.rho * cfg.dt);
    const double gamma = econ.gamma;
    const double x0g = std::pow(gbm.x0, gamma);
    const double log1 = std::log(std::max(tau1_threshold, gbm.x0) / gbm.x0);
    const double log2 = std::log(std::max(tau2_threshold, gbm.x0) / gbm.x0);
    const double d_both = econ.ell * std::pow(spec.lambda1 + spec.lambda2, gamma);
    const double d_1 = econ.ell * std::pow(spec.lambda1, gamma);
    const double d_2 = econ.ell * std::pow(spec.lambda2, gamma);
    const std::int64_t n_blocks = (cfg.n_paths + kBlockPaths - 1) / kBlockPaths;
    std::vector<BlockMoments> blocks(static_cast<size_t>(n_blocks));

    run_blocks(
        cfg.n_paths, resolve_threads(cfg),
        [&](std::int64_t blk, std::int64_t begin, std::int64_t end) {
            BlockMoments acc;
            for (std::int64_t p = begin; p < end; ++p) {
                NormalStream normals(sampler, p);
                double walk = 0.0, xg = x0g, disc = 1.0;
                Kahan val;
                bool on1 = tau1_threshold > gbm.x0, on2 = tau2_threshold > gbm.x0;
                auto integrand = [&] {
                    const double dscale = on1 ? (on2 ? d_both : d_1) : (on2 ? d_2 : 0.0);
                    return disc * dscale * xg;
                };
                double g_prev = integrand();
                std::int64_t k = 0;
                for (; k < max_steps && (on1 || on2); ++k) {
                    const double walk_new = walk + nu_dt + sig_dt * normals(k);
                    xg = x0g * std::exp(gamma * walk_new);
                    disc *= disc_step;
                    const double g_new = integrand();
                    val.add(0.5 * cfg.dt * (g_prev + g_new));
                    bool crossed = false;
                    double u = -1.0;
                    auto crossing = [&](bool active, double lb) {
                        if (!active) return false;
                        if (walk_new >= lb) return true;
                        if (!cfg.bridge_correction) return false;
                        const double ab = (lb - walk) * (lb - walk_new);
                        if (ab >= ab_skip) return false;
                        if (u < 0.0) u = sampler.bridge_uniform(p, k);
                        return u < std::exp(-2.0 * ab / s2dt);
                    };
                    if (crossing(on1, log1)) on1 = false, crossed = true;
                    if (crossing(on2, log2)) on2 = false, crossed = true;
                    walk = walk_new;
                    g_prev = crossed ? integrand() : g_new;
                }
                if (on1 || on2) ++acc.truncated;
                acc.add(val.sum);
            }
            blocks[static_cast<size_t>(blk)] = acc;
        });

    McEstimate e = reduce_moments(blocks, cfg.n_paths);
    warn_truncation("damage_estimate", e);
    return e;
}

}  // namespace carbex
