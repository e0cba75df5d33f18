// Acceptance suite. Each criterion prints exactly one PASS/FAIL line; run a
// single criterion by name or everything with no arguments. Every tolerance
// is fixed here, in code.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "seqmh/bench.hpp"
#include "seqmh/design.hpp"
#include "seqmh/gibbs.hpp"
#include "seqmh/models.hpp"
#include "seqmh/rwalk.hpp"
#include "seqmh/samplers.hpp"
#include "seqmh/seqtest.hpp"
#include "seqmh/stats.hpp"

using namespace seqmh;

namespace {

void parallel_for(int n, const std::function<void(int)>& fn) {
    const unsigned hw = std::thread::hardware_concurrency();
    const int workers = std::min<int>(n, hw == 0 ? 1 : static_cast<int>(hw));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Exactness at exhaustion: 1000 random (population, mu0, u) triples, N <= 200,
// epsilon forcing full consumption; the sequential decision must equal the
// exact one in every case.
bool exhaustion_equivalence() {
    std::mt19937_64 rng(20240601);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> size_dist(1, 200);
    SeqTestScratch scratch;
    int mismatches = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = size_dist(rng);
        std::vector<double> vals(n);
        const double shift = 0.2 * gauss(rng);
        for (double& v : vals) v = gauss(rng) * (0.5 + unif(rng)) + shift;
        double u = unif(rng);
        while (u <= 0.0) u = unif(rng);
        const double mu0 = compute_mu0(u, 0.3 * gauss(rng), 0.3 * gauss(rng), n);
        auto pop = population_from_values(vals);
        SequentialTestSpec spec;
        spec.batch_size = std::min<std::int64_t>(n, 1 + rep % 9);
        spec.epsilon = 1e-300;
        std::mt19937_64 trng(777 + rep);
        const TestDecision d = sequential_mh_test(pop, mu0, spec, trng, &scratch);
        if (d.n_used != n || d.accept != exact_mh_test(pop, mu0)) ++mismatches;
    }
    std::printf("  mismatches: %d / 1000\n", mismatches);
    return mismatches == 0;
}

// ---------------------------------------------------------------------------
// DP vs Monte-Carlo over the full grid, 100k trials per setting, 3 SE.
bool dp_vs_monte_carlo() {
    std::mt19937_64 rng(7771);
    bool ok = true;
    const std::int64_t trials = 100000;
    for (double pi1 : {0.05, 0.1}) {
        for (double eps : {0.01, 0.05}) {
            const double g0 = normal_quantile(1.0 - eps);
            for (double m : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0}) {
                const RandomWalkParams params = RandomWalkParams::uniform(m, pi1, g0);
                const RandomWalkProfile dp = dp_error_and_usage(params, 256);
                const EmpiricalProfile mc = simulate_sequential_tests(m, params, trials, rng);
                // With zero observed errors the plug-in SE degenerates; fall
                // back to the standard error under the DP-hypothesized rate.
                const double e_se = std::max(
                    mc.error_se, std::sqrt(dp.error * (1.0 - dp.error) / static_cast<double>(trials)));
                const double e_gap = std::fabs(dp.error - mc.error);
                const double u_gap = std::fabs(dp.expected_usage - mc.expected_usage);
                const bool pass = e_gap <= 3.0 * e_se + 1e-9 &&
                                  u_gap <= 3.0 * mc.usage_se + 1e-9;
                if (!pass) {
                    std::printf("  mu_std=%.1f pi1=%.2f eps=%.2f: E %.5g vs %.5g (se %.2g), "
                                "usage %.5g vs %.5g (se %.2g)\n",
                                m, pi1, eps, dp.error, mc.error, mc.error_se, dp.expected_usage,
                                mc.expected_usage, mc.usage_se);
                    ok = false;
                }
            }
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Worst-case identity E(0) = (1 - P(stop at J)) / 2 within 1e-6.
bool worst_case_identity() {
    bool ok = true;
    for (double pi1 : {0.05, 0.1}) {
        for (double eps : {0.01, 0.05}) {
            const double g0 = normal_quantile(1.0 - eps);
            const RandomWalkParams params = RandomWalkParams::uniform(0.0, pi1, g0);
            const RandomWalkProfile dp = dp_error_and_usage(params, 256);
            const double identity = (1.0 - dp.stop_mass.back()) / 2.0;
            const double gap = std::fabs(dp.error - identity);
            std::printf("  pi1=%.2f eps=%.2f: E(0)=%.8f, (1-P_J)/2=%.8f, gap=%.2e\n", pi1, eps,
                        dp.error, identity, gap);
            if (gap > 1e-6) ok = false;
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Cancellation: 50 triples with P_a in [0.3, 0.7]; |Delta| <= E_u|E| always,
// <= 0.5 E_u|E| in at least 80% of cases; quadrature vs direct simulation of
// P_{a,eps} within 3 SE on 10 triples.
bool delta_cancellation() {
    std::mt19937_64 rng(99001);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const StageStructure stages = StageStructure::uniform(0.1, normal_quantile(1.0 - 0.05));

    int within_half = 0;
    bool bound_ok = true;
    std::vector<std::pair<double, double>> sim_cases; // (mu, sigma_l) for sim check
    std::vector<double> quad_delta;
    std::vector<std::int64_t> sim_n;

    for (int rep = 0; rep < 50; ++rep) {
        const std::int64_t n = 2000 + static_cast<std::int64_t>(6000 * unif(rng));
        const double p_a = 0.3 + 0.4 * unif(rng);
        const double mu = std::log(p_a) / static_cast<double>(n);
        const double spread = 0.5 + 3.5 * unif(rng); // |mu_std(1)|
        const double sigma_l = std::fabs(mu) * std::sqrt(static_cast<double>(n - 1)) / spread;
        const DeltaResult d = delta_acceptance(mu, sigma_l, n, stages, 32, 192);
        if (std::fabs(d.delta) > d.abs_error_expectation + 1e-9) bound_ok = false;
        if (std::fabs(d.delta) <= 0.5 * d.abs_error_expectation + 1e-12) ++within_half;
        if (rep % 5 == 0) {
            sim_cases.emplace_back(mu, sigma_l);
            quad_delta.push_back(d.delta);
            sim_n.push_back(n);
        }
    }
    std::printf("  |Delta| <= E_u|E|: %s; within half: %d / 50\n", bound_ok ? "all" : "VIOLATED",
                within_half);

    bool sim_ok = true;
    for (std::size_t c = 0; c < sim_cases.size(); ++c) {
        const auto [mu, sigma_l] = sim_cases[c];
        const std::int64_t n = sim_n[c];
        const double scale = std::sqrt(static_cast<double>(n - 1)) / sigma_l;
        const std::int64_t trials = 1000000;
        std::int64_t accepted = 0;
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::int64_t t = 0; t < trials; ++t) {
            double u = unif(rng);
            while (u <= 0.0) u = unif(rng);
            const double mu_std = (mu - std::log(u) / static_cast<double>(n)) * scale;
            bool accept = mu_std > 0.0; // exact decision if the walk survives
            double z = 0.0, pi_prev = 0.0;
            for (std::size_t j = 0; j + 1 < stages.num_stages(); ++j) {
                const GaussianStep cs = rw_conditional_params(mu_std, pi_prev, stages.pi[j], z);
                z = cs.mean + std::sqrt(cs.variance) * gauss(rng);
                if (std::fabs(z) > stages.bounds[j]) {
                    accept = z > stages.bounds[j];
                    break;
                }
                pi_prev = stages.pi[j];
            }
            accepted += accept ? 1 : 0;
        }
        const double p_hat = static_cast<double>(accepted) / static_cast<double>(trials);
        const double p_a = std::exp(static_cast<double>(n) * mu);
        const double delta_sim = p_hat - p_a;
        const double se = std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(trials));
        const double gap = std::fabs(delta_sim - quad_delta[c]);
        if (gap > 3.0 * se) {
            std::printf("  sim %zu: quad %.5g vs sim %.5g (se %.2g) MISMATCH\n", c, quad_delta[c],
                        delta_sim, se);
            sim_ok = false;
        }
    }
    return bound_ok && within_half >= 40 && sim_ok;
}

// ---------------------------------------------------------------------------
// Risk crossover on the synthetic logistic target.
struct LogisticBench {
    LogisticRegressionModel train;
    std::vector<double> heldout; // row-major features
    std::int64_t n_heldout = 0;
    std::vector<double> truth;

    void predict(std::span<const double> theta, std::vector<double>& out) const {
        const int d = train.n_features;
        out.resize(static_cast<std::size_t>(n_heldout));
        for (std::int64_t h = 0; h < n_heldout; ++h) {
            const double* row = heldout.data() + h * d;
            double z = 0.0;
            for (int j = 0; j < d; ++j) z += row[j] * theta[static_cast<std::size_t>(j)];
            out[static_cast<std::size_t>(h)] = 1.0 / (1.0 + std::exp(-z));
        }
    }
};

std::vector<double> gradient_map(const LogisticRegressionModel& m, int iters) {
    std::vector<double> theta(static_cast<std::size_t>(m.n_features), 0.0);
    const double lip = 0.25 * static_cast<double>(m.n_rows) * 1.3 + m.prior_precision;
    for (int it = 0; it < iters; ++it) {
        auto g = m.log_lik_grad({theta.data(), theta.size()});
        for (int j = 0; j < m.n_features; ++j)
            theta[static_cast<std::size_t>(j)] +=
                (g[static_cast<std::size_t>(j)] - m.prior_precision * theta[static_cast<std::size_t>(j)]) / lip;
    }
    return theta;
}

LogisticBench make_logistic_bench(std::uint64_t seed) {
    const std::int64_t n_rows = 12214, n_heldout = 200;
    const int d = 50;
    LogisticRegressionModel full = synth_logistic_dataset(n_rows + n_heldout, d, seed);
    LogisticBench b;
    b.train = full;
    b.train.n_rows = n_rows;
    b.train.features.resize(static_cast<std::size_t>(n_rows) * d);
    b.train.labels.resize(static_cast<std::size_t>(n_rows));
    b.n_heldout = n_heldout;
    b.heldout.assign(full.features.begin() + n_rows * d, full.features.end());

    // Reference predictive means from a long exact chain started at the mode.
    std::vector<double> theta = gradient_map(b.train, 2500);
    ChainConfig cc;
    cc.test.exact = true;
    cc.sigma_rw = 0.01;
    ChainRngs rngs = ChainRngs::make(seed, 909090);
    std::vector<double> acc(static_cast<std::size_t>(n_heldout), 0.0), pm;
    const int steps = 12000, burn = 1200;
    std::int64_t kept = 0;
    for (int i = 0; i < steps; ++i) {
        random_walk_step(theta, b.train, cc, rngs, i);
        if (i >= burn && i % 5 == 0) {
            b.predict({theta.data(), theta.size()}, pm);
            for (std::size_t h = 0; h < acc.size(); ++h) acc[h] += pm[h];
            ++kept;
        }
    }
    b.truth.resize(acc.size());
    for (std::size_t h = 0; h < acc.size(); ++h) b.truth[h] = acc[h] / static_cast<double>(kept);
    return b;
}

double risk_at_budget(const LogisticBench& b, double epsilon, std::uint64_t chain_seed,
                      std::int64_t budget) {
    const int n_chains = 5;
    const int d = b.train.n_features;
    std::vector<std::vector<double>> est(n_chains);
    parallel_for(n_chains, [&](int c) {
        ChainConfig cc;
        if (epsilon <= 0.0) {
            cc.test.exact = true;
        } else {
            cc.test.exact = false;
            cc.test.spec.epsilon = epsilon;
            cc.test.spec.batch_size = 500;
        }
        cc.sigma_rw = 0.01;
        ChainRngs rngs = ChainRngs::make(chain_seed, static_cast<std::uint64_t>(c));
        std::vector<double> theta(static_cast<std::size_t>(d), 0.0);
        std::vector<double> acc(static_cast<std::size_t>(b.n_heldout), 0.0), pm;
        SeqTestScratch scratch;
        std::int64_t cum = 0, kept = 0, step = 0;
        const std::int64_t burn_evals = budget / 10;
        while (cum < budget) {
            const StepResult r = random_walk_step(theta, b.train, cc, rngs, step, &scratch);
            cum += r.n_used;
            if (step % 10 == 0 && cum > burn_evals) {
                b.predict({theta.data(), theta.size()}, pm);
                for (std::size_t h = 0; h < acc.size(); ++h) acc[h] += pm[h];
                ++kept;
            }
            ++step;
        }
        est[static_cast<std::size_t>(c)].resize(acc.size());
        for (std::size_t h = 0; h < acc.size(); ++h)
            est[static_cast<std::size_t>(c)][h] = acc[h] / static_cast<double>(kept);
    });
    double risk = 0.0;
    for (std::int64_t h = 0; h < b.n_heldout; ++h) {
        for (int c = 0; c < n_chains; ++c) {
            const double e = est[static_cast<std::size_t>(c)][static_cast<std::size_t>(h)] -
                             b.truth[static_cast<std::size_t>(h)];
            risk += e * e;
        }
    }
    return risk / static_cast<double>(b.n_heldout * n_chains);
}

bool risk_crossover() {
    const LogisticBench b = make_logistic_bench(31337);
    const std::int64_t budget = 20000000;
    int wins = 0;
    for (int rep = 0; rep < 5; ++rep) {
        const std::uint64_t chain_seed = 5000 + 17 * static_cast<std::uint64_t>(rep);
        const double risk_exact = risk_at_budget(b, 0.0, chain_seed, budget);
        double best_approx = 1e300;
        double r001 = 0, r005 = 0, r01 = 0;
        r001 = risk_at_budget(b, 0.01, chain_seed, budget);
        r005 = risk_at_budget(b, 0.05, chain_seed, budget);
        r01 = risk_at_budget(b, 0.1, chain_seed, budget);
        best_approx = std::min({r001, r005, r01});
        const bool win = best_approx < risk_exact;
        std::printf("  rep %d: risk eps=0: %.3e | 0.01: %.3e | 0.05: %.3e | 0.1: %.3e -> %s\n",
                    rep, risk_exact, r001, r005, r01, win ? "approx wins" : "exact wins");
        wins += win ? 1 : 0;
    }
    std::printf("  approximate test wins in %d / 5 replications\n", wins);
    return wins >= 4;
}

// ---------------------------------------------------------------------------
// SGLD correction on the paper-scale toy.
bool sgld_correction() {
    const Lasso1DModel model = synth_lasso_dataset(4242);
    const int bins = 200;

    // Quadrature reference over a fixed support.
    const double mode = model.sum_xy / model.sum_x2;
    const double sd = 1.0 / std::sqrt(model.lambda * model.sum_x2);
    const double lo = mode - 60.0 * sd, hi = mode + 60.0 * sd;
    std::vector<double> truth(bins, 0.0);
    {
        double max_lp = -1e300;
        for (int i = 0; i <= 20000; ++i)
            max_lp = std::max(max_lp, model.log_post(lo + (hi - lo) * i / 20000));
        double total = 0.0;
        for (int b = 0; b < bins; ++b) {
            const double a = lo + (hi - lo) * b / bins;
            const double w = (hi - lo) / bins;
            double s = 0.0;
            const int pts = 500;
            for (int i = 0; i <= pts; ++i) {
                const double t = a + w * i / pts;
                s += ((i == 0 || i == pts) ? 0.5 : 1.0) * std::exp(model.log_post(t) - max_lp);
            }
            truth[static_cast<std::size_t>(b)] = s;
            total += s;
        }
        for (double& v : truth) v /= total;
    }

    auto run_chain_l1 = [&](bool corrected, std::uint64_t seed, bool& one_stage) {
        ChainConfig cfg;
        cfg.test.exact = false;
        cfg.test.spec.batch_size = 500;
        cfg.test.spec.epsilon = 0.5;
        cfg.step_size = 5e-6;
        cfg.sgld_batch = 500;
        cfg.sgld_corrected = corrected;
        ChainRngs rngs = ChainRngs::make(seed, corrected ? 1 : 2);
        double theta = mode;
        std::vector<double> hist(bins, 0.0);
        SeqTestScratch scratch;
        one_stage = true;
        const std::int64_t steps = 1000000;
        for (std::int64_t i = 0; i < steps; ++i) {
            const StepResult r = sgld_corrected_step(theta, model, cfg, rngs, i, &scratch);
            if (corrected && r.stages != 1) one_stage = false;
            const int b = std::clamp(static_cast<int>((theta - lo) / (hi - lo) * bins), 0, bins - 1);
            hist[static_cast<std::size_t>(b)] += 1.0;
        }
        double l1 = 0.0;
        for (int b = 0; b < bins; ++b)
            l1 += std::fabs(hist[static_cast<std::size_t>(b)] / static_cast<double>(steps) -
                            truth[static_cast<std::size_t>(b)]);
        return l1;
    };

    int halved = 0;
    bool stages_ok = true;
    for (int seed = 0; seed < 5; ++seed) {
        bool one_stage_corr = true, one_stage_unused = true;
        double l1_corr = 0.0, l1_plain = 0.0;
        parallel_for(2, [&](int which) {
            if (which == 0) l1_corr = run_chain_l1(true, 600 + static_cast<std::uint64_t>(seed), one_stage_corr);
            else l1_plain = run_chain_l1(false, 600 + static_cast<std::uint64_t>(seed), one_stage_unused);
        });
        if (!one_stage_corr) stages_ok = false;
        const bool win = l1_corr < 0.5 * l1_plain;
        std::printf("  seed %d: corrected L1 %.4f vs uncorrected %.4f -> %s\n", seed, l1_corr,
                    l1_plain, win ? "halved" : "not halved");
        halved += win ? 1 : 0;
    }
    std::printf("  one-stage decisions on every corrected step: %s\n", stages_ok ? "yes" : "NO");
    return stages_ok && halved >= 4;
}

// ---------------------------------------------------------------------------
// Gibbs conditional accuracy on the D = 100 dense model. The verdict follows
// the stated protocol (500 probes x 1e4 repeats, tolerance 0.015). Probes
// that exceed the tolerance are re-measured at 10x repeats and printed, which
// separates the estimator's binomial noise from the test's actual bias: the
// per-probe standard error reaches 0.005, so the max over 500 probes sits
// near the tolerance even when the underlying bias is well inside it.
bool gibbs_conditional() {
    const FactorizedBinaryModel model = dense_triplet_mrf(100, 515151, 0.02);
    const SiteIndex index = SiteIndex::build(model);
    SequentialTestSpec spec;
    spec.batch_size = 500;
    spec.epsilon = 0.01;

    const int n_probes = 500, reps = 10000;
    struct Probe {
        double error = 0.0;
        double exact = 0.0;
    };
    std::vector<Probe> probes(n_probes);
    auto run_probe = [&](int probe, int repeats) {
        std::mt19937_64 rng(88000 + static_cast<std::uint64_t>(probe));
        std::vector<std::uint8_t> state(100);
        for (auto& b : state) b = rng() & 1;
        const int site = static_cast<int>(rng() % 100);
        const double exact = exact_conditional(site, {state.data(), state.size()}, model, index);
        SeqTestScratch scratch;
        std::int64_t ones = 0;
        std::vector<std::uint8_t> work(state);
        for (int r = 0; r < repeats; ++r) {
            std::copy(state.begin(), state.end(), work.begin());
            ones += approx_gibbs_update(site, work, model, index, spec, rng, &scratch).value;
        }
        return Probe{std::fabs(static_cast<double>(ones) / repeats - exact), exact};
    };
    parallel_for(n_probes, [&](int probe) {
        probes[static_cast<std::size_t>(probe)] = run_probe(probe, reps);
    });

    double max_err = 0.0;
    std::vector<int> offenders;
    for (int p = 0; p < n_probes; ++p) {
        max_err = std::max(max_err, probes[static_cast<std::size_t>(p)].error);
        if (probes[static_cast<std::size_t>(p)].error > 0.015) offenders.push_back(p);
    }
    std::printf("  max |empirical - exact conditional| over 500 probes at 1e4 repeats: %.5f\n",
                max_err);
    if (!offenders.empty()) {
        std::printf("  probes over tolerance, re-measured at 1e5 repeats (noise vs bias):\n");
        std::vector<double> retested(offenders.size());
        parallel_for(static_cast<int>(offenders.size()), [&](int k) {
            retested[static_cast<std::size_t>(k)] =
                run_probe(offenders[static_cast<std::size_t>(k)], 100000).error;
        });
        double max_retested = 0.0;
        for (std::size_t k = 0; k < offenders.size(); ++k) {
            const Probe& pr = probes[static_cast<std::size_t>(offenders[k])];
            std::printf("    probe %3d: exact=%.4f err@1e4=%.5f err@1e5=%.5f (se@1e4=%.4f)\n",
                        offenders[k], pr.exact, pr.error, retested[k],
                        std::sqrt(pr.exact * (1.0 - pr.exact) / reps));
            max_retested = std::max(max_retested, retested[k]);
        }
        std::printf("  max error of those probes at 10x repeats: %.5f\n", max_retested);
    }
    return max_err <= 0.015;
}

// ---------------------------------------------------------------------------
// Exact Gibbs vs enumeration on the D = 8 model, one million sweeps.
bool gibbs_enumeration() {
    const int d = 8;
    const FactorizedBinaryModel model = dense_triplet_mrf(d, 606060, 0.15);
    const SiteIndex index = SiteIndex::build(model);
    const auto joint = enumerate_joint(model);
    std::mt19937_64 subset_rng(11);
    const auto subsets = draw_subsets(d, 1600, 5, subset_rng);
    const auto truth = subset_distribution_from_joint(joint, d, subsets);

    std::mt19937_64 rng(202020);
    std::vector<std::uint8_t> state(d, 0);
    std::vector<std::vector<double>> counts(subsets.size());
    for (std::size_t m = 0; m < subsets.size(); ++m) counts[m].assign(32, 0.0);
    const std::int64_t sweeps = 1000000;
    for (std::int64_t s = 0; s < sweeps; ++s) {
        for (int i = 0; i < d; ++i) exact_gibbs_update(i, state, model, index, rng);
        for (std::size_t m = 0; m < subsets.size(); ++m) {
            std::size_t cfg = 0;
            for (std::size_t t = 0; t < subsets[m].size(); ++t)
                cfg |= static_cast<std::size_t>(state[subsets[m][t]] ? 1 : 0) << t;
            counts[m][cfg] += 1.0;
        }
    }
    double err = 0.0;
    for (std::size_t m = 0; m < subsets.size(); ++m) {
        double l1 = 0.0;
        for (std::size_t c = 0; c < 32; ++c)
            l1 += std::fabs(counts[m][c] / static_cast<double>(sweeps) - truth[m][c]);
        err += l1;
    }
    err /= static_cast<double>(subsets.size());
    std::printf("  subset-L1 error vs enumeration at 1e6 sweeps: %.5f\n", err);
    return err <= 0.02;
}

// ---------------------------------------------------------------------------
// Stationary-distribution bound with a brute-forced contraction coefficient.
bool dobrushin_bound() {
    bool all_ok = true;
    for (std::uint64_t seed : {401u, 402u, 403u}) {
        const int d = 4;
        const int n_states = 1 << d;
        const FactorizedBinaryModel model = dense_triplet_mrf(d, seed, 0.15);
        const SiteIndex index = SiteIndex::build(model);

        // Exact conditionals per (site, configuration of the rest).
        auto conditional_matrix = [&](const std::vector<std::vector<double>>& cond) {
            // Sweep kernel T = T_1 T_2 ... T_D as a dense matrix.
            std::vector<double> t(n_states * n_states, 0.0);
            for (int x = 0; x < n_states; ++x) t[x * n_states + x] = 1.0;
            std::vector<double> next(n_states * n_states);
            for (int site = 0; site < d; ++site) {
                std::fill(next.begin(), next.end(), 0.0);
                for (int x = 0; x < n_states; ++x) {
                    const int x1 = x | (1 << site);
                    const int x0 = x & ~(1 << site);
                    const double p1 = cond[static_cast<std::size_t>(site)][static_cast<std::size_t>(x)];
                    for (int from = 0; from < n_states; ++from) {
                        const double w = t[from * n_states + x];
                        if (w == 0.0) continue;
                        next[from * n_states + x1] += w * p1;
                        next[from * n_states + x0] += w * (1.0 - p1);
                    }
                }
                std::swap(t, next);
            }
            return t;
        };

        std::vector<std::vector<double>> exact_cond(d, std::vector<double>(n_states));
        std::vector<std::uint8_t> state(d);
        for (int site = 0; site < d; ++site)
            for (int x = 0; x < n_states; ++x) {
                for (int v = 0; v < d; ++v) state[static_cast<std::size_t>(v)] = (x >> v) & 1;
                exact_cond[static_cast<std::size_t>(site)][static_cast<std::size_t>(x)] =
                    exact_conditional(site, {state.data(), state.size()}, model, index);
            }
        const auto t_exact = conditional_matrix(exact_cond);

        // Dobrushin coefficient of the exact sweep kernel.
        double eta = 0.0;
        for (int x = 0; x < n_states; ++x)
            for (int y = 0; y < n_states; ++y) {
                double tv = 0.0;
                for (int z = 0; z < n_states; ++z)
                    tv += std::fabs(t_exact[x * n_states + z] - t_exact[y * n_states + z]);
                eta = std::max(eta, 0.5 * tv);
            }

        // Measured approximate conditionals (small batches so the test bites).
        SequentialTestSpec spec;
        spec.batch_size = 1;
        spec.epsilon = 0.2;
        std::vector<std::vector<double>> approx_cond(d, std::vector<double>(n_states));
        double delta_max = 0.0;
        std::mt19937_64 rng(seed * 91 + 7);
        SeqTestScratch scratch;
        const int reps = 200000;
        for (int site = 0; site < d; ++site)
            for (int x = 0; x < n_states; ++x) {
                std::int64_t ones = 0;
                std::vector<std::uint8_t> base(d);
                for (int v = 0; v < d; ++v) base[static_cast<std::size_t>(v)] = (x >> v) & 1;
                std::vector<std::uint8_t> work(base);
                for (int r = 0; r < reps; ++r) {
                    std::copy(base.begin(), base.end(), work.begin());
                    ones += approx_gibbs_update(site, work, model, index, spec, rng, &scratch).value;
                }
                const double p = static_cast<double>(ones) / reps;
                approx_cond[static_cast<std::size_t>(site)][static_cast<std::size_t>(x)] = p;
                delta_max = std::max(
                    delta_max,
                    std::fabs(p - exact_cond[static_cast<std::size_t>(site)][static_cast<std::size_t>(x)]));
            }
        const auto t_approx = conditional_matrix(approx_cond);

        // Stationary distributions: the exact one is the enumerated joint;
        // the approximate one by power iteration on the measured kernel.
        const auto s0 = enumerate_joint(model);
        std::vector<double> s_eps(n_states, 1.0 / n_states), tmp(n_states);
        for (int it = 0; it < 2000; ++it) {
            std::fill(tmp.begin(), tmp.end(), 0.0);
            for (int x = 0; x < n_states; ++x)
                for (int z = 0; z < n_states; ++z) tmp[z] += s_eps[x] * t_approx[x * n_states + z];
            std::swap(s_eps, tmp);
        }
        double dv = 0.0;
        for (int z = 0; z < n_states; ++z) dv += std::fabs(s0[z] - s_eps[z]);
        dv *= 0.5;
        const double bound = delta_max / (1.0 - eta);
        std::printf("  seed %llu: eta=%.4f, Delta_max=%.4f, d_v=%.5f, bound=%.5f -> %s\n",
                    static_cast<unsigned long long>(seed), eta, delta_max, dv, bound,
                    dv <= bound ? "holds" : "VIOLATED");
        if (!(eta < 1.0) || dv > bound) all_ok = false;
    }
    return all_ok;
}

// ---------------------------------------------------------------------------
// Design dominance: worst-case vs average design on held-out samples.
bool design_dominance() {
    std::mt19937_64 rng(777222);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw_samples = [&](int count) {
        std::vector<MomentSample> s;
        for (int i = 0; i < count; ++i) {
            const std::int64_t n = 5000;
            const double p_a = 0.2 + 0.7 * unif(rng);
            const double mu = std::log(p_a) / static_cast<double>(n);
            const double spread = 0.5 + 7.5 * unif(rng);
            s.push_back({mu, std::fabs(mu) * std::sqrt(static_cast<double>(n - 1)) / spread, n});
        }
        return s;
    };
    const auto train = draw_samples(40);
    const auto heldout = draw_samples(40);

    DesignGrid grid;
    grid.pi1 = {0.02, 0.05, 0.1, 0.2};
    grid.epsilon = {0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    grid.alpha = {0.5, 0.65, 0.8, 1.0};
    const auto evals = evaluate_design_grid(train, grid, 128);

    auto realized = [&](const DesignResult& r, double& avg_abs_delta, double& avg_usage) {
        const StageStructure stages =
            StageStructure::uniform(r.pi1, normal_quantile(1.0 - r.epsilon), r.alpha);
        const ErrorUsageCurve curve = ErrorUsageCurve::build(stages, 256);
        avg_abs_delta = 0.0;
        avg_usage = 0.0;
        for (const MomentSample& s : heldout) {
            const CurveDelta d = delta_on_curve(s.mu, s.sigma_l, s.n_data, curve, 128);
            avg_abs_delta += std::fabs(d.delta);
            avg_usage += d.expected_usage;
        }
        avg_abs_delta /= static_cast<double>(heldout.size());
        avg_usage /= static_cast<double>(heldout.size());
    };

    bool ok = true;
    for (double budget : {0.01, 0.05, 0.1}) {
        const DesignResult avg = select_average(evals, budget);
        const DesignResult worst = select_worst_case(evals, budget);
        double avg_err = 0, avg_use = 0, worst_err = 0, worst_use = 0;
        realized(avg, avg_err, avg_use);
        realized(worst, worst_err, worst_use);
        const bool conservative = worst_err <= avg_err + 1e-12;
        const bool costlier = worst_use >= avg_use - 1e-12;
        std::printf("  budget %.2f: avg (pi1=%.2f eps=%.3f a=%.2f) err %.5f use %.3f | "
                    "worst (pi1=%.2f eps=%.3f a=%.2f) err %.5f use %.3f -> %s\n",
                    budget, avg.pi1, avg.epsilon, avg.alpha, avg_err, avg_use, worst.pi1,
                    worst.epsilon, worst.alpha, worst_err, worst_use,
                    conservative && costlier ? "dominated" : "VIOLATED");
        if (!conservative || !costlier) ok = false;
    }
    return ok;
}

// ---------------------------------------------------------------------------
// RJMCMC against mask enumeration on a small instance.
bool rjmcmc_oracle() {
    // Two strong features, one borderline, two inert.
    const int d = 5;
    const std::int64_t n = 200;
    std::mt19937_64 data_rng(909);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    VarSelModel model;
    model.data.n_rows = n;
    model.data.n_features = d;
    model.data.features.resize(static_cast<std::size_t>(n) * d);
    model.data.labels.resize(static_cast<std::size_t>(n));
    const double theta_true[5] = {1.3, -1.0, 0.85, 0.0, 0.0};
    for (std::int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            const double x = gauss(data_rng);
            model.data.features[static_cast<std::size_t>(i) * d + j] = x;
            s += x * theta_true[j];
        }
        model.data.labels[static_cast<std::size_t>(i)] = unif(data_rng) < 1.0 / (1.0 + std::exp(-s));
    }
    // Size penalty scaled to the instance: a birth proposes its coefficient
    // from N(0, sigma_birth), which at N = 200 can recover a few nats of
    // likelihood at best, so the model-size penalty -log(lambda) must sit in
    // that range for the mask chain to move at all.
    model.lambda = 1e-2;

    const std::vector<double> truth = varsel_inclusion_truth(model, 28);

    ChainConfig cfg;
    cfg.test.exact = true;
    ChainRngs rngs = ChainRngs::make(2718, 0);
    VarSelState state = initial_varsel_state(model, cfg, rngs.proposal);
    SeqTestScratch scratch;
    const std::int64_t steps = 1000000, burn = steps / 10;
    std::vector<double> incl(static_cast<std::size_t>(d), 0.0);
    std::int64_t kept = 0, mask_changes = 0;
    double mean_k = 0.0;
    std::vector<std::uint8_t> prev_gamma = state.gamma;
    for (std::int64_t i = 0; i < steps; ++i) {
        rjmcmc_step(state, model, cfg, rngs, i, &scratch);
        if (state.gamma != prev_gamma) {
            ++mask_changes;
            prev_gamma = state.gamma;
        }
        if (i >= burn) {
            for (int j = 0; j < d; ++j)
                incl[static_cast<std::size_t>(j)] += state.gamma[static_cast<std::size_t>(j)];
            mean_k += state.k;
            ++kept;
        }
    }
    std::printf("  mask changes: %lld, mean model size: %.3f\n",
                static_cast<long long>(mask_changes), mean_k / static_cast<double>(kept));
    double max_err = 0.0;
    for (int j = 0; j < d; ++j) {
        const double p = incl[static_cast<std::size_t>(j)] / static_cast<double>(kept);
        std::printf("  feature %d: chain %.4f vs enumeration %.4f\n", j, p,
                    truth[static_cast<std::size_t>(j)]);
        max_err = std::max(max_err, std::fabs(p - truth[static_cast<std::size_t>(j)]));
    }
    std::printf("  max |marginal error|: %.4f\n", max_err);
    return max_err <= 0.05;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<bool()>>> criteria{
        {"exhaustion_equivalence", exhaustion_equivalence},
        {"dp_vs_monte_carlo", dp_vs_monte_carlo},
        {"worst_case_identity", worst_case_identity},
        {"delta_cancellation", delta_cancellation},
        {"risk_crossover", risk_crossover},
        {"sgld_correction", sgld_correction},
        {"gibbs_conditional", gibbs_conditional},
        {"gibbs_enumeration", gibbs_enumeration},
        {"dobrushin_bound", dobrushin_bound},
        {"design_dominance", design_dominance},
        {"rjmcmc_oracle", rjmcmc_oracle},
    };

    std::string only = argc > 1 ? argv[1] : "";
    bool matched = false, all_ok = true;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && only != name) continue;
        matched = true;
        const auto start = std::chrono::steady_clock::now();
        const bool ok = fn();
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %s (%.1fs)\n", ok ? "PASS" : "FAIL", name.c_str(), secs);
        std::fflush(stdout);
        all_ok = all_ok && ok;
    }
    if (!matched) {
        std::fprintf(stderr, "unknown criterion: %s\n", only.c_str());
        return 2;
    }
    return all_ok ? 0 : 1;
}
