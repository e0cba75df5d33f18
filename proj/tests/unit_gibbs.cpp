#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "seqmh/gibbs.hpp"
#include "seqmh/stats.hpp"

using namespace seqmh;

TEST_CASE("printed threshold variable: direct evaluations and limits") {
    // u = 0.5: log 0.5 / log 0.5 = 1.
    CHECK(gibbs_mu0(0.5, 10) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(gibbs_mu0(0.9, 10) ==
          doctest::Approx(std::log(0.9) / std::log(0.1) / 10.0).epsilon(1e-14));
    // Positive everywhere, divergent toward u = 0, vanishing toward u = 1.
    double prev = std::numeric_limits<double>::infinity();
    for (double u : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-9}) {
        const double v = gibbs_mu0(u, 1);
        CHECK(v > 0.0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(gibbs_mu0(1e-15, 1) > 1e10);
    CHECK(gibbs_mu0(1.0 - 1e-12, 1) < 1e-9);
    CHECK_THROWS_AS(gibbs_mu0(0.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(gibbs_mu0(1.0, 5), std::invalid_argument);
}

TEST_CASE("odds threshold reproduces the conditional draw exactly") {
    // Testing mean-ratio > logit(u)/N is the same event as u < sigmoid(sum).
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.001, 0.999);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 1 + rep % 7;
        double sum = 0.0;
        std::vector<double> terms(n);
        for (double& t : terms) {
            t = gauss(rng);
            sum += t;
        }
        const double u = unif(rng);
        const bool via_threshold = sum / n > gibbs_logit_mu0(u, n);
        const bool via_conditional = u < 1.0 / (1.0 + std::exp(-sum));
        CHECK(via_threshold == via_conditional);
    }
}

TEST_CASE("the printed form and the odds form disagree on a set of u with positive measure") {
    // With a log-odds sum S > 0, the conditional test fires iff
    // u < sigmoid(S) while the printed comparison fires iff
    // log u / log(1-u) < S/1 ... evaluated per-u below. The disagreement
    // region is substantial; this documents why updates use the odds form.
    const double sum = std::log(3.0); // conditional = 0.75 with one factor
    int agree = 0, disagree = 0;
    for (double u = 0.0005; u < 1.0; u += 0.001) {
        const bool conditional = u < 0.75;
        const bool printed = std::log(u) / std::log1p(-u) < sum;
        if (conditional == printed) ++agree;
        else ++disagree;
    }
    CHECK(disagree > 200); // over a fifth of the unit interval disagrees
    CHECK(agree > 200);
}

TEST_CASE("dense triplet model has the promised factor counts") {
    const FactorizedBinaryModel m = dense_triplet_mrf(10, 4);
    CHECK(m.factors.size() == 10 * 9 * 8 / 6);
    const SiteIndex idx = SiteIndex::build(m);
    for (int i = 0; i < 10; ++i) CHECK(idx.per_site[i].size() == 9 * 8 / 2);
    m.validate();
}

TEST_CASE("ratio population matches a direct joint evaluation") {
    const FactorizedBinaryModel m = dense_triplet_mrf(7, 12);
    const SiteIndex idx = SiteIndex::build(m);
    std::mt19937_64 rng(5);
    std::vector<std::uint8_t> state(7);
    for (auto& b : state) b = rng() & 1;
    for (int site = 0; site < 7; ++site) {
        auto pop = gibbs_ratio_population(m, idx, site, {state.data(), state.size()});
        REQUIRE(pop.size == 6 * 5 / 2);
        std::vector<std::uint32_t> all(static_cast<std::size_t>(pop.size));
        std::iota(all.begin(), all.end(), 0u);
        std::vector<double> vals(all.size());
        pop.eval_batch(all, {vals.data(), vals.size()});
        const double sum = std::accumulate(vals.begin(), vals.end(), 0.0);
        std::vector<std::uint8_t> s1(state.begin(), state.end()), s0 = s1;
        s1[site] = 1;
        s0[site] = 0;
        CHECK(sum == doctest::Approx(m.log_joint({s1.data(), s1.size()}) -
                                     m.log_joint({s0.data(), s0.size()}))
                         .epsilon(1e-10));
        CHECK(exact_conditional(site, {state.data(), state.size()}, m, idx) ==
              doctest::Approx(1.0 / (1.0 + std::exp(-sum))).epsilon(1e-12));
    }
}

TEST_CASE("constant potentials give a fair coin") {
    FactorizedBinaryModel m;
    m.n_vars = 5;
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
            for (int k = j + 1; k < 5; ++k)
                m.factors.push_back({{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                      static_cast<std::uint32_t>(k)},
                                     std::vector<double>(8, 0.7)});
    const SiteIndex idx = SiteIndex::build(m);
    std::mt19937_64 rng(9);
    std::vector<std::uint8_t> state(5, 0);
    std::int64_t ones = 0;
    const int reps = 20000;
    for (int r = 0; r < reps; ++r) ones += exact_gibbs_update(0, state, m, idx, rng).value;
    CHECK(std::fabs(static_cast<double>(ones) / reps - 0.5) < 0.015);

    SequentialTestSpec spec;
    spec.batch_size = 2;
    spec.epsilon = 0.3;
    ones = 0;
    for (int r = 0; r < reps; ++r) ones += approx_gibbs_update(0, state, m, idx, spec, rng).value;
    CHECK(std::fabs(static_cast<double>(ones) / reps - 0.5) < 0.015);
}

TEST_CASE("full-batch approximate update equals the exact update per u") {
    const FactorizedBinaryModel m = dense_triplet_mrf(8, 77);
    const SiteIndex idx = SiteIndex::build(m);
    SequentialTestSpec spec;
    spec.batch_size = 1000; // clamped to the population size, first batch exhausts
    spec.epsilon = 0.01;
    std::vector<std::uint8_t> sa(8, 0), se(8, 0);
    for (int rep = 0; rep < 300; ++rep) {
        std::mt19937_64 ra(500 + rep), re(500 + rep);
        const int site = rep % 8;
        const auto a = approx_gibbs_update(site, sa, m, idx, spec, ra);
        const auto e = exact_gibbs_update(site, se, m, idx, re);
        CHECK(a.value == e.value);
        CHECK(a.n_used == e.n_used);
    }
}

TEST_CASE("exact gibbs on a small model converges to the enumerated joint") {
    const int d = 8;
    const FactorizedBinaryModel m = dense_triplet_mrf(d, 2025, 0.15);
    const SiteIndex idx = SiteIndex::build(m);
    const auto joint = enumerate_joint(m);
    std::mt19937_64 rng(1);
    const auto subsets = draw_subsets(d, 1600, 5, rng);
    CHECK(subsets.size() == 56); // all 5-subsets of 8 variables enumerated
    const auto truth = subset_distribution_from_joint(joint, d, subsets);

    std::vector<std::uint8_t> state(d, 0);
    std::vector<std::vector<std::uint8_t>> states;
    const int sweeps = 120000;
    double mid_error = 0.0;
    for (int s = 0; s < sweeps; ++s) {
        for (int i = 0; i < d; ++i) exact_gibbs_update(i, state, m, idx, rng);
        states.push_back({state.begin(), state.end()});
        if (s == sweeps / 10)
            mid_error = subset_l1_error({states.data(), states.size()},
                                        {truth.data(), truth.size()},
                                        {subsets.data(), subsets.size()});
    }
    const double final_error = subset_l1_error({states.data(), states.size()},
                                               {truth.data(), truth.size()},
                                               {subsets.data(), subsets.size()});
    CHECK(final_error < mid_error); // error shrinks with trace length
    CHECK(final_error < 0.05);
}

TEST_CASE("approximate conditionals squash toward one half") {
    // Sites whose exact conditional is extreme get pulled toward the center
    // by early stopping; the signed error is nonpositive above 0.9 and
    // nonnegative below 0.1.
    const int d = 16;
    const FactorizedBinaryModel m = dense_triplet_mrf(d, 31, 0.15);
    const SiteIndex idx = SiteIndex::build(m);
    std::mt19937_64 rng(8);
    SequentialTestSpec spec;
    spec.batch_size = 20; // of 105 factors per site
    spec.epsilon = 0.2;

    SeqTestScratch scratch;
    double signed_high = 0.0, signed_low = 0.0;
    int n_high = 0, n_low = 0;
    std::vector<std::uint8_t> state(d);
    for (int probe = 0; probe < 400 && (n_high < 25 || n_low < 25); ++probe) {
        for (auto& b : state) b = rng() & 1;
        const int site = static_cast<int>(rng() % d);
        const double exact = exact_conditional(site, {state.data(), state.size()}, m, idx);
        const bool high = exact > 0.9, low = exact < 0.1;
        if (!high && !low) continue;
        if ((high && n_high >= 25) || (low && n_low >= 25)) continue;
        const int reps = 3000;
        std::int64_t ones = 0;
        for (int r = 0; r < reps; ++r) {
            std::vector<std::uint8_t> scratch_state(state);
            ones += approx_gibbs_update(site, scratch_state, m, idx, spec, rng, &scratch).value;
        }
        const double err = static_cast<double>(ones) / reps - exact;
        if (high) {
            signed_high += err;
            ++n_high;
        } else {
            signed_low += err;
            ++n_low;
        }
    }
    REQUIRE(n_high >= 10);
    REQUIRE(n_low >= 10);
    // Monte-Carlo slack: per-probe se <= 0.5/sqrt(3000), averaged over probes.
    const double slack_high = 3.0 * 0.5 / std::sqrt(3000.0 * n_high);
    const double slack_low = 3.0 * 0.5 / std::sqrt(3000.0 * n_low);
    CHECK(signed_high / n_high <= slack_high);
    CHECK(signed_low / n_low >= -slack_low);
}

TEST_CASE("subset l1 error: identical and disjoint traces") {
    const int d = 6;
    std::mt19937_64 rng(4);
    const auto subsets = draw_subsets(d, 100, 5, rng);
    CHECK(subsets.size() == 6); // C(6,5) enumerated

    std::vector<std::vector<std::uint8_t>> trace_a(50, std::vector<std::uint8_t>(d, 0));
    const auto dist_a = subset_distribution({trace_a.data(), trace_a.size()},
                                            {subsets.data(), subsets.size()});
    CHECK(subset_l1_error({trace_a.data(), trace_a.size()}, {dist_a.data(), dist_a.size()},
                          {subsets.data(), subsets.size()}) == 0.0);

    // All-ones vs all-zeros: every subset distinguishes them, L1 = 2 each.
    std::vector<std::vector<std::uint8_t>> trace_b(50, std::vector<std::uint8_t>(d, 1));
    CHECK(subset_l1_error({trace_b.data(), trace_b.size()}, {dist_a.data(), dist_a.size()},
                          {subsets.data(), subsets.size()}) == doctest::Approx(2.0));
}

TEST_CASE("model serialization round trip") {
    const FactorizedBinaryModel m = dense_triplet_mrf(6, 99);
    const std::string path = "mrf_roundtrip_test.txt";
    {
        std::ofstream out(path);
        write_mrf_model(out, m);
    }
    const FactorizedBinaryModel back = read_mrf_model(path);
    REQUIRE(back.factors.size() == m.factors.size());
    CHECK(back.n_vars == m.n_vars);
    for (std::size_t f = 0; f < m.factors.size(); ++f) {
        CHECK(back.factors[f].scope == m.factors[f].scope);
        CHECK(back.factors[f].log_table == m.factors[f].log_table);
    }
    std::remove(path.c_str());
}

TEST_CASE("usage accounting: approximate updates consume pairs in batches") {
    const FactorizedBinaryModel m = dense_triplet_mrf(12, 6);
    const SiteIndex idx = SiteIndex::build(m);
    SequentialTestSpec spec;
    spec.batch_size = 13;
    spec.epsilon = 0.05;
    std::mt19937_64 rng(2);
    std::vector<std::uint8_t> state(12, 0);
    const std::int64_t pop = 11 * 10 / 2;
    for (int rep = 0; rep < 200; ++rep) {
        const auto r = approx_gibbs_update(rep % 12, state, m, idx, spec, rng);
        CHECK(r.n_used <= pop);
        CHECK(r.n_used == std::min<std::int64_t>(r.stages * 13, pop));
    }
}
