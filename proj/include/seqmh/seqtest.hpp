#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

// Sequential approximate Metropolis-Hastings test.
//
// The MH accept/reject decision is recast as a hypothesis test: accept the
// proposal iff the population mean of the per-datapoint log-likelihood
// differences
//     l_i = log p(x_i; theta') - log p(x_i; theta)
// exceeds a threshold mu0 derived from the uniform draw u and the
// prior/proposal ratios. The sequential test consumes mini-batches without
// replacement until a Student-t tail probability falls below the per-stage
// level, or all data is used (at which point the decision is exact).

namespace seqmh {

struct LogLikDiffPopulation {
    std::int64_t size = 0;
    // Evaluates l_i for a batch of indices. Must be deterministic per index.
    std::function<void(std::span<const std::uint32_t>, std::span<double>)> eval_batch;
};

// Wraps a concrete vector of l values as a population (testing / small models).
LogLikDiffPopulation population_from_values(std::vector<double> values);

struct SequentialTestSpec {
    std::int64_t batch_size = 500;
    double epsilon = 0.05;    // per-stage error level, in (0, 0.5]
    double bound_alpha = 0.5; // stage-bound exponent in [0.5, 1]; 0.5 = flat bounds

    // Derived quantities.
    double base_bound() const; // G = Phi^{-1}(1 - epsilon)
    void validate(std::int64_t population_size) const;
};

struct RunningMoments {
    double lbar = 0.0;   // running mean of consumed l_i
    double lsqbar = 0.0; // running mean of l_i^2
    std::int64_t n = 0;

    void add(std::span<const double> values);
};

struct TestDecision {
    bool accept = false;
    std::int64_t n_used = 0;
    int stages = 0;
    double final_delta = 0.0;
    double lbar = 0.0;
};

// Threshold of the reformulated MH test, computed fully in the log domain:
//   mu0 = (1/N) [ log u + log_prior_ratio - log_proposal_ratio ]
// where
//   log_prior_ratio    = log rho(theta)          - log rho(theta')
//   log_proposal_ratio = log q(theta | theta')   - log q(theta' | theta).
// u must lie in (0, 1]; both ratios must be finite.
double compute_mu0(double u, double log_prior_ratio, double log_proposal_ratio,
                   std::int64_t n_data);

// Standard deviation of the sample mean under without-replacement sampling:
//   s = (s_l / sqrt(n)) * sqrt(1 - (n-1)/(N-1)),
//   s_l = sqrt((lsqbar - lbar^2) * n/(n-1)).
// Requires n >= 2. Exactly 0 when n == N or all consumed values are equal.
double estimate_std(const RunningMoments& moments, std::int64_t population_size);

// t = (lbar - mu0) / s. Caller must handle s == 0 (degenerate scale).
double t_statistic(double lbar, double mu0, double s);

// Reusable buffers so inner-loop callers avoid per-test allocation.
struct SeqTestScratch {
    std::vector<std::uint32_t> perm;
    std::vector<double> lvals;
};

// Runs the sequential test. Mini-batches are the prefix of a fresh uniform
// permutation, drawn lazily by partial Fisher-Yates from the supplied rng;
// the last batch may be smaller than batch_size. Decision rule per stage:
// stop when delta = 1 - F_{n-1}(|t|) falls below the stage level; with
// bound_alpha > 0.5 the stage level is Phi(-G_j) for G_j = G * pi_j^{0.5-a},
// which reduces to the flat delta < epsilon rule at bound_alpha = 0.5.
// Ties (lbar == mu0) reject. Termination is guaranteed: at n == N the scale
// is exactly zero and the decision is the sign of lbar - mu0 with delta = 0.
TestDecision sequential_mh_test(const LogLikDiffPopulation& pop, double mu0,
                                const SequentialTestSpec& spec, std::mt19937_64& rng,
                                SeqTestScratch* scratch = nullptr);

// Full-data oracle: evaluates every l_i and accepts iff mean > mu0.
bool exact_mh_test(const LogLikDiffPopulation& pop, double mu0);

} // namespace seqmh
