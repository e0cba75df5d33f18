#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seqmh/models.hpp"
#include "seqmh/seqtest.hpp"

// Markov chain drivers pairing proposals with the sequential test: random-walk
// MH, stochastic-gradient Langevin proposals with an MH correction, and
// reversible-jump variable selection. Each exact-mode chain is the same driver
// with the full-data test substituted.

namespace seqmh {

struct TestMode {
    bool exact = false;
    SequentialTestSpec spec;
};

struct ChainConfig {
    TestMode test;
    double sigma_rw = 0.01;       // random-walk proposal std
    double step_size = 5e-6;      // Langevin step size (proposal variance)
    std::int64_t sgld_batch = 500; // gradient mini-batch size
    bool sgld_corrected = true;
    double sigma_update = 0.01;   // reversible-jump move scales
    double sigma_birth = 0.1;
    double lambda_model = 1e-10;
    bool rj_init_map = false;
    std::int64_t iterations = 1000;
    std::int64_t trace_every = 10;
    std::uint64_t seed = 1;
};

// Proposal draws and test draws come from separate streams so that exact and
// approximate chains consume proposal randomness identically. The test stream
// is re-derived per step, which keeps trajectories aligned no matter how many
// draws a sequential test consumes.
struct ChainRngs {
    std::uint64_t chain_seed = 0;
    std::mt19937_64 proposal;

    static ChainRngs make(std::uint64_t seed, std::uint64_t chain_index);
    std::mt19937_64 test_rng(std::int64_t step) const;
};

struct StepResult {
    bool accept = false;
    std::int64_t n_used = 0; // datapoints consumed by the accept/reject test
    int stages = 0;
};

struct TraceRecord {
    std::int64_t step = 0;
    std::vector<double> params;
    bool accept = false;
    std::int64_t n_used = 0;
    std::int64_t cumulative_evals = 0;
    std::int64_t elapsed_ns = 0;
};

struct ChainTrace {
    std::vector<TraceRecord> records;
    bool complete = false;
};

void write_trace(std::ostream& os, const ChainTrace& trace);
ChainTrace read_trace(const std::string& path, int n_params);

// One random-walk MH step on the logistic posterior (symmetric proposal, so
// mu0 = (1/N) log[u rho(theta)/rho(theta')]). Mutates theta in place.
StepResult random_walk_step(std::vector<double>& theta, const LogisticRegressionModel& model,
                            const ChainConfig& cfg, ChainRngs& rngs, std::int64_t step,
                            SeqTestScratch* scratch = nullptr);

struct SgldProposal {
    double theta_prime = 0.0;
    double log_q_fwd = 0.0; // log q(theta' | theta, X_n)
    double log_q_rev = 0.0; // log q(theta | theta', X_n)
};

// Langevin proposal from one gradient mini-batch, with both component-kernel
// densities for the correction test.
SgldProposal sgld_propose(double theta, const Lasso1DModel& model,
                          std::span<const std::uint32_t> minibatch, double step_size,
                          std::mt19937_64& rng);

// Corrected step: fresh gradient mini-batch, sequential test with
// mu0 = (1/N) log[u rho(theta) q(theta'|theta,X_n) / (rho(theta') q(theta|theta',X_n))].
// With cfg.sgld_corrected == false the proposal is always accepted.
StepResult sgld_corrected_step(double& theta, const Lasso1DModel& model, const ChainConfig& cfg,
                               ChainRngs& rngs, std::int64_t step,
                               SeqTestScratch* scratch = nullptr);

// One reversible-jump step: uniform choice among legal moves, move-specific
// threshold, sequential (or exact) test on the masked likelihood population.
StepResult rjmcmc_step(VarSelState& state, const VarSelModel& model, const ChainConfig& cfg,
                       ChainRngs& rngs, std::int64_t step, SeqTestScratch* scratch = nullptr);

VarSelState initial_varsel_state(const VarSelModel& model, const ChainConfig& cfg,
                                 std::mt19937_64& rng);

} // namespace seqmh
