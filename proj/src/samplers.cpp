#include "seqmh/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "seqmh/stats.hpp"

namespace seqmh {

ChainRngs ChainRngs::make(std::uint64_t seed, std::uint64_t chain_index) {
    ChainRngs r;
    std::seed_seq seq{seed, chain_index, std::uint64_t(0x9e3779b9)};
    r.proposal.seed(seq);
    // Mix the chain index into the per-step test stream seed.
    r.chain_seed = seed ^ (chain_index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
    return r;
}

std::mt19937_64 ChainRngs::test_rng(std::int64_t step) const {
    std::seed_seq seq{chain_seed, static_cast<std::uint64_t>(step), std::uint64_t(0x5bd1e995)};
    return std::mt19937_64(seq);
}

namespace {

StepResult run_test(const LogLikDiffPopulation& pop, double mu0, const TestMode& mode,
                    std::mt19937_64& trng, SeqTestScratch* scratch) {
    StepResult r;
    if (mode.exact) {
        r.accept = exact_mh_test(pop, mu0);
        r.n_used = pop.size;
        r.stages = 1;
    } else {
        const TestDecision d = sequential_mh_test(pop, mu0, mode.spec, trng, scratch);
        r.accept = d.accept;
        r.n_used = d.n_used;
        r.stages = d.stages;
    }
    return r;
}

} // namespace

StepResult random_walk_step(std::vector<double>& theta, const LogisticRegressionModel& model,
                            const ChainConfig& cfg, ChainRngs& rngs, std::int64_t step,
                            SeqTestScratch* scratch) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> prop(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j)
        prop[j] = theta[j] + cfg.sigma_rw * gauss(rngs.proposal);

    std::mt19937_64 trng = rngs.test_rng(step);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(trng);
    while (u <= 0.0) u = unif(trng);

    const double log_prior_ratio = model.log_prior(theta) - model.log_prior(prop);
    const double mu0 = compute_mu0(u, log_prior_ratio, 0.0, model.n_rows);
    const auto pop = model.lldiff_population({theta.data(), theta.size()},
                                             {prop.data(), prop.size()});
    StepResult r = run_test(pop, mu0, cfg.test, trng, scratch);
    if (r.accept) theta = std::move(prop);
    return r;
}

namespace {

double minibatch_grad_log_post(double theta, const Lasso1DModel& model,
                               std::span<const std::uint32_t> batch) {
    double g = 0.0;
    for (std::uint32_t i : batch) g += (model.ys[i] - theta * model.xs[i]) * model.xs[i];
    g *= model.lambda * static_cast<double>(model.size()) / static_cast<double>(batch.size());
    const double sign = theta > 0.0 ? 1.0 : (theta < 0.0 ? -1.0 : 0.0);
    return g - model.lambda0 * sign;
}

} // namespace

SgldProposal sgld_propose(double theta, const Lasso1DModel& model,
                          std::span<const std::uint32_t> minibatch, double step_size,
                          std::mt19937_64& rng) {
    if (minibatch.empty()) throw std::invalid_argument("sgld_propose: empty mini-batch");
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double drift_fwd = 0.5 * step_size * minibatch_grad_log_post(theta, model, minibatch);
    const double mean_fwd = theta + drift_fwd;

    SgldProposal out;
    out.theta_prime = mean_fwd + std::sqrt(step_size) * gauss(rng);
    out.log_q_fwd = log_normal_density(out.theta_prime, mean_fwd, step_size);
    const double drift_rev =
        0.5 * step_size * minibatch_grad_log_post(out.theta_prime, model, minibatch);
    out.log_q_rev = log_normal_density(theta, out.theta_prime + drift_rev, step_size);
    return out;
}

StepResult sgld_corrected_step(double& theta, const Lasso1DModel& model, const ChainConfig& cfg,
                               ChainRngs& rngs, std::int64_t step, SeqTestScratch* scratch) {
    const std::int64_t n = model.size();
    const std::int64_t batch = std::min(cfg.sgld_batch, n);

    // Gradient mini-batch, drawn without replacement from the proposal stream
    // and independent of the test's mini-batches.
    static thread_local std::vector<std::uint32_t> pool;
    pool.resize(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::int64_t i = 0; i < batch; ++i) {
        std::uniform_int_distribution<std::int64_t> pick(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)],
                  pool[static_cast<std::size_t>(pick(rngs.proposal))]);
    }
    const std::span<const std::uint32_t> mb{pool.data(), static_cast<std::size_t>(batch)};

    const SgldProposal prop = sgld_propose(theta, model, mb, cfg.step_size, rngs.proposal);

    if (!cfg.sgld_corrected) {
        theta = prop.theta_prime;
        return {true, 0, 0};
    }

    std::mt19937_64 trng = rngs.test_rng(step);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(trng);
    while (u <= 0.0) u = unif(trng);

    const double log_prior_ratio = model.log_prior(theta) - model.log_prior(prop.theta_prime);
    const double log_proposal_ratio = prop.log_q_rev - prop.log_q_fwd;
    const double mu0 = compute_mu0(u, log_prior_ratio, log_proposal_ratio, n);
    const auto pop = model.lldiff_population(theta, prop.theta_prime);
    StepResult r = run_test(pop, mu0, cfg.test, trng, scratch);
    if (r.accept) theta = prop.theta_prime;
    return r;
}

VarSelState initial_varsel_state(const VarSelModel& model, const ChainConfig& cfg,
                                 std::mt19937_64& rng) {
    const int d = model.n_features();
    VarSelState s;
    s.beta.assign(static_cast<std::size_t>(d), 0.0);
    s.gamma.assign(static_cast<std::size_t>(d), 0);
    if (cfg.rj_init_map) {
        // All features included, coefficients at a few Newton-free gradient
        // steps toward the penalized optimum; enough to land near the mode.
        for (int j = 0; j < d; ++j) s.gamma[static_cast<std::size_t>(j)] = 1;
        s.k = d;
        std::vector<double> theta(static_cast<std::size_t>(d), 0.0);
        for (int it = 0; it < 50; ++it) {
            auto g = model.data.log_lik_grad({theta.data(), theta.size()});
            for (int j = 0; j < d; ++j)
                theta[static_cast<std::size_t>(j)] +=
                    g[static_cast<std::size_t>(j)] / static_cast<double>(model.data.n_rows);
        }
        s.beta = theta;
        if (s.l1_norm() == 0.0) s.beta[0] = model.sigma_birth;
        return s;
    }
    // Single included variable with its coefficient drawn from the birth
    // density; the prior is singular at ||beta||_1 = 0, so starting at an
    // exact zero would freeze every move.
    std::uniform_int_distribution<int> pick(0, d - 1);
    std::normal_distribution<double> gauss(0.0, model.sigma_birth);
    const int j = pick(rng);
    s.gamma[static_cast<std::size_t>(j)] = 1;
    double b = gauss(rng);
    while (b == 0.0) b = gauss(rng);
    s.beta[static_cast<std::size_t>(j)] = b;
    s.k = 1;
    return s;
}

StepResult rjmcmc_step(VarSelState& state, const VarSelModel& model, const ChainConfig& cfg,
                       ChainRngs& rngs, std::int64_t step, SeqTestScratch* scratch) {
    const int d = model.n_features();
    const auto moves = legal_moves(state, d);
    std::uniform_int_distribution<std::size_t> pick_move(0, moves.size() - 1);
    const VarSelMove move = moves[pick_move(rngs.proposal)];

    std::normal_distribution<double> gauss(0.0, 1.0);
    VarSelState prop = state;
    int changed = -1;

    auto pick_component = [&](bool included) {
        std::vector<int> idx;
        for (int j = 0; j < d; ++j)
            if (bool(state.gamma[static_cast<std::size_t>(j)]) == included) idx.push_back(j);
        std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
        return idx[pick(rngs.proposal)];
    };

    switch (move) {
        case VarSelMove::update: {
            changed = pick_component(true);
            prop.beta[static_cast<std::size_t>(changed)] += model.sigma_update * gauss(rngs.proposal);
            break;
        }
        case VarSelMove::birth: {
            changed = pick_component(false);
            prop.gamma[static_cast<std::size_t>(changed)] = 1;
            prop.beta[static_cast<std::size_t>(changed)] = model.sigma_birth * gauss(rngs.proposal);
            prop.k = state.k + 1;
            break;
        }
        case VarSelMove::death: {
            changed = pick_component(true);
            prop.gamma[static_cast<std::size_t>(changed)] = 0;
            prop.beta[static_cast<std::size_t>(changed)] = 0.0;
            prop.k = state.k - 1;
            break;
        }
    }

    std::mt19937_64 trng = rngs.test_rng(step);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(trng);
    while (u <= 0.0) u = unif(trng);

    // Degenerate L1 norms make the threshold infinite in one direction; the
    // decision is then immediate and consumes no data.
    const double l1_cur = state.l1_norm();
    const double l1_prop = prop.l1_norm();
    if (l1_cur == 0.0 || l1_prop == 0.0) {
        const bool accept = l1_prop == 0.0; // proposed state sits at the density spike
        if (accept) state = std::move(prop);
        return {accept, 0, 0};
    }

    const double mu0 = varsel_mu0(move, state, prop, changed, u, model);
    std::vector<double> cur_buf, prop_buf;
    const auto pop = varsel_lldiff_population(model, state, prop, cur_buf, prop_buf);
    StepResult r = run_test(pop, mu0, cfg.test, trng, scratch);
    if (r.accept) state = std::move(prop);
    return r;
}

void write_trace(std::ostream& os, const ChainTrace& trace) {
    char buf[64];
    for (const TraceRecord& r : trace.records) {
        os << r.step;
        for (double p : r.params) {
            std::snprintf(buf, sizeof(buf), "\t%.17g", p);
            os << buf;
        }
        os << "\t" << (r.accept ? 1 : 0) << "\t" << r.n_used << "\t" << r.cumulative_evals
           << "\t" << r.elapsed_ns << "\n";
    }
    if (trace.complete) os << "# done\n";
}

ChainTrace read_trace(const std::string& path, int n_params) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace: " + path);
    ChainTrace trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# done", 0) == 0) trace.complete = true;
            continue;
        }
        std::istringstream ls(line);
        TraceRecord r;
        ls >> r.step;
        r.params.resize(static_cast<std::size_t>(n_params));
        for (double& p : r.params) ls >> p;
        int acc = 0;
        ls >> acc >> r.n_used >> r.cumulative_evals >> r.elapsed_ns;
        if (!ls) throw std::runtime_error("malformed trace record in " + path + ": " + line);
        r.accept = acc != 0;
        trace.records.push_back(std::move(r));
    }
    return trace;
}

} // namespace seqmh
