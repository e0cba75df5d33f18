#include "seqmh/seqtest.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "seqmh/stats.hpp"

namespace seqmh {

LogLikDiffPopulation population_from_values(std::vector<double> values) {
    auto data = std::make_shared<std::vector<double>>(std::move(values));
    LogLikDiffPopulation pop;
    pop.size = static_cast<std::int64_t>(data->size());
    pop.eval_batch = [data](std::span<const std::uint32_t> idx, std::span<double> out) {
        for (std::size_t i = 0; i < idx.size(); ++i) out[i] = (*data)[idx[i]];
    };
    return pop;
}

double SequentialTestSpec::base_bound() const {
    return normal_quantile(1.0 - epsilon);
}

void SequentialTestSpec::validate(std::int64_t population_size) const {
    if (population_size < 1) throw std::invalid_argument("population must have N >= 1");
    if (batch_size < 1 || batch_size > population_size)
        throw std::invalid_argument("batch_size must satisfy 1 <= m <= N");
    if (!(epsilon > 0.0 && epsilon <= 0.5))
        throw std::invalid_argument("epsilon must lie in (0, 0.5]");
    if (!(bound_alpha >= 0.5 && bound_alpha <= 1.0))
        throw std::invalid_argument("bound_alpha must lie in [0.5, 1]");
}

void RunningMoments::add(std::span<const double> values) {
    if (values.empty()) return;
    double sum = 0.0, sumsq = 0.0;
    for (double v : values) {
        sum += v;
        sumsq += v * v;
    }
    const double total = static_cast<double>(n) + static_cast<double>(values.size());
    lbar = (lbar * static_cast<double>(n) + sum) / total;
    lsqbar = (lsqbar * static_cast<double>(n) + sumsq) / total;
    n += static_cast<std::int64_t>(values.size());
}

double compute_mu0(double u, double log_prior_ratio, double log_proposal_ratio,
                   std::int64_t n_data) {
    if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("compute_mu0: u must be in (0, 1]");
    if (n_data < 1) throw std::invalid_argument("compute_mu0: N must be >= 1");
    if (!std::isfinite(log_prior_ratio) || !std::isfinite(log_proposal_ratio))
        throw std::invalid_argument("compute_mu0: ratios must be finite");
    return (std::log(u) + log_prior_ratio - log_proposal_ratio) / static_cast<double>(n_data);
}

double estimate_std(const RunningMoments& m, std::int64_t population_size) {
    if (m.n < 2) throw std::invalid_argument("estimate_std: need at least two datapoints");
    if (population_size < m.n) throw std::invalid_argument("estimate_std: n exceeds N");
    if (m.n == population_size) return 0.0;
    const double n = static_cast<double>(m.n);
    const double var = std::max(0.0, m.lsqbar - m.lbar * m.lbar) * n / (n - 1.0);
    const double fpc = 1.0 - (n - 1.0) / (static_cast<double>(population_size) - 1.0);
    return std::sqrt(var / n) * std::sqrt(std::max(0.0, fpc));
}

double t_statistic(double lbar, double mu0, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("t_statistic: degenerate scale s <= 0");
    return (lbar - mu0) / s;
}

namespace {

// Draws the next `take` entries of a uniform permutation of {0..N-1}.
std::span<const std::uint32_t> next_permutation_chunk(SeqTestScratch& ws,
                                                      std::mt19937_64& rng,
                                                      std::int64_t offset,
                                                      std::int64_t take) {
    const std::int64_t n = static_cast<std::int64_t>(ws.perm.size());
    for (std::int64_t i = offset; i < offset + take; ++i) {
        std::uniform_int_distribution<std::int64_t> pick(i, n - 1);
        std::swap(ws.perm[i], ws.perm[pick(rng)]);
    }
    return {ws.perm.data() + offset, static_cast<std::size_t>(take)};
}

double stage_level(const SequentialTestSpec& spec, double base_bound, double pi_j) {
    if (spec.bound_alpha == 0.5) return spec.epsilon;
    const double g_j = base_bound * std::pow(pi_j, 0.5 - spec.bound_alpha);
    return normal_cdf(-g_j);
}

} // namespace

TestDecision sequential_mh_test(const LogLikDiffPopulation& pop, double mu0,
                                const SequentialTestSpec& spec, std::mt19937_64& rng,
                                SeqTestScratch* scratch) {
    spec.validate(pop.size);
    if (!std::isfinite(mu0)) throw std::invalid_argument("sequential_mh_test: mu0 must be finite");
    if (!pop.eval_batch) throw std::invalid_argument("sequential_mh_test: population has no evaluator");

    SeqTestScratch local;
    SeqTestScratch& ws = scratch ? *scratch : local;
    const std::int64_t n_total = pop.size;
    ws.perm.resize(static_cast<std::size_t>(n_total));
    std::iota(ws.perm.begin(), ws.perm.end(), 0u);

    const double base_bound = spec.base_bound();
    RunningMoments moments;
    TestDecision dec;
    std::int64_t consumed = 0;
    int stage = 0;

    while (true) {
        ++stage;
        const std::int64_t take = std::min(spec.batch_size, n_total - consumed);
        auto idx = next_permutation_chunk(ws, rng, consumed, take);
        ws.lvals.resize(static_cast<std::size_t>(take));
        pop.eval_batch(idx, {ws.lvals.data(), ws.lvals.size()});
        moments.add({ws.lvals.data(), ws.lvals.size()});
        consumed += take;

        if (consumed == n_total) {
            // Exhaustion: s == 0 exactly, delta defined as 0 < epsilon.
            dec = {moments.lbar > mu0, consumed, stage, 0.0, moments.lbar};
            break;
        }
        if (moments.n < 2) continue;
        const double s = estimate_std(moments, n_total);
        if (s == 0.0) {
            // Constant mini-batch: |t| is infinite in the limit, decide by sign.
            dec = {moments.lbar > mu0, consumed, stage, 0.0, moments.lbar};
            break;
        }
        const double t = t_statistic(moments.lbar, mu0, s);
        const double delta = student_t_tail(std::fabs(t), static_cast<double>(moments.n - 1));
        const double level = stage_level(spec, base_bound,
                                         static_cast<double>(consumed) / static_cast<double>(n_total));
        if (delta < level) {
            dec = {moments.lbar > mu0, consumed, stage, delta, moments.lbar};
            break;
        }
    }
    return dec;
}

bool exact_mh_test(const LogLikDiffPopulation& pop, double mu0) {
    if (pop.size < 1 || !pop.eval_batch)
        throw std::invalid_argument("exact_mh_test: invalid population");
    constexpr std::int64_t chunk = 4096;
    std::vector<std::uint32_t> idx;
    std::vector<double> vals;
    double sum = 0.0;
    for (std::int64_t start = 0; start < pop.size; start += chunk) {
        const std::int64_t take = std::min(chunk, pop.size - start);
        idx.resize(static_cast<std::size_t>(take));
        std::iota(idx.begin(), idx.end(), static_cast<std::uint32_t>(start));
        vals.resize(static_cast<std::size_t>(take));
        pop.eval_batch(idx, {vals.data(), vals.size()});
        for (double v : vals) sum += v;
    }
    return sum / static_cast<double>(pop.size) > mu0;
}

} // namespace seqmh
