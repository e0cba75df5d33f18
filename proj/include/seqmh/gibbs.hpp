#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seqmh/seqtest.hpp"

// Approximate Gibbs sampling for binary models whose joint factorizes as a
// product of potential functions. Flipping one site only needs the factors
// touching it, and the per-factor log ratios form a population the sequential
// test can subsample.

namespace seqmh {

struct BinaryFactor {
    std::vector<std::uint32_t> scope;
    std::vector<double> log_table; // 2^|scope| entries, bit t of the index is scope[t]
};

struct FactorizedBinaryModel {
    int n_vars = 0;
    std::vector<BinaryFactor> factors;

    void validate() const;
    double log_joint(std::span<const std::uint8_t> state) const; // unnormalized
};

// Dense third-order model: every triple {i, j, k} carries one table with
// log-potentials drawn N(0, table_scale^2). D(D-1)(D-2)/6 factors. The
// default scale keeps per-site conditionals spread over (0, 1) at D = 100.
FactorizedBinaryModel dense_triplet_mrf(int n_vars, std::uint64_t seed,
                                        double table_scale = 0.02);

// Flattened per-site view of a model, for fast conditional evaluation.
struct SiteIndex {
    struct Entry {
        std::uint32_t factor = 0;
        std::uint32_t bit_self = 0; // bit position of the site in the table index
    };
    std::vector<std::vector<Entry>> per_site;

    static SiteIndex build(const FactorizedBinaryModel& model);
};

// Per-factor terms log f(X_i = 1, x_-i) - log f(X_i = 0, x_-i) restricted to
// the factors touching site i. The state span must outlive the population.
LogLikDiffPopulation gibbs_ratio_population(const FactorizedBinaryModel& model,
                                            const SiteIndex& index, int site,
                                            std::span<const std::uint8_t> state);

// Threshold variable (1/N) log(u) / log(1-u) as printed in the source
// derivation. Positive for all u in (0, 1): it diverges as u -> 0+ and falls
// to 0 as u -> 1-. Thresholding the mean log factor ratio against it does NOT
// reproduce the exact conditional draw; see gibbs_logit_mu0.
double gibbs_mu0(double u, std::int64_t n_factors);

// Odds-form threshold (1/N) log(u / (1-u)). Testing mean ratio > threshold is
// exactly equivalent to drawing X_i = 1 with the true conditional
// probability, with no sign conditions; the Gibbs updates below use this.
double gibbs_logit_mu0(double u, std::int64_t n_factors);

struct GibbsUpdateResult {
    std::uint8_t value = 0;
    std::int64_t n_used = 0;
    int stages = 0;
};

// Exact conditional draw for one site (sums every factor ratio).
GibbsUpdateResult exact_gibbs_update(int site, std::span<std::uint8_t> state,
                                     const FactorizedBinaryModel& model, const SiteIndex& index,
                                     std::mt19937_64& rng);

// Sequential-test draw: mini-batches of factor ratios until the test decides.
GibbsUpdateResult approx_gibbs_update(int site, std::span<std::uint8_t> state,
                                      const FactorizedBinaryModel& model, const SiteIndex& index,
                                      const SequentialTestSpec& spec, std::mt19937_64& rng,
                                      SeqTestScratch* scratch = nullptr);

// Exact conditional P(X_i = 1 | x_-i), for oracles and probes.
double exact_conditional(int site, std::span<const std::uint8_t> state,
                         const FactorizedBinaryModel& model, const SiteIndex& index);

// Average L1 distance between an empirical joint and reference marginals over
// subsets of five sites. Subsets are drawn without replacement within a
// subset and with replacement across subsets; when n_vars is so small that
// every 5-subset can be enumerated, all of them are used instead.
std::vector<std::vector<std::uint32_t>> draw_subsets(int n_vars, int n_subsets, int subset_size,
                                                     std::mt19937_64& rng);

// Probability table over the 2^|subset| configurations of each subset.
std::vector<std::vector<double>> subset_distribution(std::span<const std::vector<std::uint8_t>> states,
                                                     std::span<const std::vector<std::uint32_t>> subsets);

double subset_l1_error(std::span<const std::vector<std::uint8_t>> states,
                       std::span<const std::vector<double>> truth,
                       std::span<const std::vector<std::uint32_t>> subsets);

// Exhaustive joint for small models (n_vars <= 20).
std::vector<double> enumerate_joint(const FactorizedBinaryModel& model);
std::vector<std::vector<double>> subset_distribution_from_joint(
    const std::vector<double>& joint, int n_vars,
    std::span<const std::vector<std::uint32_t>> subsets);

// Serialization: header "D n_factors", then one factor per line
// (scope indices, then the 2^|scope| log-potential values).
void write_mrf_model(std::ostream& os, const FactorizedBinaryModel& model);
FactorizedBinaryModel read_mrf_model(const std::string& path);

} // namespace seqmh
