#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seqmh/seqtest.hpp"

// Target distributions exposing per-datapoint log-likelihood difference
// populations: binary logistic regression, the 1-D L1-regularized linear
// regression toy, and the variable-selection posterior for reversible-jump
// moves. Synthetic generators replace external datasets with seeded draws
// of matching shape.

namespace seqmh {

struct LogisticRegressionModel {
    std::int64_t n_rows = 0;
    int n_features = 0;
    std::vector<double> features; // row-major, n_rows x n_features
    std::vector<std::int8_t> labels;
    double prior_precision = 10.0; // zero-mean spherical Gaussian prior

    double dot_row(std::int64_t i, std::span<const double> theta) const;
    double log_lik_point(std::int64_t i, std::span<const double> theta) const;
    double log_lik(std::span<const double> theta) const;
    double log_prior(std::span<const double> theta) const; // unnormalized
    std::vector<double> log_lik_grad(std::span<const double> theta) const;

    // Lazy population of l_i = log p(x_i; prop) - log p(x_i; cur). The spans
    // must stay alive while the population is used.
    LogLikDiffPopulation lldiff_population(std::span<const double> cur,
                                           std::span<const double> prop) const;
};

LogisticRegressionModel synth_logistic_dataset(std::int64_t n_rows, int n_features,
                                               std::uint64_t seed);

// y_i = theta x_i + noise with precision lambda; Laplace prior exp(-lambda0 |theta|).
struct Lasso1DModel {
    std::vector<double> xs, ys;
    double lambda = 3.0;
    double lambda0 = 4950.0;
    // Sufficient statistics for the quadratic part, filled by finalize().
    double sum_x2 = 0.0, sum_xy = 0.0, sum_y2 = 0.0;

    void finalize();
    std::int64_t size() const { return static_cast<std::int64_t>(xs.size()); }
    double log_lik_point(std::int64_t i, double theta) const;
    double log_post(double theta) const;      // unnormalized log posterior
    double grad_log_post(double theta) const; // subgradient 0 at theta == 0
    double log_prior(double theta) const { return -lambda0 * std::abs(theta); }
    LogLikDiffPopulation lldiff_population(double cur, double prop) const;
};

// The paper-scale toy: N = 10^4, x ~ N(0, 1), y = 0.5 x + xi with
// xi ~ N(0, 1/3). The prior shifts the posterior mode well away from the
// least-squares fit, and the stochastic-gradient noise visibly overdisperses
// an uncorrected Langevin chain at step size 5e-6.
Lasso1DModel synth_lasso_dataset(std::uint64_t seed);

// --- variable selection (reversible jump) ---

enum class VarSelMove { update, birth, death };

struct VarSelState {
    std::vector<double> beta;         // value meaningful only where included
    std::vector<std::uint8_t> gamma;  // inclusion mask
    int k = 0;                        // number of included features

    double l1_norm() const; // over included components
    std::vector<double> dense_theta() const; // beta masked by gamma
};

struct VarSelModel {
    LogisticRegressionModel data;
    double lambda = 1e-10;     // model-size parameter
    double sigma_update = 0.01;
    double sigma_birth = 0.1;

    int n_features() const { return data.n_features; }
};

// Legal moves for the current mask: update always, birth while k < D,
// death while k > 1.
std::vector<VarSelMove> legal_moves(const VarSelState& state, int n_features);

// log p(gamma -> gamma') under uniform choice among legal move types, then
// uniform choice of the component.
double log_move_prob(const VarSelState& from, VarSelMove move, int n_features);

// Move-specific threshold, fully in the log domain. `changed` is the
// component born or killed (ignored for updates).
double varsel_mu0(VarSelMove move, const VarSelState& state, const VarSelState& proposed,
                  int changed, double u, const VarSelModel& model);

LogLikDiffPopulation varsel_lldiff_population(const VarSelModel& model, const VarSelState& cur,
                                              const VarSelState& prop,
                                              std::vector<double>& cur_buf,
                                              std::vector<double>& prop_buf);

// Dataset text I/O, one row per datapoint with the label in the last column.
void write_logistic_dataset(std::ostream& os, const LogisticRegressionModel& m);
LogisticRegressionModel read_logistic_dataset(const std::string& path);

} // namespace seqmh
