#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

// Theoretical characterization of the sequential test. Conditioned on the
// standardized mean
//     mu_std = (mu - mu0) * sqrt(N - 1) / sigma_l,
// the stagewise z statistics follow a Gaussian random walk whose conditional
// mean and variance depend only on the data proportions pi_j. Error and
// expected data usage are obtained by propagating the surviving density
// through the walk (dynamic programming, O(L^2 J)); the error in the
// acceptance probability follows by quadrature over the uniform draw u.

namespace seqmh {

// Stage proportions and |z| stopping bounds. pi is strictly increasing with
// pi.back() == 1; the final stage decides exactly and its bound is unused.
struct StageStructure {
    std::vector<double> pi;
    std::vector<double> bounds;

    std::size_t num_stages() const { return pi.size(); }
    static StageStructure uniform(double pi1, double g0, double alpha = 0.5);
};

// Uniform proportions pi_j = j * pi1 capped at 1; J = ceil(1/pi1) stages,
// the last possibly partial.
std::vector<double> uniform_pi_grid(double pi1);

// Stage bound family G_j = g0 * pi_j^(0.5 - alpha); alpha = 0.5 gives flat
// bounds, alpha = 1 the steeply decaying early-stage shape.
std::vector<double> bound_sequence(double g0, double alpha, std::span<const double> pi_grid);

struct RandomWalkParams {
    double mu_std = 0.0;
    StageStructure stages;

    static RandomWalkParams uniform(double mu_std, double pi1, double g0, double alpha = 0.5);
};

struct GaussianStep {
    double mean = 0.0;
    double variance = 0.0;
};

// Conditional law of z_j given z_{j-1}. pi_prev == 0 denotes the first stage
// (z_prev ignored); pi_cur == pi_prev freezes the walk (variance 0).
GaussianStep rw_conditional_params(double mu_std, double pi_prev, double pi_cur, double z_prev);

struct RandomWalkProfile {
    double error = 0.0;          // P(wrong decision), in [0, 0.5]
    double expected_usage = 0.0; // E[pi at stopping time]
    std::vector<double> stop_mass;
    bool converged = true;  // profile stable under grid doubling
    double grid_shift = 0.0; // observed change when L doubled
};

// DP over the walk: discretizes z in [-G_j, G_j] into grid_size midpoints per
// stage, midpoint-rule transition integrals, exact Gaussian tails for the
// stopping masses. The final stage absorbs all surviving mass with an exact
// decision. Error counts exits below -G_j for mu_std >= 0 (mirrored else).
// Runs at grid_size/2 and grid_size; flags non-convergence beyond 1e-4.
RandomWalkProfile dp_error_and_usage(const RandomWalkParams& params, int grid_size = 256);

// E at mu_std = 0 (the maximum over mu_std); equals (1 - P(stop at J)) / 2.
double worst_case_error(double pi1, std::span<const double> bounds, int grid_size = 256);

struct EmpiricalProfile {
    double error = 0.0;
    double error_se = 0.0;
    double expected_usage = 0.0;
    double usage_se = 0.0;
    std::vector<double> stop_mass;
};

// Monte-Carlo oracle: samples the walk directly and applies the bounds.
EmpiricalProfile simulate_sequential_tests(double mu_std, const RandomWalkParams& params,
                                           std::int64_t trials, std::mt19937_64& rng);

struct DeltaResult {
    double delta = 0.0;                 // P_{a,eps} - P_a
    double p_a_exact = 0.0;
    double p_a_approx = 0.0;
    double abs_error_expectation = 0.0; // E_u[E]
    bool converged = true;
};

// Error in the acceptance probability for a proposal with population moments
// (mu, sigma_l) over N datapoints, symmetric proposal / flat prior so that
// mu0(u) = log(u)/N and P_a = min(1, e^{N mu}):
//   delta = int_{P_a}^1 E(mu_std(u)) du - int_0^{P_a} E(mu_std(u)) du.
// Adaptive quadrature split at u = P_a; E evaluated by the DP at grid_size.
DeltaResult delta_acceptance(double mu, double sigma_l, std::int64_t n_data,
                             const StageStructure& stages, int quadrature_points = 32,
                             int grid_size = 256);

// Tabulated E(mu_std) and pi-bar(mu_std) for one stage structure, symmetric
// in mu_std with linear interpolation; used where many quadrature evaluations
// share a structure (test design). Tabulation stops once both curves reach
// their large-mu_std limits.
struct ErrorUsageCurve {
    std::vector<double> mu;
    std::vector<double> error;
    std::vector<double> usage;
    double pi1 = 1.0;

    double error_at(double mu_std) const;
    double usage_at(double mu_std) const;

    static ErrorUsageCurve build(const StageStructure& stages, int grid_size = 128);
};

struct CurveDelta {
    double delta = 0.0;
    double p_a_exact = 0.0;
    double abs_error_expectation = 0.0;
    double expected_usage = 0.0; // E_u[pi-bar(mu_std(u))]
};

CurveDelta delta_on_curve(double mu, double sigma_l, std::int64_t n_data,
                          const ErrorUsageCurve& curve, int panels = 64);

// Tabular text output (header + rows: mu_std error usage delta).
struct ProfileRow {
    double mu_std = 0.0;
    double error = 0.0;
    double usage = 0.0;
    double delta = 0.0;
};
void write_profile_table(std::ostream& os, std::span<const ProfileRow> rows);

} // namespace seqmh
