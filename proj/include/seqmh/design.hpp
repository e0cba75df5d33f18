#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqmh/rwalk.hpp"

// Optimal sequential-test design: grid search over (pi1, epsilon -> G0, alpha)
// minimizing expected data usage subject to an error budget. The average form
// constrains the mean |delta| over an empirical set of proposal moments; the
// worst-case form constrains E at mu_std = 0 and needs no samples.

namespace seqmh {

struct MomentSample {
    double mu = 0.0;      // population mean of l_i for one (theta, theta') pair
    double sigma_l = 0.0; // population std of l_i, must be positive
    std::int64_t n_data = 0;
};

struct DesignGrid {
    std::vector<double> pi1;
    std::vector<double> epsilon;
    std::vector<double> alpha;

    static DesignGrid defaults();
    std::size_t size() const { return pi1.size() * epsilon.size() * alpha.size(); }
};

struct DesignResult {
    double pi1 = 0.0;
    double epsilon = 0.0;
    double g0 = 0.0;
    double alpha = 0.0;
    double predicted_error = 0.0;
    double predicted_usage = 0.0;
    std::int64_t grid_evaluations = 0;
};

class InfeasibleDesign : public std::runtime_error {
  public:
    InfeasibleDesign(double min_error, const std::string& what)
        : std::runtime_error(what), min_achievable_error(min_error) {}
    double min_achievable_error = 0.0;
};

// One grid point with everything both design criteria need. Average-side
// fields are only populated when samples were supplied.
struct GridPointEval {
    double pi1 = 0.0;
    double epsilon = 0.0;
    double g0 = 0.0;
    double alpha = 0.0;
    double avg_usage = 0.0;     // E_samples E_u[pi-bar]
    double avg_abs_delta = 0.0; // E_samples |delta|
    double worst_error = 0.0;   // E(0)
    double worst_usage = 0.0;   // pi-bar(0)
};

// Evaluates every grid point. With nonempty samples this builds an
// error/usage curve per point and integrates it over u for each sample;
// otherwise only the worst-case (mu_std = 0) profile is computed.
std::vector<GridPointEval> evaluate_design_grid(std::span<const MomentSample> samples,
                                                const DesignGrid& grid, int grid_size = 128,
                                                int quadrature_panels = 64);

// Selection from precomputed evaluations. Ties in usage break toward smaller
// predicted error, then smaller pi1. Throws InfeasibleDesign carrying the
// minimal achievable error when no point meets the budget.
DesignResult select_average(std::span<const GridPointEval> evals, double delta_star);
DesignResult select_worst_case(std::span<const GridPointEval> evals, double delta_star);

DesignResult average_design(std::span<const MomentSample> samples, double delta_star,
                            const DesignGrid& grid, int grid_size = 128,
                            int quadrature_panels = 64);
DesignResult worst_case_design(double delta_star, const DesignGrid& grid, int grid_size = 128);

// Text formats: samples as "mu sigma_l N" rows (header optional on read),
// results as a key = value block.
std::vector<MomentSample> read_moment_samples(const std::string& path);
void write_moment_samples(std::ostream& os, std::span<const MomentSample> samples);
void write_design_result(std::ostream& os, const DesignResult& result);

} // namespace seqmh
