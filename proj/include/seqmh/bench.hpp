#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "seqmh/design.hpp"
#include "seqmh/models.hpp"
#include "seqmh/samplers.hpp"

// Experiment harness: flat key-value run configs, multi-chain execution with
// per-chain resumability, ground-truth management, and risk-vs-budget tables.
// All comparisons run on a cumulative likelihood-evaluation axis; wall-clock
// stamps are recorded in traces but never enter any report.

namespace seqmh {

struct RunConfig {
    std::map<std::string, std::string> values;

    static RunConfig load(const std::string& path);
    static RunConfig parse(std::istream& in);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const; // throws if missing
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
};

// Number of concurrent chain workers: SEQMH_WORKERS when set, else the
// hardware concurrency, always at least 1.
int worker_count();

// --- risk engine ---

// One chain's running view of a test function: cumulative evaluation count
// and function value per recorded step.
struct SeriesPoint {
    std::int64_t evals = 0;
    double value = 0.0;
};

struct RiskReport {
    std::vector<std::int64_t> grid;
    std::vector<double> risk;     // mean over functions and chains of (est - truth)^2
    std::vector<double> bias_sq;  // mean over functions of (mean-chain est - truth)^2
    std::vector<double> variance; // risk - bias_sq
    std::vector<double> tau;      // per-chain autocorrelation time estimate
    std::int64_t total_test_evals = 0;
};

// series[function][chain] -> recorded points, sorted by evals. At each grid
// budget g the per-chain estimate averages values recorded in
// (burn_in_fraction * g, g]; grid points where any chain has no usable record
// are dropped from the report.
RiskReport estimate_risk(const std::vector<std::vector<std::vector<SeriesPoint>>>& series,
                         const std::vector<double>& truth, std::vector<std::int64_t> grid,
                         double burn_in_fraction = 0.1);

// Integrated autocorrelation time of one series (initial positive sequence).
double autocorrelation_time(std::span<const double> values);

void write_risk_report(std::ostream& os, const RiskReport& report);

// --- ground truth ---

struct GroundTruth {
    std::vector<double> values;
    std::map<std::string, std::string> provenance;
};

void write_ground_truth(std::ostream& os, const GroundTruth& truth);
GroundTruth read_ground_truth(const std::string& path);

// --- experiment drivers ---

// Runs the experiment named by config key "kind" into config key "out_dir".
// Kinds: random-walk-logistic | sgld-lasso | rjmcmc | gibbs-mrf | analysis |
// design. Deterministic per seed; completed chain traces found in out_dir are
// reused rather than recomputed.
void run_experiment(const RunConfig& config, std::ostream& log);

// Collects design samples from recorded chain snapshots: for each snapshot a
// fresh random-walk proposal is drawn and the exact (mu, sigma_l) of its
// log-likelihood difference population is computed by a full-data pass.
// Pairs with sigma_l == 0 are excluded (count reported via n_excluded).
std::vector<MomentSample> collect_design_samples(std::span<const std::vector<double>> snapshots,
                                                 const LogisticRegressionModel& model,
                                                 double sigma_rw, std::uint64_t seed,
                                                 std::int64_t* n_excluded = nullptr);

// Recompute a risk table from traces on disk plus a stored ground truth.
void risk_from_artifacts(const std::string& trace_dir, const std::string& truth_path,
                         std::ostream& out, std::ostream& log);

// Inclusion-probability reference for the variable-selection posterior:
// enumerates every nonempty mask, integrating the coefficients by
// Gauss-Hermite quadrature around a likelihood fit. Limited to 12 features.
std::vector<double> varsel_inclusion_truth(const VarSelModel& model, int gh_nodes = 24);

} // namespace seqmh
