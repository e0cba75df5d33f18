#include "seqmh/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "seqmh/gibbs.hpp"
#include "seqmh/rwalk.hpp"
#include "seqmh/stats.hpp"

namespace fs = std::filesystem;

namespace seqmh {

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    return parse(in);
}

RunConfig RunConfig::parse(std::istream& in) {
    RunConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) cfg.values[key] = value;
    }
    return cfg;
}

bool RunConfig::has(const std::string& key) const { return values.count(key) > 0; }

std::string RunConfig::get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw std::runtime_error("missing config key: " + key);
    return it->second;
}

std::string RunConfig::get_or(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : std::stod(it->second);
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : std::stoll(it->second);
}

int worker_count() {
    if (const char* env = std::getenv("SEQMH_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// --- risk engine ---

RiskReport estimate_risk(const std::vector<std::vector<std::vector<SeriesPoint>>>& series,
                         const std::vector<double>& truth, std::vector<std::int64_t> grid,
                         double burn_in_fraction) {
    if (series.empty() || series.size() != truth.size())
        throw std::invalid_argument("estimate_risk: series/truth size mismatch");
    const std::size_t n_chains = series.front().size();
    if (n_chains < 2) throw std::invalid_argument("estimate_risk: need at least two chains");
    std::sort(grid.begin(), grid.end());

    RiskReport report;
    for (std::int64_t g : grid) {
        const std::int64_t lo = static_cast<std::int64_t>(burn_in_fraction * static_cast<double>(g));
        bool usable = true;
        double risk = 0.0, bias_sq = 0.0;
        for (std::size_t f = 0; f < series.size() && usable; ++f) {
            double mean_est = 0.0;
            std::vector<double> ests(n_chains);
            for (std::size_t c = 0; c < n_chains; ++c) {
                const auto& pts = series[f][c];
                double sum = 0.0;
                std::int64_t count = 0;
                for (const SeriesPoint& p : pts) {
                    if (p.evals > g) break;
                    if (p.evals > lo) {
                        sum += p.value;
                        ++count;
                    }
                }
                if (count == 0) {
                    usable = false;
                    break;
                }
                ests[c] = sum / static_cast<double>(count);
                mean_est += ests[c];
            }
            if (!usable) break;
            mean_est /= static_cast<double>(n_chains);
            for (double e : ests) risk += (e - truth[f]) * (e - truth[f]);
            bias_sq += (mean_est - truth[f]) * (mean_est - truth[f]);
        }
        if (!usable) continue;
        risk /= static_cast<double>(series.size() * n_chains);
        bias_sq /= static_cast<double>(series.size());
        report.grid.push_back(g);
        report.risk.push_back(risk);
        report.bias_sq.push_back(bias_sq);
        report.variance.push_back(risk - bias_sq);
    }
    if (report.grid.empty())
        throw std::runtime_error("estimate_risk: no grid point covered by every chain");

    for (std::size_t c = 0; c < n_chains; ++c) {
        std::vector<double> vals;
        for (const SeriesPoint& p : series.front()[c]) vals.push_back(p.value);
        report.tau.push_back(autocorrelation_time(vals));
    }
    return report;
}

double autocorrelation_time(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 8) return 1.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : values) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(n);
    if (c0 <= 0.0) return 1.0;

    auto gamma = [&](std::size_t t) {
        double s = 0.0;
        for (std::size_t i = 0; i + t < n; ++i) s += (values[i] - mean) * (values[i + t] - mean);
        return s / static_cast<double>(n);
    };
    // Geyer initial positive sequence over lag pairs.
    double tau = 1.0;
    for (std::size_t t = 1; t + 1 < n / 2; t += 2) {
        const double pair = gamma(t) + gamma(t + 1);
        if (pair <= 0.0) break;
        tau += 2.0 * pair / c0;
    }
    return tau;
}

void write_risk_report(std::ostream& os, const RiskReport& report) {
    os << "evals\trisk\tbias_sq\tvariance\n";
    char buf[160];
    for (std::size_t i = 0; i < report.grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld\t%.17g\t%.17g\t%.17g\n",
                      static_cast<long long>(report.grid[i]), report.risk[i], report.bias_sq[i],
                      report.variance[i]);
        os << buf;
    }
    for (std::size_t c = 0; c < report.tau.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "# tau chain=%zu %.17g\n", c, report.tau[c]);
        os << buf;
    }
    os << "# total_test_evals " << report.total_test_evals << "\n";
}

// --- ground truth ---

void write_ground_truth(std::ostream& os, const GroundTruth& truth) {
    for (const auto& [k, v] : truth.provenance) os << "# " << k << " = " << v << "\n";
    char buf[64];
    for (double v : truth.values) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        os << buf;
    }
}

GroundTruth read_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ground truth: " + path);
    GroundTruth truth;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                std::string value = line.substr(eq + 1);
                auto trim = [](std::string& s) {
                    const auto a = s.find_first_not_of(" \t");
                    const auto b = s.find_last_not_of(" \t\r");
                    s = (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
                };
                trim(key);
                trim(value);
                truth.provenance[key] = value;
            }
            continue;
        }
        truth.values.push_back(std::stod(line));
    }
    return truth;
}

// --- shared chain-execution machinery ---

namespace {

std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct ChainBudget {
    std::int64_t iterations = 0;       // exact when > 0 and eval budget unset
    std::int64_t eval_budget = 0;      // stop after the step that reaches it
    double max_seconds = 0.0;          // wall-clock cap; exceeding flags a partial trace
};

// Runs one chain with a per-step closure; returns the trace. The closure
// mutates its state, returning (accept, n_used, stages) plus a parameter
// snapshot on demand.
template <typename StepFn, typename SnapshotFn>
ChainTrace run_chain(const ChainBudget& budget, std::int64_t trace_every, StepFn&& step,
                     SnapshotFn&& snapshot) {
    ChainTrace trace;
    std::int64_t cum_evals = 0;
    const std::int64_t t0 = now_ns();
    std::int64_t i = 0;
    std::int64_t last_recorded = -1;
    auto record = [&](std::int64_t step_index, const StepResult& r) {
        TraceRecord rec;
        rec.step = step_index;
        rec.params = snapshot();
        rec.accept = r.accept;
        rec.n_used = r.n_used;
        rec.cumulative_evals = cum_evals;
        rec.elapsed_ns = now_ns() - t0;
        trace.records.push_back(std::move(rec));
        last_recorded = step_index;
    };
    StepResult last_result;
    while (true) {
        if (budget.iterations > 0 && i >= budget.iterations) {
            trace.complete = true;
            break;
        }
        if (budget.eval_budget > 0 && cum_evals >= budget.eval_budget) {
            trace.complete = true;
            break;
        }
        last_result = step(i);
        cum_evals += last_result.n_used;
        if (trace_every > 0 && i % trace_every == 0) record(i, last_result);
        ++i;
        if (budget.max_seconds > 0.0 &&
            static_cast<double>(now_ns() - t0) > budget.max_seconds * 1e9) {
            trace.complete = false; // budget exhausted mid-chain
            break;
        }
    }
    // Snapshot the terminal state so the trace covers the full budget.
    if (trace_every > 0 && i > 0 && last_recorded != i - 1) record(i - 1, last_result);
    return trace;
}

void save_trace(const fs::path& path, const ChainTrace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace: " + path.string());
    write_trace(out, trace);
    if (!trace.complete) out << "# partial\n";
}

// Runs `n_chains` jobs across the worker pool; job(c) must be independent.
template <typename Job>
void parallel_chains(int n_chains, Job&& job) {
    const int workers = std::min(worker_count(), n_chains);
    if (workers <= 1) {
        for (int c = 0; c < n_chains; ++c) job(c);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int c = next.fetch_add(1);
                if (c >= n_chains) return;
                try {
                    job(c);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

TestMode test_mode_from(const RunConfig& cfg) {
    TestMode mode;
    const double eps = cfg.get_double("epsilon", 0.0);
    if (eps <= 0.0) {
        mode.exact = true;
        return mode;
    }
    mode.exact = false;
    mode.spec.epsilon = eps;
    mode.spec.batch_size = cfg.get_int("batch_size", 500);
    mode.spec.bound_alpha = cfg.get_double("bound_alpha", 0.5);
    return mode;
}

// --- random-walk logistic experiment ---

// Dense Cholesky solve for the MAP Newton step (and small covariances).
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double s = a[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < i; ++k)
                s -= a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(j) * n + k];
            if (i == j) {
                if (s <= 0.0) return false;
                a[static_cast<std::size_t>(i) * n + i] = std::sqrt(s);
            } else {
                a[static_cast<std::size_t>(j) * n + i] = s / a[static_cast<std::size_t>(i) * n + i];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= a[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= a[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
    }
    return true;
}

std::vector<double> logistic_map(const LogisticRegressionModel& m) {
    const int d = m.n_features;
    std::vector<double> theta(static_cast<std::size_t>(d), 0.0);
    std::vector<double> hess(static_cast<std::size_t>(d) * d);
    std::vector<double> grad(static_cast<std::size_t>(d));
    for (int iter = 0; iter < 30; ++iter) {
        std::fill(hess.begin(), hess.end(), 0.0);
        auto g = m.log_lik_grad({theta.data(), theta.size()});
        for (int j = 0; j < d; ++j)
            grad[static_cast<std::size_t>(j)] = g[static_cast<std::size_t>(j)] -
                                                m.prior_precision * theta[static_cast<std::size_t>(j)];
        for (std::int64_t i = 0; i < m.n_rows; ++i) {
            const double s = m.dot_row(i, {theta.data(), theta.size()});
            const double p = 1.0 / (1.0 + std::exp(-s));
            const double w = p * (1.0 - p);
            const double* row = m.features.data() + i * d;
            for (int a = 0; a < d; ++a)
                for (int b = a; b < d; ++b)
                    hess[static_cast<std::size_t>(a) * d + b] += w * row[a] * row[b];
        }
        for (int a = 0; a < d; ++a) {
            hess[static_cast<std::size_t>(a) * d + a] += m.prior_precision;
            for (int b = 0; b < a; ++b)
                hess[static_cast<std::size_t>(a) * d + b] = hess[static_cast<std::size_t>(b) * d + a];
        }
        std::vector<double> step = grad;
        if (!cholesky_solve(hess, step, d)) break;
        double norm = 0.0;
        for (int j = 0; j < d; ++j) {
            theta[static_cast<std::size_t>(j)] += step[static_cast<std::size_t>(j)];
            norm += step[static_cast<std::size_t>(j)] * step[static_cast<std::size_t>(j)];
        }
        if (norm < 1e-18) break;
    }
    return theta;
}

struct LogisticSetup {
    LogisticRegressionModel train;
    std::vector<double> heldout_features; // row-major
    std::int64_t n_heldout = 0;
};

LogisticSetup make_logistic_setup(std::int64_t n_rows, int d, std::int64_t n_heldout,
                                  std::uint64_t seed) {
    LogisticRegressionModel full = synth_logistic_dataset(n_rows + n_heldout, d, seed);
    LogisticSetup s;
    s.train = full;
    s.train.n_rows = n_rows;
    s.train.features.resize(static_cast<std::size_t>(n_rows) * d);
    s.train.labels.resize(static_cast<std::size_t>(n_rows));
    s.n_heldout = n_heldout;
    s.heldout_features.assign(full.features.begin() + n_rows * d, full.features.end());
    return s;
}

// Predictive class-1 probabilities on the held-out rows.
void predictive_means(const LogisticSetup& s, std::span<const double> theta,
                      std::vector<double>& out) {
    const int d = s.train.n_features;
    out.resize(static_cast<std::size_t>(s.n_heldout));
    for (std::int64_t h = 0; h < s.n_heldout; ++h) {
        const double* row = s.heldout_features.data() + h * d;
        double z = 0.0;
        for (int j = 0; j < d; ++j) z += row[j] * theta[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(h)] = 1.0 / (1.0 + std::exp(-z));
    }
}

GroundTruth logistic_ground_truth(const LogisticSetup& setup, const RunConfig& cfg,
                                  std::ostream& log) {
    const std::int64_t steps = cfg.get_int("truth_steps", 10000);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const double sigma_rw = cfg.get_double("sigma_rw", 0.01);

    log << "computing logistic ground truth: exact chain from MAP, " << steps << " steps\n";
    ChainConfig cc;
    cc.test.exact = true;
    cc.sigma_rw = sigma_rw;
    ChainRngs rngs = ChainRngs::make(seed, 1000000);
    std::vector<double> theta = logistic_map(setup.train);

    std::vector<double> acc(static_cast<std::size_t>(setup.n_heldout), 0.0);
    std::vector<double> pm;
    std::int64_t kept = 0;
    const std::int64_t burn = steps / 10;
    for (std::int64_t i = 0; i < steps; ++i) {
        random_walk_step(theta, setup.train, cc, rngs, i);
        if (i >= burn && i % 5 == 0) {
            predictive_means(setup, {theta.data(), theta.size()}, pm);
            for (std::size_t h = 0; h < acc.size(); ++h) acc[h] += pm[h];
            ++kept;
        }
    }
    GroundTruth truth;
    truth.values.resize(acc.size());
    for (std::size_t h = 0; h < acc.size(); ++h)
        truth.values[h] = acc[h] / static_cast<double>(kept);
    truth.provenance["kind"] = "random-walk-logistic";
    truth.provenance["seed"] = std::to_string(seed);
    truth.provenance["n_rows"] = std::to_string(setup.train.n_rows);
    truth.provenance["n_features"] = std::to_string(setup.train.n_features);
    truth.provenance["heldout"] = std::to_string(setup.n_heldout);
    truth.provenance["truth_steps"] = std::to_string(steps);
    truth.provenance["sigma_rw"] = std::to_string(sigma_rw);
    truth.provenance["init"] = "map";
    return truth;
}

GroundTruth load_or_make_truth(const fs::path& truth_path, const RunConfig& cfg,
                               const std::function<GroundTruth()>& make, std::ostream& log) {
    if (fs::exists(truth_path)) {
        log << "reusing ground truth " << truth_path.string() << "\n";
        return read_ground_truth(truth_path.string());
    }
    GroundTruth truth = make();
    fs::create_directories(truth_path.parent_path());
    std::ofstream out(truth_path);
    write_ground_truth(out, truth);
    (void)cfg;
    return truth;
}

void run_random_walk_logistic(const RunConfig& cfg, std::ostream& log) {
    const fs::path out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const std::uint64_t chain_seed = static_cast<std::uint64_t>(cfg.get_int("chain_seed", 1));
    const std::int64_t n_rows = cfg.get_int("n_rows", 12214);
    const int d = static_cast<int>(cfg.get_int("n_features", 50));
    const std::int64_t heldout = cfg.get_int("heldout", 200);
    const int n_chains = static_cast<int>(cfg.get_int("chains", 5));
    const std::int64_t trace_every = cfg.get_int("trace_every", 10);

    LogisticSetup setup = make_logistic_setup(n_rows, d, heldout, seed);
    const fs::path truth_path = cfg.get_or("truth_path", (out_dir / "truth.txt").string());
    GroundTruth truth = load_or_make_truth(
        truth_path, cfg, [&] { return logistic_ground_truth(setup, cfg, log); }, log);
    if (truth.values.size() != static_cast<std::size_t>(heldout))
        throw std::runtime_error("ground truth does not match the held-out set size");

    ChainConfig cc;
    cc.test = test_mode_from(cfg);
    cc.sigma_rw = cfg.get_double("sigma_rw", 0.01);
    ChainBudget budget;
    budget.eval_budget = cfg.get_int("eval_budget", 2000000);
    budget.iterations = cfg.get_int("iterations", 0);
    budget.max_seconds = cfg.get_double("max_seconds", 0.0);

    std::mutex log_mu;
    parallel_chains(n_chains, [&](int c) {
        const fs::path trace_path = out_dir / ("chain_" + std::to_string(c) + ".trace");
        if (fs::exists(trace_path)) {
            ChainTrace existing = read_trace(trace_path.string(), d);
            if (existing.complete) {
                std::lock_guard<std::mutex> lock(log_mu);
                log << "chain " << c << ": reusing completed trace\n";
                return;
            }
        }
        ChainRngs rngs = ChainRngs::make(chain_seed, static_cast<std::uint64_t>(c));
        std::vector<double> theta(static_cast<std::size_t>(d), 0.0);
        SeqTestScratch scratch;
        ChainTrace trace = run_chain(
            budget, trace_every,
            [&](std::int64_t i) { return random_walk_step(theta, setup.train, cc, rngs, i, &scratch); },
            [&] { return theta; });
        save_trace(trace_path, trace);
        std::lock_guard<std::mutex> lock(log_mu);
        log << "chain " << c << ": " << trace.records.size() << " records\n";
    });

    // Risk table on the evaluation-budget axis.
    std::vector<std::vector<std::vector<SeriesPoint>>> series(
        static_cast<std::size_t>(heldout),
        std::vector<std::vector<SeriesPoint>>(static_cast<std::size_t>(n_chains)));
    std::int64_t total_evals = 0;
    std::vector<double> pm;
    for (int c = 0; c < n_chains; ++c) {
        const fs::path trace_path = out_dir / ("chain_" + std::to_string(c) + ".trace");
        ChainTrace trace = read_trace(trace_path.string(), d);
        for (const TraceRecord& rec : trace.records) {
            predictive_means(setup, {rec.params.data(), rec.params.size()}, pm);
            for (std::int64_t h = 0; h < heldout; ++h)
                series[static_cast<std::size_t>(h)][static_cast<std::size_t>(c)].push_back(
                    {rec.cumulative_evals, pm[static_cast<std::size_t>(h)]});
        }
        if (!trace.records.empty()) total_evals += trace.records.back().cumulative_evals;
    }
    std::vector<std::int64_t> grid;
    const std::int64_t budget_total = budget.eval_budget > 0
                                          ? budget.eval_budget
                                          : series.front().front().back().evals;
    for (int i = 1; i <= 10; ++i) grid.push_back(budget_total * i / 10);
    RiskReport report = estimate_risk(series, truth.values, grid, cfg.get_double("burn_in", 0.1));
    report.total_test_evals = total_evals;
    std::ofstream risk_out(out_dir / "risk.txt");
    write_risk_report(risk_out, report);
    log << "risk report written to " << (out_dir / "risk.txt").string() << "\n";
}

// --- sgld lasso experiment ---

// Normalized bin masses of the posterior over a fixed support, by trapezoid
// quadrature dense enough that discretization error is negligible.
std::vector<double> lasso_truth_bins(const Lasso1DModel& model, double lo, double hi, int bins,
                                     int points_per_bin = 500) {
    std::vector<double> mass(static_cast<std::size_t>(bins), 0.0);
    // Stabilize the exponentials around the maximum log posterior.
    double max_lp = -1e300;
    const int coarse = 20000;
    for (int i = 0; i <= coarse; ++i) {
        const double t = lo + (hi - lo) * i / coarse;
        max_lp = std::max(max_lp, model.log_post(t));
    }
    const double width = (hi - lo) / bins;
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double a = lo + b * width;
        double s = 0.0;
        for (int i = 0; i <= points_per_bin; ++i) {
            const double t = a + width * i / points_per_bin;
            const double w = (i == 0 || i == points_per_bin) ? 0.5 : 1.0;
            s += w * std::exp(model.log_post(t) - max_lp);
        }
        mass[static_cast<std::size_t>(b)] = s;
        total += s;
    }
    for (double& m : mass) m /= total;
    return mass;
}

// Deterministic histogram support shared by every lasso chain and the truth.
void lasso_support(const Lasso1DModel& model, double& lo, double& hi) {
    const double mode_ols = model.sum_xy / model.sum_x2;
    const double sd = 1.0 / std::sqrt(model.lambda * model.sum_x2);
    lo = mode_ols - 60.0 * sd;
    hi = mode_ols + 60.0 * sd;
}

void run_sgld_lasso(const RunConfig& cfg, std::ostream& log) {
    const fs::path out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const std::uint64_t chain_seed = static_cast<std::uint64_t>(cfg.get_int("chain_seed", 1));
    const int bins = static_cast<int>(cfg.get_int("bins", 200));

    Lasso1DModel model = synth_lasso_dataset(seed);
    double lo = 0.0, hi = 0.0;
    lasso_support(model, lo, hi);

    const fs::path truth_path = cfg.get_or("truth_path", (out_dir / "truth.txt").string());
    GroundTruth truth = load_or_make_truth(
        truth_path, cfg,
        [&] {
            GroundTruth t;
            t.values = lasso_truth_bins(model, lo, hi, bins);
            t.provenance["kind"] = "sgld-lasso";
            t.provenance["seed"] = std::to_string(seed);
            t.provenance["bins"] = std::to_string(bins);
            t.provenance["lo"] = std::to_string(lo);
            t.provenance["hi"] = std::to_string(hi);
            t.provenance["method"] = "trapezoid";
            return t;
        },
        log);

    ChainConfig cc;
    cc.test = test_mode_from(cfg);
    cc.step_size = cfg.get_double("step_size", 5e-6);
    cc.sgld_batch = cfg.get_int("sgld_batch", 500);
    cc.sgld_corrected = cfg.get_int("corrected", 1) != 0;
    ChainBudget budget;
    budget.iterations = cfg.get_int("iterations", 100000);
    budget.max_seconds = cfg.get_double("max_seconds", 0.0);
    const std::int64_t trace_every = cfg.get_int("trace_every", 10);

    ChainRngs rngs = ChainRngs::make(chain_seed, 0);
    double theta = 0.0;
    std::vector<std::int64_t> stages_hist;
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    SeqTestScratch scratch;
    std::int64_t n_samples = 0;

    const fs::path trace_path = out_dir / "chain_0.trace";
    ChainTrace trace = run_chain(
        budget, trace_every,
        [&](std::int64_t i) {
            StepResult r = sgld_corrected_step(theta, model, cc, rngs, i, &scratch);
            const int s = r.stages;
            if (static_cast<std::size_t>(s) >= stages_hist.size())
                stages_hist.resize(static_cast<std::size_t>(s) + 1, 0);
            ++stages_hist[static_cast<std::size_t>(s)];
            const int b = std::clamp(static_cast<int>((theta - lo) / (hi - lo) * bins), 0, bins - 1);
            hist[static_cast<std::size_t>(b)] += 1.0;
            ++n_samples;
            return r;
        },
        [&] { return std::vector<double>{theta}; });
    save_trace(trace_path, trace);

    double l1 = 0.0;
    for (int b = 0; b < bins; ++b)
        l1 += std::fabs(hist[static_cast<std::size_t>(b)] / static_cast<double>(n_samples) -
                        truth.values[static_cast<std::size_t>(b)]);

    std::ofstream report(out_dir / "report.txt");
    report << "l1_to_truth = " << l1 << "\n";
    report << "samples = " << n_samples << "\n";
    report << "stages_histogram =";
    for (std::size_t s = 0; s < stages_hist.size(); ++s)
        if (stages_hist[s] > 0) report << " " << s << ":" << stages_hist[s];
    report << "\n";
    log << "sgld l1 distance to truth: " << l1 << "\n";
}

// --- rjmcmc experiment ---

// log of the integral of exp(loglik(beta) - k log ||beta||_1) over the
// included coordinates, by Gauss-Hermite quadrature around a ridge-stabilized
// likelihood fit. The envelope only shapes the quadrature; the integrand is
// exact up to the ||beta||_1 clamp at 1e-8 near the prior's singularity.
double log_mask_integral(const VarSelModel& model, const std::vector<int>& included,
                         int gh_nodes) {
    const int k = static_cast<int>(included.size());
    const LogisticRegressionModel& data = model.data;

    // Likelihood fit restricted to the mask (small ridge for the envelope).
    std::vector<double> beta(static_cast<std::size_t>(k), 0.0);
    std::vector<double> dense(static_cast<std::size_t>(data.n_features), 0.0);
    std::vector<double> hess(static_cast<std::size_t>(k) * k);
    std::vector<double> grad(static_cast<std::size_t>(k));
    const double ridge = 1e-3;
    for (int iter = 0; iter < 40; ++iter) {
        std::fill(dense.begin(), dense.end(), 0.0);
        for (int t = 0; t < k; ++t) dense[static_cast<std::size_t>(included[t])] = beta[static_cast<std::size_t>(t)];
        std::fill(hess.begin(), hess.end(), 0.0);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::int64_t i = 0; i < data.n_rows; ++i) {
            const double s = data.dot_row(i, {dense.data(), dense.size()});
            const double p = 1.0 / (1.0 + std::exp(-s));
            const double y = data.labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
            const double w = p * (1.0 - p);
            const double* row = data.features.data() + i * data.n_features;
            for (int a = 0; a < k; ++a) {
                grad[static_cast<std::size_t>(a)] += (y - p) * row[included[a]];
                for (int b = a; b < k; ++b)
                    hess[static_cast<std::size_t>(a) * k + b] += w * row[included[a]] * row[included[b]];
            }
        }
        for (int a = 0; a < k; ++a) {
            grad[static_cast<std::size_t>(a)] -= ridge * beta[static_cast<std::size_t>(a)];
            hess[static_cast<std::size_t>(a) * k + a] += ridge;
            for (int b = 0; b < a; ++b)
                hess[static_cast<std::size_t>(a) * k + b] = hess[static_cast<std::size_t>(b) * k + a];
        }
        std::vector<double> chol = hess;
        std::vector<double> step = grad;
        if (!cholesky_solve(chol, step, k)) break;
        double norm = 0.0;
        for (int a = 0; a < k; ++a) {
            beta[static_cast<std::size_t>(a)] += step[static_cast<std::size_t>(a)];
            norm += step[static_cast<std::size_t>(a)] * step[static_cast<std::size_t>(a)];
        }
        if (norm < 1e-20) break;
    }

    // Final Hessian -> covariance Cholesky factor L with Sigma = (H)^{-1}.
    std::vector<double> chol = hess;
    std::vector<double> dummy(static_cast<std::size_t>(k), 0.0);
    if (!cholesky_solve(chol, dummy, k))
        throw std::runtime_error("mask integral: envelope Hessian not positive definite");
    // chol now holds the lower factor of H in its lower triangle.

    const GaussHermite gh = gauss_hermite(gh_nodes);
    const std::vector<double>& nodes = gh.nodes;
    const std::vector<double>& weights = gh.weights;
    const double log_pi_term = -0.5 * static_cast<double>(k) * std::log(3.141592653589793);

    // log N(x; c, Sigma) normalization: 0.5 log det H - (k/2) log(2 pi).
    double log_det_l = 0.0;
    for (int a = 0; a < k; ++a) log_det_l += std::log(chol[static_cast<std::size_t>(a) * k + a]);
    const double log_norm = log_det_l - 0.5 * k * std::log(2.0 * 3.141592653589793);

    // Tensor product over nodes; iterate a k-digit counter.
    std::vector<int> digit(static_cast<std::size_t>(k), 0);
    std::vector<double> point(static_cast<std::size_t>(k));
    std::vector<double> z(static_cast<std::size_t>(k));
    double max_term = -1e300;
    std::vector<double> terms;
    terms.reserve(1 << 12);
    while (true) {
        double log_w = 0.0, z_sq = 0.0;
        for (int a = 0; a < k; ++a) {
            log_w += std::log(weights[static_cast<std::size_t>(digit[static_cast<std::size_t>(a)])]);
            z[static_cast<std::size_t>(a)] = nodes[static_cast<std::size_t>(digit[static_cast<std::size_t>(a)])];
            z_sq += z[static_cast<std::size_t>(a)] * z[static_cast<std::size_t>(a)];
        }
        // x = c + sqrt(2) L^{-T} z solves to envelope samples; use forward
        // substitution on L^T y = z then x = c + sqrt(2) y.
        for (int a = k - 1; a >= 0; --a) {
            double s = z[static_cast<std::size_t>(a)];
            for (int b = a + 1; b < k; ++b)
                s -= chol[static_cast<std::size_t>(b) * k + a] * point[static_cast<std::size_t>(b)];
            point[static_cast<std::size_t>(a)] = s / chol[static_cast<std::size_t>(a) * k + a];
        }
        std::fill(dense.begin(), dense.end(), 0.0);
        double l1 = 0.0;
        for (int a = 0; a < k; ++a) {
            const double x = beta[static_cast<std::size_t>(a)] +
                             1.4142135623730951 * point[static_cast<std::size_t>(a)];
            dense[static_cast<std::size_t>(included[a])] = x;
            l1 += std::fabs(x);
        }
        l1 = std::max(l1, 1e-8);
        const double log_h = data.log_lik({dense.data(), dense.size()}) -
                             static_cast<double>(k) * std::log(l1);
        // h / N(x; c, Sigma): log N = log_norm - z_sq (since (x-c)' H (x-c) = 2 z'z).
        const double term = log_w + log_h - (log_norm - z_sq);
        terms.push_back(term);
        max_term = std::max(max_term, term);

        int a = 0;
        while (a < k && ++digit[static_cast<std::size_t>(a)] == gh_nodes) {
            digit[static_cast<std::size_t>(a)] = 0;
            ++a;
        }
        if (a == k) break;
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - max_term);
    return log_pi_term + max_term + std::log(sum);
}

} // namespace

std::vector<double> varsel_inclusion_truth(const VarSelModel& model, int gh_nodes) {
    const int d = model.n_features();
    if (d > 12) throw std::invalid_argument("mask enumeration limited to 12 features");
    const int n_masks = (1 << d);
    std::vector<double> log_w(static_cast<std::size_t>(n_masks), -1e300);
    double max_lw = -1e300;
    for (int mask = 1; mask < n_masks; ++mask) {
        std::vector<int> included;
        for (int j = 0; j < d; ++j)
            if (mask & (1 << j)) included.push_back(j);
        const int k = static_cast<int>(included.size());
        // lambda^k B(k, D-k+1) * integral
        const double log_beta_fn = std::lgamma(static_cast<double>(k)) +
                                   std::lgamma(static_cast<double>(d - k + 1)) -
                                   std::lgamma(static_cast<double>(d + 1));
        const int nodes = k <= 2 ? gh_nodes : std::max(12, gh_nodes - 4 * (k - 2));
        log_w[static_cast<std::size_t>(mask)] = k * std::log(model.lambda) + log_beta_fn +
                                                log_mask_integral(model, included, nodes);
        max_lw = std::max(max_lw, log_w[static_cast<std::size_t>(mask)]);
    }
    double z = 0.0;
    for (int mask = 1; mask < n_masks; ++mask)
        z += std::exp(log_w[static_cast<std::size_t>(mask)] - max_lw);
    std::vector<double> incl(static_cast<std::size_t>(d), 0.0);
    for (int mask = 1; mask < n_masks; ++mask) {
        const double p = std::exp(log_w[static_cast<std::size_t>(mask)] - max_lw) / z;
        for (int j = 0; j < d; ++j)
            if (mask & (1 << j)) incl[static_cast<std::size_t>(j)] += p;
    }
    return incl;
}

namespace {

void run_rjmcmc(const RunConfig& cfg, std::ostream& log) {
    const fs::path out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const std::uint64_t chain_seed = static_cast<std::uint64_t>(cfg.get_int("chain_seed", 1));
    const std::int64_t n_rows = cfg.get_int("n_rows", 200);
    const int d = static_cast<int>(cfg.get_int("n_features", 5));

    VarSelModel model;
    model.data = synth_logistic_dataset(n_rows, d, seed);
    model.lambda = cfg.get_double("lambda", 1e-10);
    model.sigma_update = cfg.get_double("sigma_update", 0.01);
    model.sigma_birth = cfg.get_double("sigma_birth", 0.1);

    const fs::path truth_path = cfg.get_or("truth_path", (out_dir / "truth.txt").string());
    GroundTruth truth = load_or_make_truth(
        truth_path, cfg,
        [&] {
            log << "computing inclusion truth by mask enumeration\n";
            GroundTruth t;
            t.values = varsel_inclusion_truth(model, static_cast<int>(cfg.get_int("gh_nodes", 24)));
            t.provenance["kind"] = "rjmcmc";
            t.provenance["seed"] = std::to_string(seed);
            t.provenance["n_rows"] = std::to_string(n_rows);
            t.provenance["n_features"] = std::to_string(d);
            t.provenance["method"] = "mask-enumeration";
            return t;
        },
        log);

    ChainConfig cc;
    cc.test = test_mode_from(cfg);
    cc.sigma_update = model.sigma_update;
    cc.sigma_birth = model.sigma_birth;
    cc.rj_init_map = cfg.get_int("init_map", 0) != 0;
    ChainBudget budget;
    budget.iterations = cfg.get_int("iterations", 100000);
    const std::int64_t trace_every = cfg.get_int("trace_every", 10);

    ChainRngs rngs = ChainRngs::make(chain_seed, 0);
    VarSelState state = initial_varsel_state(model, cc, rngs.proposal);
    SeqTestScratch scratch;
    std::vector<double> incl(static_cast<std::size_t>(d), 0.0);
    std::int64_t kept = 0;
    const std::int64_t burn = budget.iterations / 10;

    ChainTrace trace = run_chain(
        budget, trace_every,
        [&](std::int64_t i) {
            StepResult r = rjmcmc_step(state, model, cc, rngs, i, &scratch);
            if (i >= burn) {
                for (int j = 0; j < d; ++j)
                    incl[static_cast<std::size_t>(j)] += state.gamma[static_cast<std::size_t>(j)];
                ++kept;
            }
            return r;
        },
        [&] {
            std::vector<double> p = state.dense_theta();
            for (int j = 0; j < d; ++j)
                p.push_back(static_cast<double>(state.gamma[static_cast<std::size_t>(j)]));
            return p;
        });
    save_trace(out_dir / "chain_0.trace", trace);

    std::ofstream report(out_dir / "report.txt");
    report << "feature\tinclusion\ttruth\n";
    double max_err = 0.0;
    for (int j = 0; j < d; ++j) {
        const double p = incl[static_cast<std::size_t>(j)] / static_cast<double>(kept);
        max_err = std::max(max_err, std::fabs(p - truth.values[static_cast<std::size_t>(j)]));
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\n", j, p,
                      truth.values[static_cast<std::size_t>(j)]);
        report << buf;
    }
    report << "# max_abs_error " << max_err << "\n";
    log << "rjmcmc max inclusion error vs enumeration: " << max_err << "\n";
}

// --- gibbs mrf experiment ---

void run_gibbs_mrf(const RunConfig& cfg, std::ostream& log) {
    const fs::path out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const std::uint64_t chain_seed = static_cast<std::uint64_t>(cfg.get_int("chain_seed", 1));
    const int d = static_cast<int>(cfg.get_int("n_vars", 30));
    const std::int64_t sweeps = cfg.get_int("sweeps", 20000);
    const int n_subsets = static_cast<int>(cfg.get_int("subsets", 1600));

    FactorizedBinaryModel model = dense_triplet_mrf(d, seed, cfg.get_double("table_scale", 0.02));
    {
        std::ofstream mf(out_dir / "model.txt");
        write_mrf_model(mf, model);
    }
    const SiteIndex index = SiteIndex::build(model);

    std::mt19937_64 subset_rng(seed ^ 0xABCDEF);
    const auto subsets = draw_subsets(d, n_subsets, 5, subset_rng);

    std::vector<std::vector<double>> truth;
    if (d <= 14) {
        const auto joint = enumerate_joint(model);
        truth = subset_distribution_from_joint(joint, d, subsets);
    } else {
        log << "reference run: exact gibbs, " << sweeps * 10 << " sweeps\n";
        std::mt19937_64 rng(chain_seed ^ 0x1234);
        std::vector<std::uint8_t> state(static_cast<std::size_t>(d), 0);
        std::vector<std::vector<std::uint8_t>> states;
        for (std::int64_t s = 0; s < sweeps * 10; ++s) {
            for (int i = 0; i < d; ++i) exact_gibbs_update(i, state, model, index, rng);
            if (s >= sweeps) states.push_back({state.begin(), state.end()});
        }
        truth = subset_distribution({states.data(), states.size()}, subsets);
    }

    const bool exact = cfg.get_double("epsilon", 0.0) <= 0.0;
    SequentialTestSpec spec;
    if (!exact) {
        spec.epsilon = cfg.get_double("epsilon", 0.01);
        spec.batch_size = cfg.get_int("batch_size", 500);
    }

    std::mt19937_64 rng(chain_seed);
    std::vector<std::uint8_t> state(static_cast<std::size_t>(d), 0);
    std::vector<std::vector<std::uint8_t>> states;
    SeqTestScratch scratch;
    std::int64_t total_used = 0;
    const std::int64_t burn = sweeps / 10;
    for (std::int64_t s = 0; s < sweeps; ++s) {
        for (int i = 0; i < d; ++i) {
            const auto r = exact ? exact_gibbs_update(i, state, model, index, rng)
                                 : approx_gibbs_update(i, state, model, index, spec, rng, &scratch);
            total_used += r.n_used;
        }
        if (s >= burn) states.push_back({state.begin(), state.end()});
    }
    const double err = subset_l1_error({states.data(), states.size()},
                                       {truth.data(), truth.size()},
                                       {subsets.data(), subsets.size()});
    std::ofstream report(out_dir / "report.txt");
    report << "subset_l1_error = " << err << "\n";
    report << "factor_terms_evaluated = " << total_used << "\n";
    report << "sweeps = " << sweeps << "\n";
    log << "gibbs subset-L1 error: " << err << "\n";
}

// --- analysis and design kinds ---

void run_analysis(const RunConfig& cfg, std::ostream& log) {
    const fs::path out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    const double pi1 = cfg.get_double("pi1", 0.1);
    const double eps = cfg.get_double("epsilon", 0.05);
    const double alpha = cfg.get_double("bound_alpha", 0.5);
    const std::int64_t trials = cfg.get_int("trials", 100000);
    const int grid_size = static_cast<int>(cfg.get_int("dp_grid", 256));
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));

    std::vector<double> mu_grid;
    {
        std::istringstream ms(cfg.get_or("mu_std_grid", "0 0.5 1 2 3 5 8"));
        double v = 0.0;
        while (ms >> v) mu_grid.push_back(v);
    }

    const double g0 = normal_quantile(1.0 - eps);
    std::mt19937_64 rng(seed);
    std::ofstream table(out_dir / "analysis.txt");
    table << "mu_std\te_dp\te_mc\te_se\tusage_dp\tusage_mc\tusage_se\n";
    char buf[240];
    for (double m : mu_grid) {
        const RandomWalkParams params = RandomWalkParams::uniform(m, pi1, g0, alpha);
        const RandomWalkProfile dp = dp_error_and_usage(params, grid_size);
        const EmpiricalProfile mc = simulate_sequential_tests(m, params, trials, rng);
        std::snprintf(buf, sizeof(buf), "%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n", m,
                      dp.error, mc.error, mc.error_se, dp.expected_usage, mc.expected_usage,
                      mc.usage_se);
        table << buf;
    }
    log << "analysis table written to " << (out_dir / "analysis.txt").string() << "\n";
}

void run_design(const RunConfig& cfg, std::ostream& log) {
    const fs::path out_dir = cfg.get("out_dir");
    fs::create_directories(out_dir);
    const double budget = cfg.get_double("budget", 0.05);
    const bool worst = cfg.get_int("worst_case", 0) != 0;
    DesignGrid grid = DesignGrid::defaults();
    const int grid_size = static_cast<int>(cfg.get_int("dp_grid", 128));

    DesignResult result;
    if (worst) {
        result = worst_case_design(budget, grid, grid_size);
    } else {
        const auto samples = read_moment_samples(cfg.get("samples"));
        result = average_design(samples, budget, grid, grid_size);
    }
    std::ofstream out(out_dir / "design.txt");
    write_design_result(out, result);
    log << "design written to " << (out_dir / "design.txt").string() << "\n";
}

} // namespace

void run_experiment(const RunConfig& config, std::ostream& log) {
    const std::string kind = config.get("kind");
    // Stamp the effective configuration into the artifact directory.
    if (config.has("out_dir")) {
        fs::create_directories(config.get("out_dir"));
        std::ofstream copy(fs::path(config.get("out_dir")) / "config.txt");
        for (const auto& [k, v] : config.values) copy << k << " = " << v << "\n";
    }
    if (kind == "random-walk-logistic") {
        run_random_walk_logistic(config, log);
    } else if (kind == "sgld-lasso") {
        run_sgld_lasso(config, log);
    } else if (kind == "rjmcmc") {
        run_rjmcmc(config, log);
    } else if (kind == "gibbs-mrf") {
        run_gibbs_mrf(config, log);
    } else if (kind == "analysis") {
        run_analysis(config, log);
    } else if (kind == "design") {
        run_design(config, log);
    } else {
        throw std::runtime_error("unknown experiment kind: " + kind);
    }
}

std::vector<MomentSample> collect_design_samples(std::span<const std::vector<double>> snapshots,
                                                 const LogisticRegressionModel& model,
                                                 double sigma_rw, std::uint64_t seed,
                                                 std::int64_t* n_excluded) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<MomentSample> samples;
    std::int64_t excluded = 0;
    std::vector<double> prop;
    for (const auto& theta : snapshots) {
        prop.resize(theta.size());
        for (std::size_t j = 0; j < theta.size(); ++j) prop[j] = theta[j] + sigma_rw * gauss(rng);
        double sum = 0.0, sumsq = 0.0;
        for (std::int64_t i = 0; i < model.n_rows; ++i) {
            const double l = model.log_lik_point(i, {prop.data(), prop.size()}) -
                             model.log_lik_point(i, {theta.data(), theta.size()});
            sum += l;
            sumsq += l * l;
        }
        const double n = static_cast<double>(model.n_rows);
        const double mu = sum / n;
        const double var = std::max(0.0, sumsq / n - mu * mu);
        if (var <= 0.0) {
            ++excluded; // identity proposals carry no moment information
            continue;
        }
        samples.push_back({mu, std::sqrt(var), model.n_rows});
    }
    if (n_excluded) *n_excluded = excluded;
    return samples;
}

void risk_from_artifacts(const std::string& trace_dir, const std::string& truth_path,
                         std::ostream& out, std::ostream& log) {
    const GroundTruth truth = read_ground_truth(truth_path);
    const auto kind_it = truth.provenance.find("kind");
    if (kind_it == truth.provenance.end() || kind_it->second != "random-walk-logistic")
        throw std::runtime_error("risk recomputation supports random-walk-logistic truths");

    const std::int64_t n_rows = std::stoll(truth.provenance.at("n_rows"));
    const int d = std::stoi(truth.provenance.at("n_features"));
    const std::int64_t heldout = std::stoll(truth.provenance.at("heldout"));
    const std::uint64_t seed = std::stoull(truth.provenance.at("seed"));
    LogisticSetup setup = make_logistic_setup(n_rows, d, heldout, seed);

    std::vector<fs::path> traces;
    for (const auto& entry : fs::directory_iterator(trace_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("chain_", 0) == 0 && name.find(".trace") != std::string::npos)
            traces.push_back(entry.path());
    }
    std::sort(traces.begin(), traces.end());
    if (traces.size() < 2) throw std::runtime_error("need at least two chain traces");

    std::vector<std::vector<std::vector<SeriesPoint>>> series(
        static_cast<std::size_t>(heldout),
        std::vector<std::vector<SeriesPoint>>(traces.size()));
    std::int64_t max_evals = 0;
    std::vector<double> pm;
    for (std::size_t c = 0; c < traces.size(); ++c) {
        ChainTrace trace = read_trace(traces[c].string(), d);
        for (const TraceRecord& rec : trace.records) {
            predictive_means(setup, {rec.params.data(), rec.params.size()}, pm);
            for (std::int64_t h = 0; h < heldout; ++h)
                series[static_cast<std::size_t>(h)][c].push_back(
                    {rec.cumulative_evals, pm[static_cast<std::size_t>(h)]});
        }
        if (!trace.records.empty())
            max_evals = std::max(max_evals, trace.records.back().cumulative_evals);
    }
    std::vector<std::int64_t> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(max_evals * i / 10);
    const RiskReport report = estimate_risk(series, truth.values, grid);
    write_risk_report(out, report);
    log << "risk recomputed from " << traces.size() << " traces\n";
}

} // namespace seqmh
