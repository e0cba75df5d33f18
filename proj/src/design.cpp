#include "seqmh/design.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "seqmh/stats.hpp"

namespace seqmh {

DesignGrid DesignGrid::defaults() {
    DesignGrid g;
    g.pi1 = {0.01, 0.02, 0.05, 0.1, 0.2};
    g.epsilon = {0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    g.alpha = {0.5, 0.65, 0.8, 1.0};
    return g;
}

std::vector<GridPointEval> evaluate_design_grid(std::span<const MomentSample> samples,
                                                const DesignGrid& grid, int grid_size,
                                                int quadrature_panels) {
    if (grid.size() == 0) throw std::invalid_argument("design grid is empty");
    for (const MomentSample& s : samples) {
        if (!(s.sigma_l > 0.0)) throw std::invalid_argument("moment sample with sigma_l <= 0");
        if (s.n_data < 2) throw std::invalid_argument("moment sample with N < 2");
    }

    std::vector<GridPointEval> out;
    out.reserve(grid.size());
    for (double pi1 : grid.pi1) {
        for (double eps : grid.epsilon) {
            const double g0 = normal_quantile(1.0 - eps);
            for (double alpha : grid.alpha) {
                GridPointEval ev;
                ev.pi1 = pi1;
                ev.epsilon = eps;
                ev.g0 = g0;
                ev.alpha = alpha;
                const StageStructure stages = StageStructure::uniform(pi1, g0, alpha);

                RandomWalkParams worst{0.0, stages};
                const RandomWalkProfile wp = dp_error_and_usage(worst, grid_size);
                ev.worst_error = wp.error;
                ev.worst_usage = wp.expected_usage;

                if (!samples.empty()) {
                    const ErrorUsageCurve curve = ErrorUsageCurve::build(stages, grid_size);
                    double usage = 0.0, abs_delta = 0.0;
                    for (const MomentSample& s : samples) {
                        const CurveDelta d =
                            delta_on_curve(s.mu, s.sigma_l, s.n_data, curve, quadrature_panels);
                        usage += d.expected_usage;
                        abs_delta += std::fabs(d.delta);
                    }
                    ev.avg_usage = usage / static_cast<double>(samples.size());
                    ev.avg_abs_delta = abs_delta / static_cast<double>(samples.size());
                }
                out.push_back(ev);
            }
        }
    }
    return out;
}

namespace {

DesignResult to_result(const GridPointEval& ev, double error, double usage, std::int64_t evals) {
    DesignResult r;
    r.pi1 = ev.pi1;
    r.epsilon = ev.epsilon;
    r.g0 = ev.g0;
    r.alpha = ev.alpha;
    r.predicted_error = error;
    r.predicted_usage = usage;
    r.grid_evaluations = evals;
    return r;
}

// Feasible point of minimal usage; ties toward smaller error, then smaller pi1.
template <typename ErrorOf, typename UsageOf>
DesignResult select(std::span<const GridPointEval> evals, double delta_star,
                    const ErrorOf& error_of, const UsageOf& usage_of, const char* kind) {
    const GridPointEval* best = nullptr;
    double min_error = std::numeric_limits<double>::infinity();
    for (const GridPointEval& ev : evals) {
        min_error = std::min(min_error, error_of(ev));
        if (error_of(ev) > delta_star) continue;
        if (!best || usage_of(ev) < usage_of(*best) ||
            (usage_of(ev) == usage_of(*best) &&
             (error_of(ev) < error_of(*best) ||
              (error_of(ev) == error_of(*best) && ev.pi1 < best->pi1)))) {
            best = &ev;
        }
    }
    if (!best) {
        std::ostringstream msg;
        msg << kind << " design infeasible at budget " << delta_star
            << "; minimal achievable error is " << min_error;
        throw InfeasibleDesign(min_error, msg.str());
    }
    return to_result(*best, error_of(*best), usage_of(*best),
                     static_cast<std::int64_t>(evals.size()));
}

} // namespace

DesignResult select_average(std::span<const GridPointEval> evals, double delta_star) {
    return select(
        evals, delta_star, [](const GridPointEval& e) { return e.avg_abs_delta; },
        [](const GridPointEval& e) { return e.avg_usage; }, "average");
}

DesignResult select_worst_case(std::span<const GridPointEval> evals, double delta_star) {
    return select(
        evals, delta_star, [](const GridPointEval& e) { return e.worst_error; },
        [](const GridPointEval& e) { return e.worst_usage; }, "worst-case");
}

DesignResult average_design(std::span<const MomentSample> samples, double delta_star,
                            const DesignGrid& grid, int grid_size, int quadrature_panels) {
    if (samples.empty()) throw std::invalid_argument("average_design: no moment samples");
    if (!(delta_star > 0.0)) throw std::invalid_argument("average_design: budget must be positive");
    const auto evals = evaluate_design_grid(samples, grid, grid_size, quadrature_panels);
    return select_average(evals, delta_star);
}

DesignResult worst_case_design(double delta_star, const DesignGrid& grid, int grid_size) {
    if (!(delta_star > 0.0)) throw std::invalid_argument("worst_case_design: budget must be positive");
    const auto evals = evaluate_design_grid({}, grid, grid_size, 0);
    return select_worst_case(evals, delta_star);
}

std::vector<MomentSample> read_moment_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open moment sample file: " + path);
    std::vector<MomentSample> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        MomentSample s;
        if (!(ls >> s.mu >> s.sigma_l >> s.n_data)) {
            // Tolerate a single header row.
            if (samples.empty()) continue;
            throw std::runtime_error("malformed moment sample row in " + path + ": " + line);
        }
        samples.push_back(s);
    }
    return samples;
}

void write_moment_samples(std::ostream& os, std::span<const MomentSample> samples) {
    os << "mu\tsigma_l\tN\n";
    char buf[128];
    for (const MomentSample& s : samples) {
        std::snprintf(buf, sizeof(buf), "%.17g\t%.17g\t%lld\n", s.mu, s.sigma_l,
                      static_cast<long long>(s.n_data));
        os << buf;
    }
}

void write_design_result(std::ostream& os, const DesignResult& r) {
    char buf[96];
    auto kv = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s = %.17g\n", key, v);
        os << buf;
    };
    kv("pi1", r.pi1);
    kv("epsilon", r.epsilon);
    kv("g0", r.g0);
    kv("alpha", r.alpha);
    kv("predicted_error", r.predicted_error);
    kv("predicted_usage", r.predicted_usage);
    os << "grid_evaluations = " << r.grid_evaluations << "\n";
}

} // namespace seqmh
