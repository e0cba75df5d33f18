#include "seqmh/rwalk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "seqmh/stats.hpp"

namespace seqmh {

std::vector<double> uniform_pi_grid(double pi1) {
    if (!(pi1 > 0.0 && pi1 <= 1.0)) throw std::invalid_argument("pi1 must lie in (0, 1]");
    std::vector<double> pi;
    double p = 0.0;
    while (p < 1.0 - 1e-12) {
        p = std::min(1.0, p + pi1);
        pi.push_back(p);
    }
    pi.back() = 1.0;
    return pi;
}

std::vector<double> bound_sequence(double g0, double alpha, std::span<const double> pi_grid) {
    if (!(g0 >= 0.0)) throw std::invalid_argument("bound base must be nonnegative");
    if (!(alpha >= 0.5 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0.5, 1]");
    std::vector<double> g(pi_grid.size());
    for (std::size_t j = 0; j < pi_grid.size(); ++j)
        g[j] = g0 * std::pow(pi_grid[j], 0.5 - alpha);
    return g;
}

StageStructure StageStructure::uniform(double pi1, double g0, double alpha) {
    StageStructure s;
    s.pi = uniform_pi_grid(pi1);
    s.bounds = bound_sequence(g0, alpha, s.pi);
    return s;
}

RandomWalkParams RandomWalkParams::uniform(double mu_std, double pi1, double g0, double alpha) {
    return {mu_std, StageStructure::uniform(pi1, g0, alpha)};
}

GaussianStep rw_conditional_params(double mu_std, double pi_prev, double pi_cur, double z_prev) {
    if (!(pi_prev >= 0.0 && pi_prev < 1.0) || !(pi_cur >= pi_prev && pi_cur <= 1.0))
        throw std::invalid_argument("rw_conditional_params: need 0 <= pi_prev <= pi_cur <= 1, pi_prev < 1");
    if (pi_cur == pi_prev) return {z_prev, 0.0}; // no new data, walk frozen
    if (pi_cur >= 1.0) {
        // Absorbing full-data stage: the conditional mean diverges and the
        // decision is exact; callers treat this stage specially.
        return {mu_std >= 0.0 ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity(),
                1.0};
    }
    const double dphi = pi_cur - pi_prev;
    GaussianStep out;
    out.mean = mu_std * dphi / ((1.0 - pi_prev) * std::sqrt(pi_cur * (1.0 - pi_cur)));
    if (pi_prev > 0.0)
        out.mean += z_prev * std::sqrt((pi_prev / pi_cur) * (1.0 - pi_cur) / (1.0 - pi_prev));
    out.variance = dphi / (pi_cur * (1.0 - pi_prev));
    return out;
}

namespace {

struct DpResult {
    double error = 0.0;
    double usage = 0.0;
    std::vector<double> stop_mass;
};

DpResult dp_single(const RandomWalkParams& p, int grid_size) {
    const std::size_t n_stages = p.stages.num_stages();
    DpResult out;
    out.stop_mass.assign(n_stages, 0.0);

    // Source points of the previous stage's surviving density. Stage 1 has a
    // single virtual source at pi_prev = 0.
    std::vector<double> src_z{0.0}, src_w{1.0};
    std::vector<double> dst_z(static_cast<std::size_t>(grid_size));
    std::vector<double> dst_w(static_cast<std::size_t>(grid_size));
    double pi_prev = 0.0;

    for (std::size_t j = 0; j < n_stages; ++j) {
        const double pi_cur = p.stages.pi[j];
        if (j + 1 == n_stages) {
            // Full data: every surviving path stops and decides exactly.
            double surviving = 0.0;
            for (double w : src_w) surviving += w;
            out.stop_mass[j] = surviving;
            break;
        }
        const double g = p.stages.bounds[j];
        const double dz = 2.0 * g / grid_size;
        for (int k = 0; k < grid_size; ++k) dst_z[static_cast<std::size_t>(k)] = -g + (k + 0.5) * dz;
        std::fill(dst_w.begin(), dst_w.end(), 0.0);

        // Exact Gaussian mass per destination cell (shared edge CDFs), so the
        // stopped and surviving masses account for each source exactly.
        std::vector<double> edge_cdf(static_cast<std::size_t>(grid_size) + 1);
        double lo_mass = 0.0, hi_mass = 0.0;
        for (std::size_t s = 0; s < src_z.size(); ++s) {
            const double w = src_w[s];
            if (w <= 0.0) continue;
            const GaussianStep c = (j == 0) ? rw_conditional_params(p.mu_std, 0.0, pi_cur, 0.0)
                                            : rw_conditional_params(p.mu_std, pi_prev, pi_cur, src_z[s]);
            const double sd = std::sqrt(c.variance);
            for (int k = 0; k <= grid_size; ++k)
                edge_cdf[static_cast<std::size_t>(k)] = normal_cdf((-g + k * dz - c.mean) / sd);
            lo_mass += w * edge_cdf[0];
            hi_mass += w * (1.0 - edge_cdf[static_cast<std::size_t>(grid_size)]);
            for (int k = 0; k < grid_size; ++k)
                dst_w[static_cast<std::size_t>(k)] +=
                    w * (edge_cdf[static_cast<std::size_t>(k) + 1] - edge_cdf[static_cast<std::size_t>(k)]);
        }
        out.stop_mass[j] = lo_mass + hi_mass;
        out.error += (p.mu_std >= 0.0) ? lo_mass : hi_mass;

        src_z = dst_z;
        src_w = dst_w;
        pi_prev = pi_cur;
    }

    for (std::size_t j = 0; j < n_stages; ++j) out.usage += p.stages.pi[j] * out.stop_mass[j];
    return out;
}

void check_params(const RandomWalkParams& p) {
    if (p.stages.pi.empty() || p.stages.pi.size() != p.stages.bounds.size())
        throw std::invalid_argument("random walk params: empty or mismatched stage grids");
    double prev = 0.0;
    for (double v : p.stages.pi) {
        if (!(v > prev && v <= 1.0)) throw std::invalid_argument("pi grid must be strictly increasing in (0, 1]");
        prev = v;
    }
    if (std::fabs(p.stages.pi.back() - 1.0) > 1e-9)
        throw std::invalid_argument("pi grid must end at 1");
}

} // namespace

RandomWalkProfile dp_error_and_usage(const RandomWalkParams& params, int grid_size) {
    check_params(params);
    if (grid_size < 32) throw std::invalid_argument("dp grid size must be >= 32");
    if (grid_size % 2 != 0) ++grid_size;

    const DpResult coarse = dp_single(params, grid_size / 2);
    const DpResult fine = dp_single(params, grid_size);

    RandomWalkProfile prof;
    prof.error = fine.error;
    prof.expected_usage = fine.usage;
    prof.stop_mass = fine.stop_mass;
    prof.grid_shift = std::max(std::fabs(fine.error - coarse.error),
                               std::fabs(fine.usage - coarse.usage));
    prof.converged = prof.grid_shift <= 1e-4;
    return prof;
}

double worst_case_error(double pi1, std::span<const double> bounds, int grid_size) {
    RandomWalkParams p;
    p.mu_std = 0.0;
    p.stages.pi = uniform_pi_grid(pi1);
    if (bounds.size() != p.stages.pi.size())
        throw std::invalid_argument("worst_case_error: bounds length must match stage count");
    p.stages.bounds.assign(bounds.begin(), bounds.end());
    return dp_error_and_usage(p, grid_size).error;
}

EmpiricalProfile simulate_sequential_tests(double mu_std, const RandomWalkParams& params,
                                           std::int64_t trials, std::mt19937_64& rng) {
    check_params(params);
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const std::size_t n_stages = params.stages.num_stages();
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::int64_t errors = 0;
    double usage_sum = 0.0, usage_sq = 0.0;
    std::vector<double> stop_mass(n_stages, 0.0);

    for (std::int64_t t = 0; t < trials; ++t) {
        double z = 0.0, pi_prev = 0.0;
        for (std::size_t j = 0; j < n_stages; ++j) {
            const double pi_cur = params.stages.pi[j];
            if (j + 1 == n_stages) {
                // Exact decision, never wrong.
                usage_sum += pi_cur;
                usage_sq += pi_cur * pi_cur;
                stop_mass[j] += 1.0;
                break;
            }
            const GaussianStep c = rw_conditional_params(mu_std, pi_prev, pi_cur, z);
            z = c.mean + std::sqrt(c.variance) * gauss(rng);
            const double g = params.stages.bounds[j];
            if (std::fabs(z) > g) {
                if (mu_std >= 0.0 ? (z < -g) : (z > g)) ++errors;
                usage_sum += pi_cur;
                usage_sq += pi_cur * pi_cur;
                stop_mass[j] += 1.0;
                break;
            }
            pi_prev = pi_cur;
        }
    }

    EmpiricalProfile out;
    const double n = static_cast<double>(trials);
    out.error = static_cast<double>(errors) / n;
    out.error_se = std::sqrt(std::max(0.0, out.error * (1.0 - out.error)) / n);
    out.expected_usage = usage_sum / n;
    const double var = std::max(0.0, usage_sq / n - out.expected_usage * out.expected_usage);
    out.usage_se = std::sqrt(var / n);
    out.stop_mass = stop_mass;
    for (double& m : out.stop_mass) m /= n;
    return out;
}

namespace {

// The quadrature over u runs in t = log u space, where the standardized mean
//   mu_std(t) = (mu - t/N) sqrt(N-1) / sigma_l
// is linear in t and du = e^t dt. E(mu_std) vanishes outside
// |mu_std| <= 50, i.e. outside a window of half-width
//   W = 50 N sigma_l / sqrt(N-1)
// around t_a = N mu (the accept/reject split). Working on that window avoids
// the sub-resolution spike at u = P_a that a fixed rule on (0, 1) cannot see.
struct LogUQuadrature {
    double n = 0.0;
    double mu = 0.0;
    double scale = 0.0; // sqrt(N-1)/sigma_l
    double t_accept = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;

    LogUQuadrature(double mu_, double sigma_l, std::int64_t n_data) {
        n = static_cast<double>(n_data);
        mu = mu_;
        scale = std::sqrt(n - 1.0) / sigma_l;
        t_accept = n * mu;
        const double window = 50.0 * n * sigma_l / std::sqrt(n - 1.0);
        t_lo = std::max(-745.0, t_accept - window);
        t_hi = std::min(0.0, t_accept + window);
    }

    double mu_std_at(double t) const { return std::clamp((mu - t / n) * scale, -50.0, 50.0); }
    double p_accept() const { return t_accept >= 0.0 ? 1.0 : std::exp(t_accept); }
};

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
constexpr double kGkNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kGkWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <typename F>
void gk15(const F& f, double a, double b, double& value, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kGkNodes[i]);
        fv[14 - i] = f(c + h * kGkNodes[i]);
    }
    fv[7] = f(c);
    double kron = 0.0;
    for (int i = 0; i < 7; ++i) kron += kGkWeights[i] * (fv[i] + fv[14 - i]);
    kron += kGkWeights[7] * fv[7];
    double gauss = kGaussWeights[3] * fv[7];
    for (int i = 0; i < 3; ++i) gauss += kGaussWeights[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    value = kron * h;
    err = std::fabs((kron - gauss) * h);
}

// Adaptive bisection on GK15 panels down to an absolute tolerance.
template <typename F>
double adaptive_gk(const F& f, double a, double b, double tol, int init_panels, bool& ok) {
    struct Panel {
        double a, b, value, err;
        int depth;
    };
    std::vector<Panel> work;
    const int n0 = std::max(1, init_panels);
    for (int i = 0; i < n0; ++i) {
        const double pa = a + (b - a) * i / n0;
        const double pb = a + (b - a) * (i + 1) / n0;
        Panel p{pa, pb, 0.0, 0.0, 0};
        gk15(f, pa, pb, p.value, p.err);
        work.push_back(p);
    }
    double total = 0.0;
    while (!work.empty()) {
        Panel p = work.back();
        work.pop_back();
        const double local_tol = tol * std::max(1e-12, (p.b - p.a) / (b - a));
        if (p.err <= local_tol || p.depth >= 28) {
            if (p.err > local_tol) ok = false;
            total += p.value;
            continue;
        }
        const double mid = 0.5 * (p.a + p.b);
        Panel l{p.a, mid, 0.0, 0.0, p.depth + 1};
        Panel r{mid, p.b, 0.0, 0.0, p.depth + 1};
        gk15(f, l.a, l.b, l.value, l.err);
        gk15(f, r.a, r.b, r.value, r.err);
        work.push_back(l);
        work.push_back(r);
    }
    return total;
}

} // namespace

DeltaResult delta_acceptance(double mu, double sigma_l, std::int64_t n_data,
                             const StageStructure& stages, int quadrature_points,
                             int grid_size) {
    if (!(sigma_l > 0.0)) throw std::invalid_argument("delta_acceptance: sigma_l must be positive");
    if (n_data < 2) throw std::invalid_argument("delta_acceptance: need N >= 2");
    if (quadrature_points < 16) throw std::invalid_argument("delta_acceptance: quadrature_points >= 16");

    const LogUQuadrature q(mu, sigma_l, n_data);
    RandomWalkParams p{0.0, stages};
    auto integrand = [&](double t) {
        p.mu_std = std::fabs(q.mu_std_at(t));
        return dp_single(p, grid_size).error * std::exp(t);
    };

    const double tol = 1e-4;
    const int panels = std::max(1, quadrature_points / 15);
    bool ok = true;
    double accept_side = 0.0, reject_side = 0.0;
    const double split = std::min(q.t_accept, 0.0);
    if (q.t_lo < split) accept_side = adaptive_gk(integrand, q.t_lo, split, tol, panels, ok);
    if (split < q.t_hi) reject_side = adaptive_gk(integrand, split, q.t_hi, tol, panels, ok);

    DeltaResult out;
    out.p_a_exact = q.p_accept();
    out.delta = reject_side - accept_side;
    out.abs_error_expectation = reject_side + accept_side;
    out.p_a_approx = out.p_a_exact + out.delta;
    out.converged = ok;
    return out;
}

ErrorUsageCurve ErrorUsageCurve::build(const StageStructure& stages, int grid_size) {
    ErrorUsageCurve curve;
    curve.pi1 = stages.pi.front();
    RandomWalkParams p{0.0, stages};

    double step = 0.1;
    double m = 0.0;
    while (m <= 50.0 + 1e-9) {
        p.mu_std = m;
        const DpResult r = dp_single(p, grid_size);
        curve.mu.push_back(m);
        curve.error.push_back(r.error);
        curve.usage.push_back(r.usage);
        if (m > 0.0 && r.error < 1e-12 && r.usage - curve.pi1 < 1e-9) break;
        if (m >= 20.0) step = 2.5;
        else if (m >= 14.0) step = 1.0;
        else if (m >= 8.0) step = 0.5;
        else if (m >= 4.0) step = 0.2;
        m += step;
    }
    return curve;
}

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x,
              double beyond) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return beyond;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] * (1.0 - w) + ys[hi] * w;
}

} // namespace

double ErrorUsageCurve::error_at(double mu_std) const {
    return interp(mu, error, std::fabs(mu_std), 0.0);
}

double ErrorUsageCurve::usage_at(double mu_std) const {
    return interp(mu, usage, std::fabs(mu_std), usage.back());
}

CurveDelta delta_on_curve(double mu, double sigma_l, std::int64_t n_data,
                          const ErrorUsageCurve& curve, int panels) {
    if (!(sigma_l > 0.0)) throw std::invalid_argument("delta_on_curve: sigma_l must be positive");
    const LogUQuadrature q(mu, sigma_l, n_data);

    auto err_at_t = [&](double t) { return curve.error_at(q.mu_std_at(t)) * std::exp(t); };
    // pi-bar tends to pi1 outside the window, so integrate the excess only.
    auto usage_excess_at_t = [&](double t) {
        return (curve.usage_at(q.mu_std_at(t)) - curve.pi1) * std::exp(t);
    };

    auto simpson = [&](auto&& f, double a, double b, int n) {
        if (b <= a) return 0.0;
        const int segments = std::max(2, n - n % 2);
        const double h = (b - a) / segments;
        double s = f(a) + f(b);
        for (int i = 1; i < segments; ++i) s += f(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
        return s * h / 3.0;
    };

    CurveDelta out;
    out.p_a_exact = q.p_accept();
    const double split = std::min(q.t_accept, 0.0);
    const double acc_err = simpson(err_at_t, q.t_lo, split, panels);
    const double rej_err = simpson(err_at_t, split, q.t_hi, panels);
    out.delta = rej_err - acc_err;
    out.abs_error_expectation = rej_err + acc_err;
    out.expected_usage = curve.pi1 + simpson(usage_excess_at_t, q.t_lo, split, panels) +
                         simpson(usage_excess_at_t, split, q.t_hi, panels);
    return out;
}

void write_profile_table(std::ostream& os, std::span<const ProfileRow> rows) {
    os << "mu_std\terror\tusage\tdelta\n";
    char buf[160];
    for (const ProfileRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g\t%.17g\t%.17g\t%.17g\n", r.mu_std, r.error,
                      r.usage, r.delta);
        os << buf;
    }
}

} // namespace seqmh
