#include "seqmh/models.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "seqmh/stats.hpp"

namespace seqmh {

double LogisticRegressionModel::dot_row(std::int64_t i, std::span<const double> theta) const {
    const double* row = features.data() + i * n_features;
    double s = 0.0;
    for (int j = 0; j < n_features; ++j) s += row[j] * theta[static_cast<std::size_t>(j)];
    return s;
}

double LogisticRegressionModel::log_lik_point(std::int64_t i, std::span<const double> theta) const {
    const double sign = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    return -log1p_exp(-sign * dot_row(i, theta));
}

double LogisticRegressionModel::log_lik(std::span<const double> theta) const {
    double s = 0.0;
    for (std::int64_t i = 0; i < n_rows; ++i) s += log_lik_point(i, theta);
    return s;
}

double LogisticRegressionModel::log_prior(std::span<const double> theta) const {
    double sq = 0.0;
    for (double v : theta) sq += v * v;
    return -0.5 * prior_precision * sq;
}

std::vector<double> LogisticRegressionModel::log_lik_grad(std::span<const double> theta) const {
    std::vector<double> g(static_cast<std::size_t>(n_features), 0.0);
    for (std::int64_t i = 0; i < n_rows; ++i) {
        const double sign = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
        const double s = sign * dot_row(i, theta);
        // d/ds log sigma(s) = sigma(-s)
        const double w = sign / (1.0 + std::exp(s));
        const double* row = features.data() + i * n_features;
        for (int j = 0; j < n_features; ++j) g[static_cast<std::size_t>(j)] += w * row[j];
    }
    return g;
}

LogLikDiffPopulation LogisticRegressionModel::lldiff_population(
    std::span<const double> cur, std::span<const double> prop) const {
    if (cur.size() != static_cast<std::size_t>(n_features) || prop.size() != cur.size())
        throw std::invalid_argument("logistic population: parameter dimension mismatch");
    LogLikDiffPopulation pop;
    pop.size = n_rows;
    pop.eval_batch = [this, cur, prop](std::span<const std::uint32_t> idx, std::span<double> out) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const std::int64_t i = idx[b];
            out[b] = log_lik_point(i, prop) - log_lik_point(i, cur);
        }
    };
    return pop;
}

LogisticRegressionModel synth_logistic_dataset(std::int64_t n_rows, int n_features,
                                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    LogisticRegressionModel m;
    m.n_rows = n_rows;
    m.n_features = n_features;
    m.features.resize(static_cast<std::size_t>(n_rows) * n_features);
    m.labels.resize(static_cast<std::size_t>(n_rows));

    std::vector<double> theta(static_cast<std::size_t>(n_features));
    const double scale = 2.0 / std::sqrt(static_cast<double>(n_features));
    for (double& v : theta) v = scale * gauss(rng);

    for (std::int64_t i = 0; i < n_rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_features; ++j) {
            const double x = gauss(rng);
            m.features[static_cast<std::size_t>(i) * n_features + j] = x;
            s += x * theta[static_cast<std::size_t>(j)];
        }
        const double p = 1.0 / (1.0 + std::exp(-s));
        m.labels[static_cast<std::size_t>(i)] = unif(rng) < p ? 1 : 0;
    }
    return m;
}

void Lasso1DModel::finalize() {
    sum_x2 = sum_xy = sum_y2 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sum_x2 += xs[i] * xs[i];
        sum_xy += xs[i] * ys[i];
        sum_y2 += ys[i] * ys[i];
    }
}

double Lasso1DModel::log_lik_point(std::int64_t i, double theta) const {
    const double r = ys[static_cast<std::size_t>(i)] - theta * xs[static_cast<std::size_t>(i)];
    return -0.5 * lambda * r * r;
}

double Lasso1DModel::log_post(double theta) const {
    const double quad = sum_y2 - 2.0 * theta * sum_xy + theta * theta * sum_x2;
    return -0.5 * lambda * quad - lambda0 * std::abs(theta);
}

double Lasso1DModel::grad_log_post(double theta) const {
    const double sign = theta > 0.0 ? 1.0 : (theta < 0.0 ? -1.0 : 0.0);
    return lambda * (sum_xy - theta * sum_x2) - lambda0 * sign;
}

LogLikDiffPopulation Lasso1DModel::lldiff_population(double cur, double prop) const {
    LogLikDiffPopulation pop;
    pop.size = size();
    pop.eval_batch = [this, cur, prop](std::span<const std::uint32_t> idx, std::span<double> out) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const std::size_t i = idx[b];
            const double rc = ys[i] - cur * xs[i];
            const double rp = ys[i] - prop * xs[i];
            out[b] = 0.5 * lambda * (rc * rc - rp * rp);
        }
    };
    return pop;
}

Lasso1DModel synth_lasso_dataset(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> x_dist(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, std::sqrt(1.0 / 3.0));
    Lasso1DModel m;
    const std::int64_t n = 10000;
    m.xs.resize(static_cast<std::size_t>(n));
    m.ys.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = x_dist(rng);
        m.xs[static_cast<std::size_t>(i)] = x;
        m.ys[static_cast<std::size_t>(i)] = 0.5 * x + noise(rng);
    }
    m.finalize();
    return m;
}

// --- variable selection ---

double VarSelState::l1_norm() const {
    double s = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j)
        if (gamma[j]) s += std::abs(beta[j]);
    return s;
}

std::vector<double> VarSelState::dense_theta() const {
    std::vector<double> t(beta.size(), 0.0);
    for (std::size_t j = 0; j < beta.size(); ++j)
        if (gamma[j]) t[j] = beta[j];
    return t;
}

std::vector<VarSelMove> legal_moves(const VarSelState& state, int n_features) {
    std::vector<VarSelMove> moves{VarSelMove::update};
    if (state.k < n_features) moves.push_back(VarSelMove::birth);
    if (state.k > 1) moves.push_back(VarSelMove::death);
    return moves;
}

double log_move_prob(const VarSelState& from, VarSelMove move, int n_features) {
    const auto moves = legal_moves(from, n_features);
    bool legal = false;
    for (VarSelMove m : moves) legal = legal || (m == move);
    if (!legal) throw std::invalid_argument("log_move_prob: move not legal for this mask");
    double components = 0.0;
    switch (move) {
        case VarSelMove::update: components = from.k; break;
        case VarSelMove::birth: components = n_features - from.k; break;
        case VarSelMove::death: components = from.k; break;
    }
    return -std::log(static_cast<double>(moves.size())) - std::log(components);
}

double varsel_mu0(VarSelMove move, const VarSelState& state, const VarSelState& proposed,
                  int changed, double u, const VarSelModel& model) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("varsel_mu0: u must be in (0, 1)");
    const double n = static_cast<double>(model.data.n_rows);
    const int d = model.n_features();
    const double k = static_cast<double>(state.k);
    const double log_l1_cur = std::log(state.l1_norm());
    const double log_l1_prop = std::log(proposed.l1_norm());

    double log_ratio = std::log(u) - k * log_l1_cur;
    switch (move) {
        case VarSelMove::update: {
            if (proposed.k != state.k) throw std::invalid_argument("update must keep k fixed");
            log_ratio += k * log_l1_prop;
            break;
        }
        case VarSelMove::birth: {
            if (proposed.k != state.k + 1) throw std::invalid_argument("birth must add one feature");
            const double beta_new = proposed.beta[static_cast<std::size_t>(changed)];
            log_ratio += log_move_prob(state, VarSelMove::birth, d);
            log_ratio += log_normal_density(beta_new, 0.0, model.sigma_birth * model.sigma_birth);
            log_ratio += std::log(static_cast<double>(d) - k);
            log_ratio += (k + 1.0) * log_l1_prop;
            log_ratio -= log_move_prob(proposed, VarSelMove::death, d);
            log_ratio -= std::log(model.lambda);
            log_ratio -= std::log(k);
            break;
        }
        case VarSelMove::death: {
            if (proposed.k != state.k - 1) throw std::invalid_argument("death must drop one feature");
            const double beta_old = state.beta[static_cast<std::size_t>(changed)];
            log_ratio += log_move_prob(state, VarSelMove::death, d);
            log_ratio += std::log(model.lambda) + std::log(k - 1.0);
            log_ratio += (k - 1.0) * log_l1_prop;
            log_ratio -= log_move_prob(proposed, VarSelMove::birth, d);
            log_ratio -= log_normal_density(beta_old, 0.0, model.sigma_birth * model.sigma_birth);
            log_ratio -= std::log(static_cast<double>(d) - k + 1.0);
            break;
        }
    }
    return log_ratio / n;
}

LogLikDiffPopulation varsel_lldiff_population(const VarSelModel& model, const VarSelState& cur,
                                              const VarSelState& prop,
                                              std::vector<double>& cur_buf,
                                              std::vector<double>& prop_buf) {
    cur_buf = cur.dense_theta();
    prop_buf = prop.dense_theta();
    return model.data.lldiff_population({cur_buf.data(), cur_buf.size()},
                                        {prop_buf.data(), prop_buf.size()});
}

void write_logistic_dataset(std::ostream& os, const LogisticRegressionModel& m) {
    char buf[64];
    for (std::int64_t i = 0; i < m.n_rows; ++i) {
        for (int j = 0; j < m.n_features; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g\t",
                          m.features[static_cast<std::size_t>(i) * m.n_features + j]);
            os << buf;
        }
        os << int(m.labels[static_cast<std::size_t>(i)]) << "\n";
    }
}

LogisticRegressionModel read_logistic_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    LogisticRegressionModel m;
    std::string line;
    std::vector<double> row;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        row.assign(std::istream_iterator<double>(ls), std::istream_iterator<double>());
        if (row.size() < 2) throw std::runtime_error("malformed dataset row: " + line);
        if (m.n_features == 0) m.n_features = static_cast<int>(row.size()) - 1;
        if (static_cast<int>(row.size()) != m.n_features + 1)
            throw std::runtime_error("inconsistent dataset row width: " + line);
        for (int j = 0; j < m.n_features; ++j) m.features.push_back(row[static_cast<std::size_t>(j)]);
        m.labels.push_back(row.back() > 0.5 ? 1 : 0);
        ++m.n_rows;
    }
    return m;
}

} // namespace seqmh
