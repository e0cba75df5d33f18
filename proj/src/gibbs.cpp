#include "seqmh/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "seqmh/stats.hpp"

namespace seqmh {

void FactorizedBinaryModel::validate() const {
    if (n_vars < 1) throw std::invalid_argument("model needs at least one variable");
    for (const BinaryFactor& f : factors) {
        if (f.scope.empty() || f.scope.size() > 20)
            throw std::invalid_argument("factor scope must have 1..20 variables");
        if (f.log_table.size() != (std::size_t(1) << f.scope.size()))
            throw std::invalid_argument("factor table size must be 2^|scope|");
        for (std::uint32_t v : f.scope)
            if (v >= static_cast<std::uint32_t>(n_vars))
                throw std::invalid_argument("factor scope index out of range");
        for (double v : f.log_table)
            if (!std::isfinite(v)) throw std::invalid_argument("factor table must be finite");
    }
}

double FactorizedBinaryModel::log_joint(std::span<const std::uint8_t> state) const {
    double s = 0.0;
    for (const BinaryFactor& f : factors) {
        std::size_t idx = 0;
        for (std::size_t t = 0; t < f.scope.size(); ++t)
            idx |= static_cast<std::size_t>(state[f.scope[t]] ? 1 : 0) << t;
        s += f.log_table[idx];
    }
    return s;
}

FactorizedBinaryModel dense_triplet_mrf(int n_vars, std::uint64_t seed, double table_scale) {
    if (n_vars < 3) throw std::invalid_argument("dense triplet model needs at least 3 variables");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, table_scale);
    FactorizedBinaryModel m;
    m.n_vars = n_vars;
    m.factors.reserve(static_cast<std::size_t>(n_vars) * (n_vars - 1) * (n_vars - 2) / 6);
    for (int i = 0; i < n_vars; ++i)
        for (int j = i + 1; j < n_vars; ++j)
            for (int k = j + 1; k < n_vars; ++k) {
                BinaryFactor f;
                f.scope = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                           static_cast<std::uint32_t>(k)};
                f.log_table.resize(8);
                for (double& v : f.log_table) v = gauss(rng);
                m.factors.push_back(std::move(f));
            }
    return m;
}

SiteIndex SiteIndex::build(const FactorizedBinaryModel& model) {
    SiteIndex idx;
    idx.per_site.resize(static_cast<std::size_t>(model.n_vars));
    for (std::uint32_t fi = 0; fi < model.factors.size(); ++fi) {
        const BinaryFactor& f = model.factors[fi];
        for (std::uint32_t t = 0; t < f.scope.size(); ++t)
            idx.per_site[f.scope[t]].push_back({fi, t});
    }
    return idx;
}

LogLikDiffPopulation gibbs_ratio_population(const FactorizedBinaryModel& model,
                                            const SiteIndex& index, int site,
                                            std::span<const std::uint8_t> state) {
    const auto& entries = index.per_site[static_cast<std::size_t>(site)];
    LogLikDiffPopulation pop;
    pop.size = static_cast<std::int64_t>(entries.size());
    pop.eval_batch = [&model, &entries, state](std::span<const std::uint32_t> idx,
                                               std::span<double> out) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const auto& e = entries[idx[b]];
            const BinaryFactor& f = model.factors[e.factor];
            std::size_t base = 0;
            for (std::size_t t = 0; t < f.scope.size(); ++t) {
                if (t == e.bit_self) continue;
                base |= static_cast<std::size_t>(state[f.scope[t]] ? 1 : 0) << t;
            }
            const std::size_t self_bit = std::size_t(1) << e.bit_self;
            out[b] = f.log_table[base | self_bit] - f.log_table[base];
        }
    };
    return pop;
}

double gibbs_mu0(double u, std::int64_t n_factors) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("gibbs_mu0: u must be in (0, 1)");
    if (n_factors < 1) throw std::invalid_argument("gibbs_mu0: need at least one factor");
    return std::log(u) / std::log1p(-u) / static_cast<double>(n_factors);
}

double gibbs_logit_mu0(double u, std::int64_t n_factors) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("gibbs_logit_mu0: u must be in (0, 1)");
    if (n_factors < 1) throw std::invalid_argument("gibbs_logit_mu0: need at least one factor");
    return logit(u) / static_cast<double>(n_factors);
}

double exact_conditional(int site, std::span<const std::uint8_t> state,
                         const FactorizedBinaryModel& model, const SiteIndex& index) {
    const auto& entries = index.per_site[static_cast<std::size_t>(site)];
    double log_odds = 0.0;
    for (const auto& e : entries) {
        const BinaryFactor& f = model.factors[e.factor];
        std::size_t base = 0;
        for (std::size_t t = 0; t < f.scope.size(); ++t) {
            if (t == e.bit_self) continue;
            base |= static_cast<std::size_t>(state[f.scope[t]] ? 1 : 0) << t;
        }
        const std::size_t self_bit = std::size_t(1) << e.bit_self;
        log_odds += f.log_table[base | self_bit] - f.log_table[base];
    }
    return 1.0 / (1.0 + std::exp(-log_odds));
}

GibbsUpdateResult exact_gibbs_update(int site, std::span<std::uint8_t> state,
                                     const FactorizedBinaryModel& model, const SiteIndex& index,
                                     std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    while (u <= 0.0 || u >= 1.0) u = unif(rng);
    const double p1 = exact_conditional(site, state, model, index);
    GibbsUpdateResult r;
    r.value = u < p1 ? 1 : 0;
    r.n_used = static_cast<std::int64_t>(index.per_site[static_cast<std::size_t>(site)].size());
    r.stages = 1;
    state[static_cast<std::size_t>(site)] = r.value;
    return r;
}

GibbsUpdateResult approx_gibbs_update(int site, std::span<std::uint8_t> state,
                                      const FactorizedBinaryModel& model, const SiteIndex& index,
                                      const SequentialTestSpec& spec, std::mt19937_64& rng,
                                      SeqTestScratch* scratch) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    while (u <= 0.0 || u >= 1.0) u = unif(rng);

    const auto pop = gibbs_ratio_population(model, index, site, state);
    SequentialTestSpec site_spec = spec;
    site_spec.batch_size = std::min(spec.batch_size, pop.size);
    const double mu0 = gibbs_logit_mu0(u, pop.size);
    const TestDecision d = sequential_mh_test(pop, mu0, site_spec, rng, scratch);

    GibbsUpdateResult r;
    r.value = d.accept ? 1 : 0;
    r.n_used = d.n_used;
    r.stages = d.stages;
    state[static_cast<std::size_t>(site)] = r.value;
    return r;
}

std::vector<std::vector<std::uint32_t>> draw_subsets(int n_vars, int n_subsets, int subset_size,
                                                     std::mt19937_64& rng) {
    if (subset_size > n_vars) throw std::invalid_argument("subset size exceeds variable count");

    // Count distinct subsets; enumerate them all when there are few.
    double n_choose = 1.0;
    for (int t = 0; t < subset_size; ++t)
        n_choose = n_choose * (n_vars - t) / (t + 1);
    if (n_choose <= static_cast<double>(n_subsets)) {
        std::vector<std::vector<std::uint32_t>> all;
        std::vector<std::uint32_t> comb(static_cast<std::size_t>(subset_size));
        for (int t = 0; t < subset_size; ++t) comb[static_cast<std::size_t>(t)] = static_cast<std::uint32_t>(t);
        while (true) {
            all.push_back(comb);
            int t = subset_size - 1;
            while (t >= 0 && comb[static_cast<std::size_t>(t)] ==
                                 static_cast<std::uint32_t>(n_vars - subset_size + t))
                --t;
            if (t < 0) break;
            ++comb[static_cast<std::size_t>(t)];
            for (int s = t + 1; s < subset_size; ++s)
                comb[static_cast<std::size_t>(s)] = comb[static_cast<std::size_t>(s - 1)] + 1;
        }
        return all;
    }

    std::vector<std::vector<std::uint32_t>> subsets;
    subsets.reserve(static_cast<std::size_t>(n_subsets));
    std::vector<std::uint32_t> pool(static_cast<std::size_t>(n_vars));
    for (int i = 0; i < n_subsets; ++i) {
        std::iota(pool.begin(), pool.end(), 0u);
        for (int t = 0; t < subset_size; ++t) {
            std::uniform_int_distribution<int> pick(t, n_vars - 1);
            std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(pick(rng))]);
        }
        std::vector<std::uint32_t> s(pool.begin(), pool.begin() + subset_size);
        std::sort(s.begin(), s.end());
        subsets.push_back(std::move(s));
    }
    return subsets;
}

std::vector<std::vector<double>> subset_distribution(
    std::span<const std::vector<std::uint8_t>> states,
    std::span<const std::vector<std::uint32_t>> subsets) {
    if (states.empty()) throw std::invalid_argument("subset_distribution: empty trace");
    std::vector<std::vector<double>> dist(subsets.size());
    for (std::size_t m = 0; m < subsets.size(); ++m)
        dist[m].assign(std::size_t(1) << subsets[m].size(), 0.0);
    const double w = 1.0 / static_cast<double>(states.size());
    for (const auto& st : states) {
        for (std::size_t m = 0; m < subsets.size(); ++m) {
            std::size_t cfg = 0;
            for (std::size_t t = 0; t < subsets[m].size(); ++t)
                cfg |= static_cast<std::size_t>(st[subsets[m][t]] ? 1 : 0) << t;
            dist[m][cfg] += w;
        }
    }
    return dist;
}

double subset_l1_error(std::span<const std::vector<std::uint8_t>> states,
                       std::span<const std::vector<double>> truth,
                       std::span<const std::vector<std::uint32_t>> subsets) {
    const auto emp = subset_distribution(states, subsets);
    double total = 0.0;
    for (std::size_t m = 0; m < subsets.size(); ++m) {
        double l1 = 0.0;
        for (std::size_t c = 0; c < emp[m].size(); ++c) l1 += std::fabs(emp[m][c] - truth[m][c]);
        total += l1;
    }
    return total / static_cast<double>(subsets.size());
}

std::vector<double> enumerate_joint(const FactorizedBinaryModel& model) {
    if (model.n_vars > 20) throw std::invalid_argument("enumeration limited to 20 variables");
    const std::size_t n_states = std::size_t(1) << model.n_vars;
    std::vector<double> logp(n_states);
    std::vector<std::uint8_t> state(static_cast<std::size_t>(model.n_vars));
    double max_lp = -1e300;
    for (std::size_t s = 0; s < n_states; ++s) {
        for (int v = 0; v < model.n_vars; ++v) state[static_cast<std::size_t>(v)] = (s >> v) & 1;
        logp[s] = model.log_joint(state);
        max_lp = std::max(max_lp, logp[s]);
    }
    double z = 0.0;
    for (double& lp : logp) {
        lp = std::exp(lp - max_lp);
        z += lp;
    }
    for (double& p : logp) p /= z;
    return logp;
}

std::vector<std::vector<double>> subset_distribution_from_joint(
    const std::vector<double>& joint, int n_vars,
    std::span<const std::vector<std::uint32_t>> subsets) {
    std::vector<std::vector<double>> dist(subsets.size());
    for (std::size_t m = 0; m < subsets.size(); ++m)
        dist[m].assign(std::size_t(1) << subsets[m].size(), 0.0);
    for (std::size_t s = 0; s < joint.size(); ++s) {
        for (std::size_t m = 0; m < subsets.size(); ++m) {
            std::size_t cfg = 0;
            for (std::size_t t = 0; t < subsets[m].size(); ++t)
                cfg |= ((s >> subsets[m][t]) & 1) << t;
            dist[m][cfg] += joint[s];
        }
    }
    (void)n_vars;
    return dist;
}

void write_mrf_model(std::ostream& os, const FactorizedBinaryModel& model) {
    os << model.n_vars << " " << model.factors.size() << "\n";
    char buf[64];
    for (const BinaryFactor& f : model.factors) {
        os << f.scope.size();
        for (std::uint32_t v : f.scope) os << " " << v;
        for (double v : f.log_table) {
            std::snprintf(buf, sizeof(buf), " %.17g", v);
            os << buf;
        }
        os << "\n";
    }
}

FactorizedBinaryModel read_mrf_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    FactorizedBinaryModel m;
    std::size_t n_factors = 0;
    if (!(in >> m.n_vars >> n_factors)) throw std::runtime_error("malformed model header: " + path);
    m.factors.resize(n_factors);
    for (BinaryFactor& f : m.factors) {
        std::size_t scope_size = 0;
        if (!(in >> scope_size) || scope_size == 0 || scope_size > 20)
            throw std::runtime_error("malformed factor scope in " + path);
        f.scope.resize(scope_size);
        for (std::uint32_t& v : f.scope)
            if (!(in >> v)) throw std::runtime_error("truncated factor scope in " + path);
        f.log_table.resize(std::size_t(1) << scope_size);
        for (double& x : f.log_table)
            if (!(in >> x)) throw std::runtime_error("truncated factor table in " + path);
    }
    m.validate();
    return m;
}

} // namespace seqmh
