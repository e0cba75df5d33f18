// Train/test generalization of the average design: on 50/50 splits of
// synthetic proposal moments, the held-out average |delta| exceeds the budget
// by at most 50% in at least 19 of 20 seeded replications.

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "seqmh/design.hpp"
#include "seqmh/stats.hpp"

using namespace seqmh;

int main() {
    DesignGrid grid;
    grid.pi1 = {0.05, 0.1, 0.2};
    grid.epsilon = {0.01, 0.05, 0.1, 0.3};
    grid.alpha = {0.5, 1.0};

    const double budget = 0.05;
    int within = 0;
    for (int rep = 0; rep < 20; ++rep) {
        std::mt19937_64 rng(4000 + rep);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        auto draw = [&](int count) {
            std::vector<MomentSample> s;
            for (int i = 0; i < count; ++i) {
                const std::int64_t n = 5000;
                const double p_a = 0.2 + 0.7 * unif(rng);
                const double mu = std::log(p_a) / static_cast<double>(n);
                const double spread = 0.5 + 7.5 * unif(rng);
                s.push_back({mu, std::fabs(mu) * std::sqrt(static_cast<double>(n - 1)) / spread, n});
            }
            return s;
        };
        const auto train = draw(30);
        const auto test = draw(30);

        DesignResult r;
        try {
            r = average_design(train, budget, grid, 96);
        } catch (const InfeasibleDesign&) {
            std::printf("rep %d: infeasible on train\n", rep);
            continue;
        }
        const StageStructure stages =
            StageStructure::uniform(r.pi1, normal_quantile(1.0 - r.epsilon), r.alpha);
        const ErrorUsageCurve curve = ErrorUsageCurve::build(stages, 192);
        double test_err = 0.0;
        for (const MomentSample& s : test)
            test_err += std::fabs(delta_on_curve(s.mu, s.sigma_l, s.n_data, curve, 128).delta);
        test_err /= static_cast<double>(test.size());
        const bool ok = test_err <= 1.5 * budget;
        std::printf("rep %2d: train err %.4f -> test err %.4f %s\n", rep, r.predicted_error,
                    test_err, ok ? "" : "(over 1.5x budget)");
        within += ok ? 1 : 0;
    }
    std::printf("within 1.5x budget on held-out: %d / 20\n", within);
    if (within < 19) {
        std::printf("FAIL design generalization\n");
        return 1;
    }
    std::printf("PASS design generalization\n");
    return 0;
}
