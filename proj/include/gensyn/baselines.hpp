#pragma once

#include "gensyn/conditional.hpp"
#include "gensyn/copula.hpp"
#include "gensyn/distribution.hpp"
#include "gensyn/maxent.hpp"
#include "gensyn/metrics.hpp"
#include "gensyn/rng.hpp"
#include "gensyn/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace gensyn {

/// Maximum entropy without a prior: uniform weights over the tuple space,
/// refined to the marginal constraints. Thresholding a uniform prior either
/// keeps everything or empties it, so pruning is skipped when tau exceeds
/// the uniform mass.
inline MaxentResult baseline_maxent(const Schema &schema, const ConstraintSet &constraints,
                                    double tau, const MaxentOptions &opts = {}) {
    TupleSpace space(schema);
    TupleDistribution uniform(schema);
    double mass = 1.0 / static_cast<double>(space.size());
    for (std::uint64_t i = 0; i < space.size(); ++i) uniform.add(i, mass);
    TupleDistribution u = tau <= mass ? threshold(uniform, tau) : uniform;
    return maxent_solve(u, constraints, opts);
}

/// Multinomial draw of n_pop records from the chain estimate p1.
inline SyntheticPopulation baseline_conditional(const Schema &schema,
                                                const TupleDistribution &p1, long long n_pop,
                                                Rng &rng) {
    std::vector<std::uint64_t> indices;
    std::vector<double> cumulative;
    double acc = 0.0;
    for (const auto &[idx, p] : p1.support()) {
        acc += p;
        indices.push_back(idx);
        cumulative.push_back(acc);
    }
    std::vector<std::uint64_t> records;
    records.reserve(static_cast<size_t>(n_pop));
    for (long long i = 0; i < n_pop; ++i) {
        double r = uniform01(rng) * acc;
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
        size_t pos = std::min(indices.size() - 1,
                              static_cast<size_t>(it - cumulative.begin()));
        records.push_back(indices[pos]);
    }
    return population_from_records(schema, std::move(records));
}

/// Copula-only baseline: a single sampling round with n_draw = N_pop,
/// matched against the exact D1 capacities. TAE against D1 is zero by
/// construction.
inline SyntheticPopulation baseline_sync(const Schema &schema, const CopulaSpec &spec,
                                         const MarginalTables &d1, long long n_pop, Rng &rng) {
    auto eta = integerize_eta(schema, d1, n_pop);
    Eigen::MatrixXd y = draw_component_probs(schema, spec, static_cast<int>(n_pop), rng);
    auto profiles = match_marginals(schema, y, eta, rng);
    TupleSpace space(schema);
    std::vector<std::uint64_t> records;
    records.reserve(profiles.size());
    for (const auto &prof : profiles) records.push_back(space.flat_index(prof));
    return population_from_records(schema, std::move(records));
}

/// Chain prior only: maxent refinement with u = threshold(p1, tau).
inline MaxentResult baseline_syntropy(const TupleDistribution &p1,
                                      const ConstraintSet &constraints, double tau,
                                      const MaxentOptions &opts = {}) {
    return maxent_solve(threshold(p1, tau), constraints, opts);
}

struct AnnealParams {
    double initial_temperature = -1.0; // <= 0: start at the initial TAE
    double cooling = 0.995;            // geometric, per proposal
    long long proposals = 100000;
};

/// Structural stand-in for the conditional + reweighting + annealing
/// pipeline: sample records from p1, then anneal single-record category
/// swaps against TAE vs the D1 targets. Returns the best configuration
/// seen; stops early at TAE = 0.
inline SyntheticPopulation baseline_synthacs(const Schema &schema, const TupleDistribution &p1,
                                             const MarginalTables &d1, long long n_pop,
                                             const AnnealParams &params, Rng &rng) {
    SyntheticPopulation pop = baseline_conditional(schema, p1, n_pop, rng);
    TupleSpace space(schema);

    // expected counts: D1 proportions scaled to n_pop
    std::vector<std::vector<double>> expected(schema.size());
    for (size_t k = 0; k < schema.size(); ++k) {
        auto props = d1.require(schema, static_cast<int>(k)).proportions(schema);
        expected[k].resize(props.size());
        for (size_t c = 0; c < props.size(); ++c)
            expected[k][c] = props[c] * static_cast<double>(n_pop);
    }
    auto observed = pop.category_counts();
    double current_tae = tae(observed, expected);

    std::vector<std::uint64_t> best_records = pop.records;
    double best_tae = current_tae;
    double temperature =
        params.initial_temperature > 0 ? params.initial_temperature : std::max(current_tae, 1.0);

    std::uniform_int_distribution<long long> pick_record(0, n_pop - 1);
    std::uniform_int_distribution<int> pick_var(0, static_cast<int>(schema.size()) - 1);

    for (long long step = 0; step < params.proposals && current_tae > 0; ++step) {
        long long r = pick_record(rng);
        int k = pick_var(rng);
        int old_cat = space.category_of(pop.records[r], k);
        int n_cats = static_cast<int>(schema.var(k).categories.size());
        if (n_cats < 2) continue;
        int new_cat = std::uniform_int_distribution<int>(0, n_cats - 2)(rng);
        if (new_cat >= old_cat) ++new_cat;

        auto delta_for = [&](int cat, double change) {
            double before = std::abs(observed[k][cat] - expected[k][cat]);
            double after = std::abs(observed[k][cat] + change - expected[k][cat]);
            return after - before;
        };
        double delta = delta_for(old_cat, -1.0) + delta_for(new_cat, +1.0);

        bool accept = delta <= 0 ||
                      uniform01(rng) < std::exp(-delta / std::max(temperature, 1e-12));
        if (accept) {
            observed[k][old_cat] -= 1.0;
            observed[k][new_cat] += 1.0;
            // rewrite the record's tuple index for the changed variable
            std::int64_t stride = 1;
            for (size_t j = k + 1; j < schema.size(); ++j)
                stride *= static_cast<std::int64_t>(schema.var(static_cast<int>(j)).categories.size());
            pop.records[r] = static_cast<std::uint64_t>(
                static_cast<std::int64_t>(pop.records[r]) + (new_cat - old_cat) * stride);
            current_tae += delta;
            if (current_tae < best_tae) {
                best_tae = current_tae;
                best_records = pop.records;
            }
        }
        temperature *= params.cooling;
    }
    return population_from_records(schema, std::move(best_records));
}

} // namespace gensyn
