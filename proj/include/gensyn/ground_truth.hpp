#pragma once

#include "gensyn/conditional.hpp"
#include "gensyn/dependency_graph.hpp"
#include "gensyn/distribution.hpp"
#include "gensyn/errors.hpp"
#include "gensyn/ingest.hpp"
#include "gensyn/rng.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/synthesis.hpp"
#include "gensyn/tables.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gensyn {

/// Pairwise association injected into the synthetic truth. `gamma` is the
/// log-tilt applied to tuples carrying both categories; `comove` scales how
/// strongly the pair's shares co-move across auxiliary locations.
struct TiltSpec {
    int var_a = -1, cat_a = -1;
    int var_b = -1, cat_b = -1;
    double gamma = 0.0;
    double comove = 4.0;
};

/// Recipe for a synthetic ground truth that substitutes for individual-level
/// validation data: a DAG-factorized joint with injected tilts, expanded to
/// a population, from which the macro tables are recounted.
struct GroundTruthSpec {
    std::shared_ptr<Schema> schema;
    long long n_pop = 5000;
    int aux_locations = 10;
    double perturbation = 0.05;
    double concentration = 2.0; // CPT Dirichlet concentration
    // tuple-level log-normal reweighting of each location's joint, scaled by
    // perturbation; adds incoherent location texture
    double tuple_noise = 2.0;
    // how strongly the locations vary in association strength: each location
    // tilts the truth along its own log-odds-vs-independence direction, so
    // the location marginals co-move along every dependency the truth
    // carries (scaled by perturbation)
    double association_comove = 12.0;
    std::vector<TiltSpec> tilts;
    std::map<int, std::map<int, double>> prevalence_targets; // var -> cat -> share
    std::optional<std::string> explicit_joint_csv;
};

struct GroundTruth {
    std::shared_ptr<Schema> schema;
    TupleDistribution truth; // empirical distribution of the truth population
    SyntheticPopulation population;
    MarginalTables d1;
    ConditionalTables d2;
    AuxiliaryMatrix d3; // rows are proportions
};

namespace detail {

/// Random DAG-factorized joint: Dirichlet-like CPT rows via gamma draws,
/// assembled with the conditional chain in declared order.
inline TupleDistribution random_dag_joint(const Schema &schema, double concentration, Rng &rng) {
    DependencyGraph graph = build_graph(schema);
    std::gamma_distribution<double> gamma_draw(concentration, 1.0);

    MarginalTables d1(schema.size());
    for (size_t k = 0; k < schema.size(); ++k) {
        UnivariateTable t;
        t.variable = static_cast<int>(k);
        t.counts.resize(schema.var(static_cast<int>(k)).categories.size());
        for (auto &c : t.counts) c = gamma_draw(rng);
        d1.by_var[k] = std::move(t);
    }

    ConditionalTables d2;
    for (size_t k = 0; k < schema.size(); ++k) {
        const auto &parents = schema.parents(static_cast<int>(k));
        if (parents.empty()) continue;
        ConditionalTable t(schema, static_cast<int>(k), parents);
        size_t p1n = schema.var(parents[0]).categories.size();
        size_t p2n = parents.size() == 2 ? schema.var(parents[1]).categories.size() : 1;
        for (size_t a = 0; a < p1n; ++a)
            for (size_t b = 0; b < p2n; ++b)
                for (size_t c = 0; c < t.child_size(); ++c)
                    t.cell(static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)) =
                        gamma_draw(rng);
        d2.tables.push_back(std::move(t));
    }

    auto order = order_variables(schema, graph, d1, OrderMode::Declared);
    return run_chain(schema, graph, order, d1, d2, 0.0);
}

inline void apply_tilts(TupleDistribution &joint, const std::vector<TiltSpec> &tilts) {
    if (tilts.empty()) return;
    TupleSpace space(joint.schema());
    for (auto &[idx, p] : joint.support())
        for (const auto &t : tilts) {
            if (t.gamma == 0.0) continue;
            if (space.category_of(idx, t.var_a) == t.cat_a &&
                space.category_of(idx, t.var_b) == t.cat_b)
                p *= std::exp(t.gamma);
        }
    joint.normalize();
}

/// Rescales the total mass of one category to the requested share.
inline void apply_prevalence_target(TupleDistribution &joint, int var, int cat, double target) {
    TupleSpace space(joint.schema());
    double current = 0.0;
    for (const auto &[idx, p] : joint.support())
        if (space.category_of(idx, var) == cat) current += p;
    if (current <= 0.0 || current >= 1.0)
        throw DataError("prevalence target needs the category mass in (0,1)");
    double in_scale = target / current;
    double out_scale = (1.0 - target) / (1.0 - current);
    for (auto &[idx, p] : joint.support())
        p *= space.category_of(idx, var) == cat ? in_scale : out_scale;
    joint.normalize();
}

} // namespace detail

/// Builds the ground truth: joint -> rounded population -> macro tables.
/// D1/D2 are exact recounts of the population. D3 rows are the marginals of
/// location-tilted copies of the truth with multiplicative noise at the
/// perturbation scale; at perturbation 0 every row equals the truth
/// proportions exactly.
inline GroundTruth make_ground_truth(const GroundTruthSpec &spec, std::uint64_t seed) {
    if (!spec.schema) throw ConfigError("ground-truth spec has no schema");
    const Schema &schema = *spec.schema;
    Rng rng = make_rng(seed, 101);

    TupleDistribution joint =
        spec.explicit_joint_csv
            ? TupleDistribution::load_csv(*spec.explicit_joint_csv, schema)
            : detail::random_dag_joint(schema, spec.concentration, rng);
    joint.normalize();
    detail::apply_tilts(joint, spec.tilts);
    for (const auto &[var, cats] : spec.prevalence_targets)
        for (const auto &[cat, share] : cats)
            detail::apply_prevalence_target(joint, var, cat, share);

    GroundTruth gt;
    gt.schema = spec.schema;
    gt.population = expand(joint, spec.n_pop);
    gt.truth = gt.population.empirical();

    // D1: exact population counts
    gt.d1 = MarginalTables(schema.size());
    auto counts = gt.population.category_counts();
    for (size_t k = 0; k < schema.size(); ++k) {
        UnivariateTable t;
        t.variable = static_cast<int>(k);
        t.counts = counts[k];
        gt.d1.by_var[k] = std::move(t);
    }

    // D2: exact population cross-tabs along the declared conditioning
    TupleSpace space(schema);
    for (size_t k = 0; k < schema.size(); ++k) {
        const auto &parents = schema.parents(static_cast<int>(k));
        if (parents.empty()) continue;
        ConditionalTable t(schema, static_cast<int>(k), parents);
        for (const auto &[idx, n] : gt.population.prevalence) {
            int p1 = space.category_of(idx, parents[0]);
            int p2 = parents.size() == 2 ? space.category_of(idx, parents[1]) : 0;
            t.cell(p1, p2, space.category_of(idx, static_cast<int>(k))) +=
                static_cast<double>(n);
        }
        gt.d2.tables.push_back(std::move(t));
    }

    // D3: location-level tilted marginals
    size_t m = component_count(schema);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // log-odds of the truth against the independence product: the direction
    // along which locations strengthen or weaken every dependency at once
    std::map<std::uint64_t, double> log_odds;
    {
        std::vector<std::vector<double>> marginals(schema.size());
        for (size_t k = 0; k < schema.size(); ++k)
            marginals[k].assign(schema.var(static_cast<int>(k)).categories.size(), 0.0);
        for (const auto &[idx, p] : gt.truth.support())
            for (size_t k = 0; k < schema.size(); ++k)
                marginals[k][space.category_of(idx, static_cast<int>(k))] += p;
        for (const auto &[idx, p] : gt.truth.support()) {
            double prod = 1.0;
            for (size_t k = 0; k < schema.size(); ++k)
                prod *= marginals[k][space.category_of(idx, static_cast<int>(k))];
            log_odds[idx] = std::clamp(std::log(p / prod), -3.0, 3.0);
        }
    }

    for (int l = 0; l < spec.aux_locations; ++l) {
        std::vector<double> z(spec.tilts.size());
        for (auto &v : z) v = gauss(rng);
        double assoc_strength = spec.association_comove * spec.perturbation * gauss(rng);

        std::vector<double> row(m, 0.0);
        std::vector<size_t> offsets(schema.size(), 0);
        {
            size_t off = 0;
            for (size_t k = 0; k < schema.size(); ++k) {
                offsets[k] = off;
                off += schema.var(static_cast<int>(k)).categories.size();
            }
        }
        double noise_scale = spec.tuple_noise * spec.perturbation;
        for (const auto &[idx, p] : gt.truth.support()) {
            double tilt = assoc_strength * log_odds[idx];
            for (size_t r = 0; r < spec.tilts.size(); ++r) {
                const auto &t = spec.tilts[r];
                double hit = 0.0;
                if (space.category_of(idx, t.var_a) == t.cat_a) hit += 1.0;
                if (space.category_of(idx, t.var_b) == t.cat_b) hit += 1.0;
                tilt += z[r] * t.comove * spec.perturbation * hit;
            }
            if (noise_scale > 0) tilt += noise_scale * gauss(rng);
            double w = p * std::exp(tilt);
            for (size_t k = 0; k < schema.size(); ++k)
                row[offsets[k] + space.category_of(idx, static_cast<int>(k))] += w;
        }
        // per-variable normalization, then component noise
        for (size_t k = 0; k < schema.size(); ++k) {
            size_t len = schema.var(static_cast<int>(k)).categories.size();
            double block = 0.0;
            for (size_t c = 0; c < len; ++c) block += row[offsets[k] + c];
            for (size_t c = 0; c < len; ++c) {
                double noise = 1.0 + spec.perturbation * gauss(rng);
                double v = row[offsets[k] + c] / block * std::max(0.0, noise);
                row[offsets[k] + c] = v;
            }
        }
        gt.d3.locations.push_back("aux" + std::to_string(l));
        gt.d3.values.push_back(std::move(row));
    }
    return gt;
}

/// Writes the generated truth plus a ready-to-run config into a directory.
inline void write_ground_truth(const std::string &dir, const GroundTruth &gt,
                               const GroundTruthSpec &spec, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const Schema &schema = *gt.schema;
    write_schema(dir + "/schema.cfg", schema);
    write_d1(dir + "/d1.csv", schema, gt.d1);
    write_d2(dir + "/d2.csv", schema, gt.d2);
    write_d3(dir + "/d3.csv", schema, gt.d3);
    gt.truth.dump_csv(dir + "/reference_distribution.csv");
    write_population_csv(dir + "/truth_population.csv", gt.population);

    std::ofstream run(dir + "/run.cfg");
    run << "[run]\n";
    run << "schema = schema.cfg\n";
    run << "d1 = d1.csv\nd2 = d2.csv\nd3 = d3.csv\n";
    run << "reference = reference_distribution.csv\n";
    run << "n_pop = " << spec.n_pop << "\n";
    run << "seed = " << seed << "\n";
    run << "methods = all\n";
    run << "output_dir = out\n";
}

} // namespace gensyn
