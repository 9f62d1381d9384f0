#pragma once

#include "gensyn/apportion.hpp"
#include "gensyn/csv.hpp"
#include "gensyn/distribution.hpp"
#include "gensyn/errors.hpp"
#include "gensyn/schema.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gensyn {

/// Individual-level synthetic population: N_pop records of K categories,
/// plus the per-tuple prevalence counts they expand from.
struct SyntheticPopulation {
    const Schema *schema = nullptr;
    std::vector<std::uint64_t> records; // flat tuple index per individual
    std::map<std::uint64_t, long long> prevalence;

    long long size() const { return static_cast<long long>(records.size()); }

    /// Observed category counts per variable.
    std::vector<std::vector<double>> category_counts() const {
        TupleSpace space(*schema);
        std::vector<std::vector<double>> counts(schema->size());
        for (size_t k = 0; k < schema->size(); ++k)
            counts[k].assign(schema->var(static_cast<int>(k)).categories.size(), 0.0);
        for (const auto &[idx, n] : prevalence)
            for (size_t k = 0; k < schema->size(); ++k)
                counts[k][space.category_of(idx, static_cast<int>(k))] +=
                    static_cast<double>(n);
        return counts;
    }

    TupleDistribution empirical() const {
        TupleDistribution d(*schema);
        double n = static_cast<double>(records.size());
        for (const auto &[idx, c] : prevalence) d.add(idx, static_cast<double>(c) / n);
        return d;
    }
};

inline SyntheticPopulation population_from_records(const Schema &schema,
                                                   std::vector<std::uint64_t> records) {
    SyntheticPopulation pop;
    pop.schema = &schema;
    pop.records = std::move(records);
    for (auto idx : pop.records) pop.prevalence[idx] += 1;
    return pop;
}

/// Expands final weights into exactly N_pop records: prevalence is the
/// largest-remainder rounding of w_i * N_pop, and each tuple is replicated
/// prevalence times in flat-index order.
inline SyntheticPopulation expand(const TupleDistribution &w, long long n_pop) {
    if (n_pop < 1) throw DataError("population size must be >= 1");
    std::vector<std::uint64_t> indices;
    std::vector<double> weights;
    for (const auto &[idx, prob] : w.support()) {
        indices.push_back(idx);
        weights.push_back(prob);
    }
    auto counts = largest_remainder(weights, n_pop);

    SyntheticPopulation pop;
    pop.schema = &w.schema();
    pop.records.reserve(static_cast<size_t>(n_pop));
    for (size_t i = 0; i < indices.size(); ++i) {
        if (counts[i] <= 0) continue;
        pop.prevalence[indices[i]] = counts[i];
        for (long long r = 0; r < counts[i]; ++r) pop.records.push_back(indices[i]);
    }
    return pop;
}

/// Output CSV: one row per individual, columns are the variable names.
inline void write_population_csv(const std::string &path, const SyntheticPopulation &pop) {
    const Schema &schema = *pop.schema;
    TupleSpace space(schema);
    csv::Writer w(path);
    std::vector<std::string> header;
    for (const auto &v : schema.variables()) header.push_back(v.name);
    w.row(header);
    std::vector<std::string> row(schema.size());
    for (auto idx : pop.records) {
        auto cats = space.unflatten(idx);
        for (size_t k = 0; k < schema.size(); ++k)
            row[k] = schema.var(static_cast<int>(k)).categories[cats[k]];
        w.row(row);
    }
}

} // namespace gensyn
