#pragma once

#include "gensyn/distribution.hpp"
#include "gensyn/errors.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/synthesis.hpp"

#include <cmath>
#include <vector>

namespace gensyn {

/// Total absolute error between observed and expected category counts,
/// summed over every variable and category.
inline double tae(const std::vector<std::vector<double>> &observed,
                  const std::vector<std::vector<double>> &expected) {
    if (observed.size() != expected.size())
        throw DataError("TAE inputs cover different variable sets");
    double total = 0.0;
    for (size_t k = 0; k < observed.size(); ++k) {
        if (observed[k].size() != expected[k].size())
            throw DataError("TAE inputs have misaligned categories for variable " +
                            std::to_string(k));
        for (size_t c = 0; c < observed[k].size(); ++c)
            total += std::abs(observed[k][c] - expected[k][c]);
    }
    return total;
}

inline std::vector<double> per_variable_tae(const std::vector<std::vector<double>> &observed,
                                            const std::vector<std::vector<double>> &expected) {
    std::vector<double> out(observed.size(), 0.0);
    for (size_t k = 0; k < observed.size(); ++k)
        for (size_t c = 0; c < observed[k].size(); ++c)
            out[k] += std::abs(observed[k][c] - expected[k][c]);
    return out;
}

/// KL divergence D(P || Q) in nats. Q receives epsilon smoothing on every
/// cell of the reference support and is renormalized, so missing tuples in
/// Q stay finite.
inline double kl_divergence(const TupleDistribution &p, const TupleDistribution &q,
                            double epsilon = 1e-9) {
    if (!detail::same_schema(p.schema(), q.schema()))
        throw DataError("KL inputs use different schemas");
    double q_mass = q.mass() + epsilon * static_cast<double>(p.support_size());
    double kl = 0.0;
    for (const auto &[idx, pv] : p.support()) {
        if (pv <= 0) continue;
        double qv = (q.at(idx) + epsilon) / q_mass;
        kl += pv * std::log(pv / qv);
    }
    return kl;
}

/// Weighted two-way contingency table between two variables.
inline std::vector<std::vector<double>> contingency_table(const TupleDistribution &dist,
                                                          int var_a, int var_b) {
    const Schema &schema = dist.schema();
    TupleSpace space(schema);
    size_t ra = schema.var(var_a).categories.size();
    size_t rb = schema.var(var_b).categories.size();
    std::vector<std::vector<double>> table(ra, std::vector<double>(rb, 0.0));
    for (const auto &[idx, w] : dist.support())
        table[space.category_of(idx, var_a)][space.category_of(idx, var_b)] += w;
    return table;
}

/// Cramer's V from a (weighted) contingency table:
/// sqrt(chi^2 / (n * min(r-1, c-1))) over the observed nonzero margins.
/// A single observed category on either side gives 0.
inline double cramers_v(const std::vector<std::vector<double>> &table) {
    size_t ra = table.size();
    if (ra == 0) return 0.0;
    size_t rb = table[0].size();
    std::vector<double> row_tot(ra, 0.0), col_tot(rb, 0.0);
    double n = 0.0;
    for (size_t a = 0; a < ra; ++a)
        for (size_t b = 0; b < rb; ++b) {
            row_tot[a] += table[a][b];
            col_tot[b] += table[a][b];
            n += table[a][b];
        }
    if (n <= 0) return 0.0;
    int r_obs = 0, c_obs = 0;
    for (double t : row_tot) r_obs += t > 0 ? 1 : 0;
    for (double t : col_tot) c_obs += t > 0 ? 1 : 0;
    int dof = std::min(r_obs - 1, c_obs - 1);
    if (dof <= 0) return 0.0;
    double chi2 = 0.0;
    for (size_t a = 0; a < ra; ++a)
        for (size_t b = 0; b < rb; ++b) {
            if (row_tot[a] <= 0 || col_tot[b] <= 0) continue;
            double expected = row_tot[a] * col_tot[b] / n;
            double diff = table[a][b] - expected;
            chi2 += diff * diff / expected;
        }
    double v = std::sqrt(chi2 / (n * static_cast<double>(dof)));
    return std::min(1.0, v);
}

inline double cramers_v(const TupleDistribution &dist, int var_a, int var_b) {
    return cramers_v(contingency_table(dist, var_a, var_b));
}

inline double cramers_v(const SyntheticPopulation &pop, int var_a, int var_b) {
    return cramers_v(contingency_table(pop.empirical(), var_a, var_b));
}

/// K x K symmetric matrix of pairwise Cramer's V values, unit diagonal.
struct AssociationMatrix {
    std::vector<std::vector<double>> values;

    size_t size() const { return values.size(); }
    double at(size_t i, size_t j) const { return values[i][j]; }
};

inline AssociationMatrix association_matrix(const TupleDistribution &dist) {
    size_t k = dist.schema().size();
    AssociationMatrix m;
    m.values.assign(k, std::vector<double>(k, 1.0));
    for (size_t a = 0; a < k; ++a)
        for (size_t b = a + 1; b < k; ++b) {
            double v = cramers_v(dist, static_cast<int>(a), static_cast<int>(b));
            m.values[a][b] = v;
            m.values[b][a] = v;
        }
    return m;
}

inline AssociationMatrix association_matrix(const SyntheticPopulation &pop) {
    return association_matrix(pop.empirical());
}

/// Frobenius distance d(A,B) = sqrt(sum_ij (a_ij - b_ij)^2).
inline double frobenius_distance(const AssociationMatrix &a, const AssociationMatrix &b) {
    if (a.size() != b.size()) throw DataError("association matrices differ in dimension");
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a.size(); ++j) {
            double d = a.at(i, j) - b.at(i, j);
            sum += d * d;
        }
    return std::sqrt(sum);
}

} // namespace gensyn
