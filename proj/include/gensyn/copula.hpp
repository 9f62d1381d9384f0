#pragma once

#include "gensyn/apportion.hpp"
#include "gensyn/csv.hpp"
#include "gensyn/distribution.hpp"
#include "gensyn/errors.hpp"
#include "gensyn/rng.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/tables.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace gensyn {

/// Beta marginal for one categorical component, fitted by the method of
/// moments. A zero-variance component degenerates to a point mass.
struct BetaMarginal {
    int component = -1;
    double alpha = 1.0;
    double beta = 1.0;
    bool point_mass = false;
    double location = 0.0; // value of the point mass

    double mean() const { return point_mass ? location : alpha / (alpha + beta); }
    double variance() const {
        if (point_mass) return 0.0;
        double s = alpha + beta;
        return alpha * beta / (s * s * (s + 1.0));
    }

    /// Inverse CDF; monotone in u.
    double inv_cdf(double u) const {
        if (point_mass) return location;
        double uc = std::min(1.0 - 1e-15, std::max(1e-15, u));
        return boost::math::ibeta_inv(alpha, beta, uc);
    }
};

/// Method-of-moments fit: alpha/(alpha+beta) = mu and the beta variance
/// formula equal to var. Variances at or above mu(1-mu) are clamped to
/// 0.9*mu(1-mu); zero variance gives a point mass at mu.
inline BetaMarginal fit_beta(double mu, double var, int component = -1) {
    BetaMarginal m;
    m.component = component;
    if (var == 0.0) {
        m.point_mass = true;
        m.location = mu;
        return m;
    }
    if (mu <= 0.0 || mu >= 1.0)
        throw DataError("beta fit needs mean in (0,1), got " + std::to_string(mu));
    double cap = mu * (1.0 - mu);
    if (var >= cap) var = 0.9 * cap;
    double s = cap / var - 1.0; // alpha + beta
    m.alpha = mu * s;
    m.beta = (1.0 - mu) * s;
    return m;
}

/// Gaussian-copula specification: sample covariance of the normalized
/// auxiliary matrix plus per-component beta marginals.
struct CopulaSpec {
    Eigen::MatrixXd covariance; // raw sample covariance (symmetric)
    Eigen::MatrixXd factor;     // L with L L^T = repaired PSD covariance
    std::vector<BetaMarginal> marginals;
    int iterations = 20;
    int n_draw = 1;
};

/// Builds a spec from a known covariance: eigenvalues below 1e-10 are
/// lifted so the sampling factor exists even for indefinite or
/// rank-deficient input.
inline CopulaSpec make_copula_spec(Eigen::MatrixXd sigma, std::vector<BetaMarginal> marginals,
                                   int iterations = 20, int n_draw = 1) {
    CopulaSpec spec;
    spec.covariance = std::move(sigma);
    spec.marginals = std::move(marginals);
    spec.iterations = iterations;
    spec.n_draw = n_draw;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.covariance);
    if (eig.info() != Eigen::Success)
        throw NumericError("eigendecomposition of the covariance matrix failed");
    Eigen::VectorXd evals = eig.eigenvalues().cwiseMax(1e-10);
    spec.factor = eig.eigenvectors() * evals.cwiseSqrt().asDiagonal();
    return spec;
}

/// Fits the copula spec from a normalized auxiliary matrix: per-column
/// means/variances feed the beta marginals, the across-location sample
/// covariance (unbiased) becomes Sigma. Eigenvalues below 1e-10 are lifted
/// to 1e-10 before factorization so a sampling factor always exists.
inline CopulaSpec estimate_spec(const Schema &schema, const AuxiliaryMatrix &d3_normalized,
                                int iterations = 20, int n_draw = 1) {
    const size_t rows = d3_normalized.values.size();
    const size_t m = component_count(schema);
    if (rows < 2) throw DataError("covariance estimation needs at least 2 auxiliary locations");

    Eigen::MatrixXd data(rows, m);
    for (size_t l = 0; l < rows; ++l)
        for (size_t c = 0; c < m; ++c) data(l, c) = d3_normalized.values[l][c];

    Eigen::RowVectorXd mean = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - mean;
    Eigen::MatrixXd sigma =
        centered.transpose() * centered / static_cast<double>(rows - 1);
    sigma = ((sigma + sigma.transpose()) / 2.0).eval();

    // zero-variance columns become point masses; the variance threshold
    // swallows rounding residue from identical rows
    std::vector<BetaMarginal> marginals;
    for (size_t c = 0; c < m; ++c) {
        double var = sigma(c, c);
        marginals.push_back(fit_beta(mean(c), var <= 1e-18 ? 0.0 : var, static_cast<int>(c)));
    }
    return make_copula_spec(std::move(sigma), std::move(marginals), iterations, n_draw);
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Draws n rows of component values: Z ~ N(0, Sigma), u = Phi(Z) elementwise,
/// y_m = BetaInvCDF_m(u_m). No block normalization.
inline Eigen::MatrixXd draw_raw_components(const CopulaSpec &spec, int n, Rng &rng) {
    const auto m = spec.factor.rows();
    Eigen::MatrixXd y(n, m);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd g(m);
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) g(j) = gauss(rng);
        Eigen::VectorXd z = spec.factor * g;
        for (Eigen::Index j = 0; j < m; ++j)
            y(i, j) = spec.marginals[j].inv_cdf(normal_cdf(z(j)));
    }
    return y;
}

/// Same draw with each variable's category block renormalized to sum to 1,
/// so every row carries a per-variable probability vector.
inline Eigen::MatrixXd draw_component_probs(const Schema &schema, const CopulaSpec &spec,
                                            int n, Rng &rng) {
    Eigen::MatrixXd y = draw_raw_components(spec, n, rng);
    for (int i = 0; i < n; ++i) {
        Eigen::Index offset = 0;
        for (const auto &v : schema.variables()) {
            Eigen::Index len = static_cast<Eigen::Index>(v.categories.size());
            double s = y.row(i).segment(offset, len).sum();
            if (s > 0)
                y.row(i).segment(offset, len) /= s;
            else
                y.row(i).segment(offset, len).setConstant(1.0 / static_cast<double>(len));
            offset += len;
        }
    }
    return y;
}

/// Per-variable integer capacities summing to n, from the D1 proportions.
inline std::vector<std::vector<long long>> integerize_eta(const Schema &schema,
                                                          const MarginalTables &d1, long long n) {
    std::vector<std::vector<long long>> eta;
    for (size_t k = 0; k < schema.size(); ++k) {
        auto props = d1.require(schema, static_cast<int>(k)).proportions(schema);
        eta.push_back(largest_remainder(props, n));
    }
    return eta;
}

/// Assigns each profile a category per variable, drawn from that profile's
/// multinomial but constrained by the remaining marginal capacities. When a
/// drawn category is exhausted the draw is repeated over the categories with
/// remaining capacity (renormalized), which cannot deadlock because the
/// capacities sum to the number of profiles. Final counts equal eta exactly.
inline std::vector<std::vector<int>> match_marginals(const Schema &schema,
                                                     const Eigen::MatrixXd &y,
                                                     const std::vector<std::vector<long long>> &eta,
                                                     Rng &rng) {
    const int n = static_cast<int>(y.rows());
    auto caps = eta;
    std::vector<std::vector<int>> profiles(n, std::vector<int>(schema.size()));
    std::vector<double> restricted;
    for (int i = 0; i < n; ++i) {
        Eigen::Index offset = 0;
        for (size_t k = 0; k < schema.size(); ++k) {
            const auto len = static_cast<Eigen::Index>(schema.var(static_cast<int>(k))
                                                           .categories.size());
            restricted.assign(len, 0.0);
            for (Eigen::Index c = 0; c < len; ++c) restricted[c] = y(i, offset + c);
            int c = draw_categorical(rng, restricted);
            if (caps[k][c] <= 0) {
                for (Eigen::Index j = 0; j < len; ++j)
                    restricted[j] = caps[k][j] > 0 ? restricted[j] : 0.0;
                double s = 0;
                for (double w : restricted) s += w;
                if (s <= 0) // all remaining capacity sits on zero-probability cats
                    for (Eigen::Index j = 0; j < len; ++j)
                        restricted[j] = caps[k][j] > 0 ? 1.0 : 0.0;
                c = draw_categorical(rng, restricted);
            }
            caps[k][c] -= 1;
            profiles[i][static_cast<size_t>(k)] = c;
            offset += len;
        }
    }
    return profiles;
}

inline TupleDistribution empirical_distribution(const Schema &schema,
                                                const std::vector<std::vector<int>> &profiles) {
    TupleSpace space(schema);
    TupleDistribution d(schema);
    double w = 1.0 / static_cast<double>(profiles.size());
    for (const auto &prof : profiles) d.add(space.flat_index(prof), w);
    return d;
}

/// Copula estimate p2: `it` rounds of draw + marginal matching, averaged.
inline TupleDistribution estimate_p2(const Schema &schema, const CopulaSpec &spec,
                                     const std::vector<std::vector<long long>> &eta, int it,
                                     Rng &rng) {
    if (it < 1) throw DataError("copula iterations must be >= 1");
    TupleDistribution p2(schema);
    for (int i = 0; i < it; ++i) {
        Eigen::MatrixXd y = draw_component_probs(schema, spec, spec.n_draw, rng);
        auto profiles = match_marginals(schema, y, eta, rng);
        TupleDistribution pi = empirical_distribution(schema, profiles);
        for (const auto &[idx, prob] : pi.support()) p2.add(idx, prob / it);
    }
    p2.normalize();
    return p2;
}

/// Diagnostics: fitted marginals and the covariance matrix as CSV.
inline void dump_copula_diagnostics(const std::string &marginals_path,
                                    const std::string &sigma_path, const Schema &schema,
                                    const CopulaSpec &spec) {
    auto labels = component_labels(schema);
    {
        csv::Writer w(marginals_path);
        w.row({"component", "alpha", "beta", "point_mass", "mean"});
        for (size_t c = 0; c < spec.marginals.size(); ++c) {
            const auto &m = spec.marginals[c];
            w.row({labels[c], csv::format_double(m.alpha), csv::format_double(m.beta),
                   m.point_mass ? "1" : "0", csv::format_double(m.mean())});
        }
    }
    {
        csv::Writer w(sigma_path);
        std::vector<std::string> header{"component"};
        for (const auto &l : labels) header.push_back(l);
        w.row(header);
        for (Eigen::Index r = 0; r < spec.covariance.rows(); ++r) {
            std::vector<std::string> row{labels[static_cast<size_t>(r)]};
            for (Eigen::Index c = 0; c < spec.covariance.cols(); ++c)
                row.push_back(csv::format_double(spec.covariance(r, c)));
            w.row(row);
        }
    }
}

} // namespace gensyn
