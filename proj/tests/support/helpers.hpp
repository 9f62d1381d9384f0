#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately avoid the library's computation paths.

#include "gensyn/distribution.hpp"
#include "gensyn/ground_truth.hpp"
#include "gensyn/maxent.hpp"
#include "gensyn/rng.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/tables.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace testutil {

inline gensyn::Variable make_var(const std::string &name, int n_cats,
                                 const std::string &source = "test") {
    gensyn::Variable v;
    v.name = name;
    v.source = source;
    for (int i = 0; i < n_cats; ++i) v.categories.push_back(name.substr(0, 1) + std::to_string(i));
    return v;
}

/// Two unconditioned binary variables.
inline gensyn::Schema binary_pair_schema() {
    return gensyn::Schema({make_var("a", 2), make_var("b", 2)}, {{}, {}});
}

/// The 8-variable demographic schema with category sizes
/// 16/2/5/7/3/2/2/3 and the reference conditioning structure.
inline gensyn::Schema acs_schema() {
    std::vector<gensyn::Variable> vars = {
        make_var("age", 16),       make_var("gender", 2),     make_var("marital", 5),
        make_var("education", 7),  make_var("employment", 3), make_var("poverty", 2),
        make_var("nativity", 2),   make_var("mobility", 3)};
    std::vector<std::vector<std::string>> cond(8);
    cond[0] = {"gender"};
    cond[1] = {"age"};
    cond[2] = {"age", "gender"};
    cond[3] = {"age", "gender"};
    cond[4] = {"age", "gender"};
    cond[5] = {"gender", "employment"};
    cond[6] = {"age"};
    cond[7] = {"education"};
    return gensyn::Schema(std::move(vars), std::move(cond));
}

/// The 9-variable combined (multi-source) schema: 16/2/5/7/3/2/2/2/2.
inline gensyn::Schema combined_schema() {
    std::vector<gensyn::Variable> vars = {
        make_var("age", 16),       make_var("gender", 2),     make_var("marital", 5),
        make_var("education", 7),  make_var("employment", 3), make_var("poverty", 2),
        make_var("insurance", 2),  make_var("opioid", 2),     make_var("veteran", 2)};
    std::vector<std::vector<std::string>> cond(9);
    cond[0] = {"gender"};
    cond[1] = {"age"};
    cond[2] = {"age", "gender"};
    cond[3] = {"age", "gender"};
    cond[4] = {"age", "gender"};
    cond[5] = {"gender", "employment"};
    cond[6] = {"gender"};
    cond[7] = {"age"};
    cond[8] = {"gender"};
    return gensyn::Schema(std::move(vars), std::move(cond));
}

/// Five-variable evaluation schema. The (marital, poverty) pair is linked by
/// no conditional table, so its association can only come from the
/// auxiliary-location signal.
inline std::shared_ptr<gensyn::Schema> harness_schema() {
    std::vector<gensyn::Variable> vars;
    {
        gensyn::Variable v;
        v.name = "age";
        v.categories = {"young", "mid", "old"};
        vars.push_back(v);
        v = {};
        v.name = "gender";
        v.categories = {"male", "female"};
        vars.push_back(v);
        v = {};
        v.name = "employment";
        v.categories = {"employed", "unemployed", "retired"};
        vars.push_back(v);
        v = {};
        v.name = "marital";
        v.categories = {"single", "married", "divorced", "separated"};
        vars.push_back(v);
        v = {};
        v.name = "poverty";
        v.categories = {"below", "above"};
        vars.push_back(v);
    }
    std::vector<std::vector<std::string>> cond(5);
    cond[0] = {"gender"};
    cond[1] = {"age"};
    cond[2] = {"age", "gender"};
    cond[3] = {"age"};
    cond[4] = {"gender", "employment"};
    return std::make_shared<gensyn::Schema>(std::move(vars), std::move(cond));
}

/// Standard harness recipe: hidden (divorced, below-poverty) association plus
/// a couple of co-moving pairs the auxiliary locations can see, and a rare
/// marital category at 0.5% prevalence.
inline gensyn::GroundTruthSpec harness_spec(long long n_pop = 5000, int aux_locations = 10,
                                            double perturbation = 0.05) {
    gensyn::GroundTruthSpec spec;
    spec.schema = harness_schema();
    spec.n_pop = n_pop;
    spec.aux_locations = aux_locations;
    spec.perturbation = perturbation;
    spec.concentration = 2.0;
    const gensyn::Schema &s = *spec.schema;
    auto tilt = [&](const char *va, const char *ca, const char *vb, const char *cb, double gamma,
                    double comove) {
        gensyn::TiltSpec t;
        t.var_a = s.index_of(va);
        t.cat_a = s.var(t.var_a).category_index(ca);
        t.var_b = s.index_of(vb);
        t.cat_b = s.var(t.var_b).category_index(cb);
        t.gamma = gamma;
        t.comove = comove;
        spec.tilts.push_back(t);
    };
    tilt("marital", "divorced", "poverty", "below", 1.3, 8.0); // hidden pair
    tilt("employment", "unemployed", "poverty", "below", 0.0, 5.0);
    tilt("age", "old", "employment", "retired", 0.0, 5.0);
    spec.prevalence_targets[s.index_of("marital")]
                           [s.var(s.index_of("marital")).category_index("separated")] = 0.005;
    return spec;
}

/// Fresh scratch directory under the test working directory.
inline std::string scratch_dir(const std::string &name) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path("scratch") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

/// Second, direct implementation of the unbiased sample covariance.
inline Eigen::MatrixXd covariance_oracle(const std::vector<std::vector<double>> &rows) {
    size_t n = rows.size(), m = rows[0].size();
    std::vector<double> mean(m, 0.0);
    for (const auto &r : rows)
        for (size_t j = 0; j < m; ++j) mean[j] += r[j] / static_cast<double>(n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                static_cast<Eigen::Index>(m));
    for (const auto &r : rows)
        for (size_t a = 0; a < m; ++a)
            for (size_t b = 0; b < m; ++b)
                cov(a, b) += (r[a] - mean[a]) * (r[b] - mean[b]) / static_cast<double>(n - 1);
    return cov;
}

/// Spearman rank correlation (no tie correction; inputs are continuous).
inline double spearman(const std::vector<double> &a, const std::vector<double> &b) {
    auto ranks = [](const std::vector<double> &v) {
        std::vector<size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    auto ra = ranks(a), rb = ranks(b);
    double n = static_cast<double>(a.size());
    double mean = (n - 1.0) / 2.0;
    double num = 0, da = 0, db = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - mean) * (rb[i] - mean);
        da += (ra[i] - mean) * (ra[i] - mean);
        db += (rb[i] - mean) * (rb[i] - mean);
    }
    return num / std::sqrt(da * db);
}

/// A random feasible refinement instance: random prior over a random
/// sub-support, with constraint targets taken from the marginals of a
/// second random distribution on the same support.
struct MaxentInstance {
    std::shared_ptr<gensyn::Schema> schema;
    gensyn::TupleDistribution u;
    gensyn::ConstraintSet constraints;
};

inline MaxentInstance make_random_maxent_instance(gensyn::Rng &rng) {
    using namespace gensyn;
    int k = 2 + static_cast<int>(rng() % 2);
    std::vector<Variable> vars;
    int j_total = 0;
    for (int v = 0; v < k; ++v) {
        int cats = 2 + static_cast<int>(rng() % 3);
        if (j_total + cats > 12) cats = 2;
        j_total += cats;
        vars.push_back(make_var("v" + std::to_string(v), cats));
    }
    MaxentInstance inst;
    inst.schema = std::make_shared<Schema>(vars, std::vector<std::vector<std::string>>(k));
    const Schema &schema = *inst.schema;
    TupleSpace space(schema);

    TupleDistribution u(schema), v(schema);
    for (std::uint64_t i = 0; i < space.size(); ++i) {
        if (uniform01(rng) < 0.3 && space.size() > 4) continue; // sparsify
        u.add(i, uniform01(rng) + 1e-3);
        v.add(i, uniform01(rng) + 1e-3);
    }
    if (u.support_size() < 2) {
        u.add(0, 1.0);
        u.add(1, 1.0);
        v.add(0, 1.0);
        v.add(1, 2.0);
    }
    u.normalize();
    v.normalize();
    inst.u = u;

    // feasible targets: marginals of v (which lives on the same support)
    std::vector<Constraint> cs;
    for (size_t var = 0; var < schema.size(); ++var) {
        std::vector<double> marginal(schema.var(static_cast<int>(var)).categories.size(), 0.0);
        for (const auto &[idx, p] : v.support())
            marginal[space.category_of(idx, static_cast<int>(var))] += p;
        for (size_t c = 0; c < marginal.size(); ++c)
            cs.push_back({static_cast<int>(var), static_cast<int>(c), marginal[c]});
    }
    inst.constraints = ConstraintSet(schema, std::move(cs));
    return inst;
}

/// Central finite differences of the dual objective.
inline Eigen::VectorXd fd_gradient(const gensyn::TupleDistribution &u,
                                   const gensyn::ConstraintSet &constraints,
                                   const Eigen::VectorXd &theta, double h = 1e-6) {
    Eigen::VectorXd g(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(j) += h;
        tm(j) -= h;
        double fp = gensyn::dual_objective(tp, u, constraints).first;
        double fm = gensyn::dual_objective(tm, u, constraints).first;
        g(j) = (fp - fm) / (2 * h);
    }
    return g;
}

/// Linear system (A, b) of the instance's constraints over the support in
/// iteration order, with the unit-mass row appended.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> constraint_system(
    const gensyn::TupleDistribution &u, const gensyn::ConstraintSet &constraints) {
    gensyn::TupleSpace space(u.schema());
    const auto &cs = constraints.constraints();
    const auto n = static_cast<Eigen::Index>(u.support_size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cs.size()) + 1, n);
    Eigen::VectorXd b(static_cast<Eigen::Index>(cs.size()) + 1);
    Eigen::Index col = 0;
    for (const auto &[idx, p] : u.support()) {
        (void)p;
        for (size_t j = 0; j < cs.size(); ++j)
            if (space.category_of(idx, cs[j].var) == cs[j].cat)
                a(static_cast<Eigen::Index>(j), col) = 1.0;
        a(static_cast<Eigen::Index>(cs.size()), col) = 1.0;
        ++col;
    }
    for (size_t j = 0; j < cs.size(); ++j) b(static_cast<Eigen::Index>(j)) = cs[j].eta;
    b(static_cast<Eigen::Index>(cs.size())) = 1.0;
    return {a, b};
}

/// Direct primal minimization of sum_i w_i log(w_i / u_i) subject to
/// A w = b and w >= 0, by pattern search over the constraint nullspace.
/// Exact enough for supports <= 6; independent of the dual solver.
inline std::vector<double> primal_oracle(const std::vector<double> &u,
                                         const Eigen::MatrixXd &a, const Eigen::VectorXd &b) {
    const auto n = a.cols();
    Eigen::VectorXd w0 = a.completeOrthogonalDecomposition().solve(b);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    Eigen::MatrixXd kernel = lu.kernel();
    const auto d = kernel.cols();

    auto objective = [&](const Eigen::VectorXd &w) {
        double f = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (w(i) < -1e-12) return std::numeric_limits<double>::infinity();
            double wi = std::max(0.0, w(i));
            if (wi > 0) {
                if (u[static_cast<size_t>(i)] <= 0)
                    return std::numeric_limits<double>::infinity();
                f += wi * std::log(wi / u[static_cast<size_t>(i)]);
            }
        }
        return f;
    };

    Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd best_w = w0;
    double best_f = objective(best_w);
    double radius = 1.0;
    // kernel may be zero-dimensional: the constraints pin w completely
    while (radius > 1e-13 && d > 0) {
        bool improved = false;
        // full {-r,0,r}^d neighborhood
        std::vector<int> digits(static_cast<size_t>(d), 0);
        int total = 1;
        for (Eigen::Index i = 0; i < d; ++i) total *= 3;
        for (int t = 0; t < total; ++t) {
            int rem = t;
            Eigen::VectorXd step(d);
            for (Eigen::Index i = 0; i < d; ++i) {
                step(i) = static_cast<double>(rem % 3 - 1) * radius;
                rem /= 3;
            }
            if (step.isZero()) continue;
            Eigen::VectorXd cand = c + step;
            Eigen::VectorXd w = w0 + kernel * cand;
            double f = objective(w);
            if (f < best_f - 1e-18) {
                best_f = f;
                best_w = w;
                c = cand;
                improved = true;
            }
        }
        if (!improved) radius *= 0.5;
    }
    std::vector<double> out(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<size_t>(i)] = std::max(0.0, best_w(i));
    double mass = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto &w : out) w /= mass;
    return out;
}

} // namespace testutil
