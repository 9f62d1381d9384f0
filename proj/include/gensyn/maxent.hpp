#pragma once

#include "gensyn/csv.hpp"
#include "gensyn/distribution.hpp"
#include "gensyn/errors.hpp"
#include "gensyn/lbfgs.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/tables.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace gensyn {

/// One marginal constraint: the weighted share of tuples with
/// var == cat must equal eta.
struct Constraint {
    int var = -1;
    int cat = -1;
    double eta = 0.0;
};

/// The J = sum_k |c_k| indicator constraints. Per variable the targets sum
/// to 1 and every (variable, category) pair appears at most once.
class ConstraintSet {
  public:
    ConstraintSet() = default;
    ConstraintSet(const Schema &schema, std::vector<Constraint> constraints)
        : schema_(&schema), constraints_(std::move(constraints)) {
        std::vector<double> totals(schema.size(), 0.0);
        std::vector<std::vector<bool>> seen(schema.size());
        for (size_t k = 0; k < schema.size(); ++k)
            seen[k].assign(schema.var(static_cast<int>(k)).categories.size(), false);
        for (const auto &c : constraints_) {
            if (c.eta < 0 || c.eta > 1)
                throw DataError("constraint target outside [0,1]");
            if (seen[c.var][c.cat])
                throw DataError("duplicate constraint for " + schema.var(c.var).name + ":" +
                                schema.var(c.var).categories[c.cat]);
            seen[c.var][c.cat] = true;
            totals[c.var] += c.eta;
        }
        for (size_t k = 0; k < schema.size(); ++k)
            if (totals[k] != 0.0 && std::abs(totals[k] - 1.0) > 1e-9)
                throw DataError("constraint targets for " + schema.var(static_cast<int>(k)).name +
                                " sum to " + std::to_string(totals[k]) + ", expected 1");
    }

    const Schema &schema() const { return *schema_; }
    const std::vector<Constraint> &constraints() const { return constraints_; }
    size_t size() const { return constraints_.size(); }

  private:
    const Schema *schema_ = nullptr;
    std::vector<Constraint> constraints_;
};

/// One constraint per (variable, category) with the D1 proportion as target.
inline ConstraintSet build_constraints(const Schema &schema, const MarginalTables &d1) {
    std::vector<Constraint> cs;
    for (size_t k = 0; k < schema.size(); ++k) {
        auto props = d1.require(schema, static_cast<int>(k)).proportions(schema);
        for (size_t c = 0; c < props.size(); ++c)
            cs.push_back({static_cast<int>(k), static_cast<int>(c), props[c]});
    }
    return ConstraintSet(schema, std::move(cs));
}

/// Fused prior: the average of the chain and copula estimates over the
/// union of their supports.
inline TupleDistribution fuse_priors(const TupleDistribution &p1, const TupleDistribution &p2) {
    if (!detail::same_schema(p1.schema(), p2.schema()))
        throw DataError("cannot fuse distributions over different schemas");
    TupleDistribution p(p1.schema());
    for (const auto &[idx, v] : p1.support()) p.add(idx, v / 2.0);
    for (const auto &[idx, v] : p2.support()) p.add(idx, v / 2.0);
    p.normalize();
    return p;
}

/// Drops tuples with probability below tau and renormalizes the survivors.
/// tau = 0 is the identity; emptying the support is an error.
inline TupleDistribution threshold(const TupleDistribution &p, double tau) {
    if (tau < 0) throw DataError("tau must be nonnegative");
    TupleDistribution u(p.schema());
    for (const auto &[idx, v] : p.support())
        if (v >= tau && v > 0) u.add(idx, v);
    if (u.support().empty())
        throw NumericError("thresholding at tau=" + csv::format_double(tau) +
                           " emptied the support");
    u.normalize();
    return u;
}

struct MaxentOptions {
    double gradient_tolerance = 1e-8;
    int max_iterations = 500;
    int memory = 10;
    double exponent_clip = 500.0; // dual is unbounded on bad line-search steps
};

struct ConvergenceRow {
    int iteration;
    double objective;
    double gradient_norm;
    double max_violation;
};

struct MaxentResult {
    TupleDistribution weights;
    Eigen::VectorXd theta; // one multiplier per constraint (excluded ones stay 0)
    bool converged = false;
    int iterations = 0;
    double max_violation = 0.0;
    std::vector<ConvergenceRow> log;
};

/// Prepared dual problem over the prior's support. Tuples with u = 0 are
/// excluded (the recovery formula keeps them at 0); constraints no support
/// tuple can satisfy are pinned at theta = 0 and surface as violations.
class MaxentDual {
  public:
    MaxentDual(const TupleDistribution &u, const ConstraintSet &constraints,
               double exponent_clip = 500.0)
        : schema_(&u.schema()), constraints_(&constraints), clip_(exponent_clip) {
        if (!detail::same_schema(u.schema(), constraints.schema()))
            throw DataError("prior and constraints use different schemas");
        if (std::abs(u.mass() - 1.0) > 1e-6)
            throw DataError("prior must be normalized before optimization");
        TupleSpace space(*schema_);
        const auto &cs = constraints.constraints();
        std::vector<std::vector<int>> lookup(schema_->size());
        for (size_t k = 0; k < schema_->size(); ++k)
            lookup[k].assign(schema_->var(static_cast<int>(k)).categories.size(), -1);
        for (size_t j = 0; j < cs.size(); ++j) lookup[cs[j].var][cs[j].cat] = static_cast<int>(j);

        for (const auto &[idx, prob] : u.support()) {
            if (prob <= 0) continue;
            indices_.push_back(idx);
            u_.push_back(prob);
            for (size_t k = 0; k < schema_->size(); ++k) {
                int j = lookup[k][space.category_of(idx, static_cast<int>(k))];
                if (j >= 0) active_.push_back(j);
                else active_.push_back(-1);
            }
        }
        k_ = schema_->size();
        supported_.assign(cs.size(), false);
        for (size_t i = 0; i < indices_.size(); ++i)
            for (size_t k = 0; k < k_; ++k) {
                int j = active_[i * k_ + k];
                if (j >= 0) supported_[j] = true;
            }
    }

    size_t support_size() const { return indices_.size(); }
    const std::vector<std::uint64_t> &support_indices() const { return indices_; }
    const std::vector<bool> &supported_constraints() const { return supported_; }

    /// Dual value and gradient:
    ///   value  = -sum_j theta_j eta_j + sum_i u_i exp(sum_j f_j(T_i) theta_j - 1)
    ///   grad_j = -eta_j + sum_i u_i f_j(T_i) exp(...)
    double eval(const Eigen::VectorXd &theta, Eigen::VectorXd &grad) const {
        const auto &cs = constraints_->constraints();
        grad.setZero(static_cast<Eigen::Index>(cs.size()));
        double value = 0.0;
        for (size_t j = 0; j < cs.size(); ++j) {
            value -= theta(static_cast<Eigen::Index>(j)) * cs[j].eta;
            grad(static_cast<Eigen::Index>(j)) = -cs[j].eta;
        }
        for (size_t i = 0; i < indices_.size(); ++i) {
            double e = tuple_exponent(theta, i);
            double w = u_[i] * std::exp(e);
            value += w;
            for (size_t k = 0; k < k_; ++k) {
                int j = active_[i * k_ + k];
                if (j >= 0) grad(j) += w;
            }
        }
        return value;
    }

    /// Weights recovered from theta: w_i = u_i exp(sum_j f_j theta_j - 1),
    /// renormalized.
    TupleDistribution recover_weights(const Eigen::VectorXd &theta) const {
        TupleDistribution w(*schema_);
        for (size_t i = 0; i < indices_.size(); ++i)
            w.add(indices_[i], u_[i] * std::exp(tuple_exponent(theta, i)));
        w.normalize();
        return w;
    }

    /// Largest |sum_i w_i f_j - eta_j| over all constraints.
    double max_violation(const TupleDistribution &w) const {
        const auto &cs = constraints_->constraints();
        std::vector<double> achieved(cs.size(), 0.0);
        for (size_t i = 0; i < indices_.size(); ++i) {
            double prob = w.at(indices_[i]);
            if (prob <= 0) continue;
            for (size_t k = 0; k < k_; ++k) {
                int j = active_[i * k_ + k];
                if (j >= 0) achieved[j] += prob;
            }
        }
        double worst = 0.0;
        for (size_t j = 0; j < cs.size(); ++j)
            worst = std::max(worst, std::abs(achieved[j] - cs[j].eta));
        return worst;
    }

  private:
    double tuple_exponent(const Eigen::VectorXd &theta, size_t i) const {
        double e = -1.0;
        for (size_t k = 0; k < k_; ++k) {
            int j = active_[i * k_ + k];
            if (j >= 0) e += theta(j);
        }
        return std::clamp(e, -clip_, clip_);
    }

    const Schema *schema_;
    const ConstraintSet *constraints_;
    double clip_;
    std::vector<std::uint64_t> indices_;
    std::vector<double> u_;
    std::vector<int> active_; // per tuple, K constraint ids (-1 = unconstrained)
    std::vector<bool> supported_;
    size_t k_ = 0;
};

/// Spec-facing helper: one-shot dual evaluation.
inline std::pair<double, Eigen::VectorXd> dual_objective(const Eigen::VectorXd &theta,
                                                         const TupleDistribution &u,
                                                         const ConstraintSet &constraints) {
    MaxentDual dual(u, constraints);
    Eigen::VectorXd grad;
    double value = dual.eval(theta, grad);
    return {value, grad};
}

/// Minimum-cross-entropy refinement: quasi-Newton minimization of the dual
/// from theta = 0, weight recovery, renormalization. Non-convergence
/// returns the best theta with converged = false.
inline MaxentResult maxent_solve(const TupleDistribution &u, const ConstraintSet &constraints,
                                 const MaxentOptions &opts = {}) {
    MaxentDual dual(u, constraints, opts.exponent_clip);
    const auto &cs = constraints.constraints();
    const auto &supported = dual.supported_constraints();

    // optimize only constraints the support can express
    std::vector<int> active_ids;
    for (size_t j = 0; j < cs.size(); ++j)
        if (supported[j]) active_ids.push_back(static_cast<int>(j));

    auto expand = [&](const Eigen::VectorXd &reduced) {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cs.size()));
        for (size_t a = 0; a < active_ids.size(); ++a) full(active_ids[a]) = reduced(a);
        return full;
    };

    MaxentResult result;
    Eigen::VectorXd full_grad;
    auto fg = [&](const Eigen::VectorXd &reduced, Eigen::VectorXd &grad) {
        double value = dual.eval(expand(reduced), full_grad);
        grad.resize(static_cast<Eigen::Index>(active_ids.size()));
        for (size_t a = 0; a < active_ids.size(); ++a) grad(a) = full_grad(active_ids[a]);
        return value;
    };

    LbfgsOptions lopts;
    lopts.memory = opts.memory;
    lopts.max_iterations = opts.max_iterations;
    lopts.gradient_tolerance = opts.gradient_tolerance;

    auto log_iteration = [&](int iter, const Eigen::VectorXd &reduced, double f, double gnorm) {
        TupleDistribution w = dual.recover_weights(expand(reduced));
        result.log.push_back({iter, f, gnorm, dual.max_violation(w)});
    };

    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active_ids.size()));
    LbfgsResult lb = lbfgs_minimize(fg, std::move(theta0), lopts, log_iteration);

    result.theta = expand(lb.x);
    result.converged = lb.converged;
    result.iterations = lb.iterations;
    result.weights = dual.recover_weights(result.theta);
    result.max_violation = dual.max_violation(result.weights);
    return result;
}

inline void write_convergence_log(const std::string &path, const MaxentResult &result) {
    csv::Writer w(path);
    w.row({"iteration", "objective", "gradient_norm", "max_violation"});
    for (const auto &row : result.log)
        w.row({std::to_string(row.iteration), csv::format_double(row.objective),
               csv::format_double(row.gradient_norm), csv::format_double(row.max_violation)});
}

} // namespace gensyn
