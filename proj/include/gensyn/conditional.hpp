#pragma once

#include "gensyn/dependency_graph.hpp"
#include "gensyn/distribution.hpp"
#include "gensyn/errors.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/tables.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace gensyn {

/// Joint distribution over the chain-order prefix of variables, keyed by a
/// mixed-radix index that grows one digit per added variable.
struct ChainJoint {
    const Schema *schema = nullptr;
    std::vector<int> vars; // chain order so far
    std::map<std::uint64_t, double> p;

    double mass() const {
        double m = 0;
        for (const auto &[_, v] : p) m += v;
        return m;
    }

    /// Strides for decoding categories of the current key layout.
    std::vector<std::uint64_t> strides() const {
        std::vector<std::uint64_t> s(vars.size(), 1);
        for (int i = static_cast<int>(vars.size()) - 2; i >= 0; --i)
            s[i] = s[i + 1] * schema->var(vars[i + 1]).categories.size();
        return s;
    }
};

/// Normalized joint over the seed pair, from whichever D2 cross-tab covers
/// it (either conditioning direction works: the counts are a joint table).
inline ChainJoint seed_joint(const Schema &schema, int first, int second,
                             const ConditionalTables &d2) {
    const ConditionalTable *t = d2.find(second, first);
    bool flipped = false;
    if (!t || t->parents().size() != 1) {
        t = d2.find(first, second);
        flipped = true;
    }
    if (!t || t->parents().size() != 1)
        throw DataError("no bivariate table covering the seed pair (" + schema.var(first).name +
                        ", " + schema.var(second).name + ")");
    double total = t->total();
    if (total <= 0.0)
        throw DataError("all-zero table for the seed pair (" + schema.var(first).name + ", " +
                        schema.var(second).name + ")");

    ChainJoint joint;
    joint.schema = &schema;
    joint.vars = {first, second};
    size_t r1 = schema.var(first).categories.size();
    size_t r2 = schema.var(second).categories.size();
    for (size_t a = 0; a < r1; ++a)
        for (size_t b = 0; b < r2; ++b) {
            double c = flipped ? t->cell(static_cast<int>(b), 0, static_cast<int>(a))
                               : t->cell(static_cast<int>(a), 0, static_cast<int>(b));
            if (c > 0) joint.p[a * r2 + b] = c / total;
        }
    return joint;
}

/// Starts a chain from a single variable's D1 marginal (used when the
/// schema has no mutually-conditioned pair).
inline ChainJoint seed_marginal(const Schema &schema, int var, const MarginalTables &d1) {
    ChainJoint joint;
    joint.schema = &schema;
    joint.vars = {var};
    auto props = d1.require(schema, var).proportions(schema);
    for (size_t c = 0; c < props.size(); ++c)
        if (props[c] > 0) joint.p[c] = props[c];
    return joint;
}

/// One step of the chain: p(X_1..X_i) = p(X_i | parents) * p(X_1..X_{i-1}).
/// Each conditional row is normalized before multiplication, so mass is
/// preserved. A zero row under positive parent mass falls back to the
/// child's D1 marginal; with no D1 available that is an error.
inline ChainJoint extend(const ChainJoint &joint, int child, const ConditionalTable &cond,
                         const MarginalTables &d1) {
    const Schema &schema = *joint.schema;
    const auto &parents = cond.parents();
    std::vector<int> ppos;
    for (int p : parents) {
        int pos = -1;
        for (size_t i = 0; i < joint.vars.size(); ++i)
            if (joint.vars[i] == p) pos = static_cast<int>(i);
        if (pos < 0)
            throw DataError("parent " + schema.var(p).name + " of " + schema.var(child).name +
                            " not yet in the chain");
        ppos.push_back(pos);
    }

    auto strides = joint.strides();
    size_t rc = schema.var(child).categories.size();
    std::vector<double> fallback;

    ChainJoint out;
    out.schema = &schema;
    out.vars = joint.vars;
    out.vars.push_back(child);
    for (const auto &[key, prob] : joint.p) {
        int p1 = static_cast<int>((key / strides[ppos[0]]) %
                                  schema.var(parents[0]).categories.size());
        int p2 = 0;
        if (parents.size() == 2)
            p2 = static_cast<int>((key / strides[ppos[1]]) %
                                  schema.var(parents[1]).categories.size());
        auto row = cond.row(p1, p2);
        double row_total = 0;
        for (double c : row) row_total += c;

        std::uint64_t base = key * rc;
        if (row_total > 0) {
            for (size_t c = 0; c < rc; ++c)
                if (row[c] > 0) out.p[base + c] += prob * (row[c] / row_total);
        } else {
            if (fallback.empty()) {
                if (!d1.has(child))
                    throw DataError("zero conditional row for " + schema.var(child).name +
                                    " with positive parent mass and no D1 fallback");
                fallback = d1.require(schema, child).proportions(schema);
            }
            for (size_t c = 0; c < rc; ++c)
                if (fallback[c] > 0) out.p[base + c] += prob * fallback[c];
        }
    }
    return out;
}

/// Product-form extension for a variable with no parents.
inline ChainJoint extend_independent(const ChainJoint &joint, int child,
                                     const MarginalTables &d1) {
    const Schema &schema = *joint.schema;
    auto props = d1.require(schema, child).proportions(schema);
    size_t rc = props.size();
    ChainJoint out;
    out.schema = &schema;
    out.vars = joint.vars;
    out.vars.push_back(child);
    for (const auto &[key, prob] : joint.p) {
        std::uint64_t base = key * rc;
        for (size_t c = 0; c < rc; ++c)
            if (props[c] > 0) out.p[base + c] = prob * props[c];
    }
    return out;
}

/// Converts a completed chain (all K variables) to a TupleDistribution in
/// schema enumeration order.
inline TupleDistribution chain_to_distribution(const ChainJoint &joint) {
    const Schema &schema = *joint.schema;
    if (joint.vars.size() != schema.size())
        throw DataError("chain is incomplete: " + std::to_string(joint.vars.size()) + " of " +
                        std::to_string(schema.size()) + " variables");
    TupleSpace space(schema);
    auto strides = joint.strides();
    TupleDistribution dist(schema);
    std::vector<int> cats(schema.size());
    for (const auto &[key, prob] : joint.p) {
        for (size_t i = 0; i < joint.vars.size(); ++i)
            cats[joint.vars[i]] = static_cast<int>(
                (key / strides[i]) % schema.var(joint.vars[i]).categories.size());
        dist.add(space.flat_index(cats), prob);
    }
    return dist;
}

/// Applies structural-impossibility rules: tuples where the (parent, child)
/// categories co-occur are zeroed and the surviving child categories within
/// each affected group are rescaled to the group's previous mass.
inline void apply_mask_rules(TupleDistribution &dist, const std::vector<MaskRule> &rules) {
    if (rules.empty()) return;
    const Schema &schema = dist.schema();
    TupleSpace space(schema);
    for (const auto &rule : rules) {
        // group = all variables except the child; only groups with the
        // parent category are affected
        std::uint64_t child_stride = 1;
        for (size_t k = rule.child_var + 1; k < schema.size(); ++k)
            child_stride *= schema.var(static_cast<int>(k)).categories.size();

        std::map<std::uint64_t, std::pair<double, double>> groups; // pre, masked
        for (const auto &[idx, prob] : dist.support()) {
            if (space.category_of(idx, rule.parent_var) != rule.parent_cat) continue;
            int cc = space.category_of(idx, rule.child_var);
            std::uint64_t group = idx - static_cast<std::uint64_t>(cc) * child_stride;
            auto &[pre, masked] = groups[group];
            pre += prob;
            if (cc == rule.child_cat) masked += prob;
        }
        auto &support = dist.support();
        for (auto it = support.begin(); it != support.end();) {
            std::uint64_t idx = it->first;
            if (space.category_of(idx, rule.parent_var) != rule.parent_cat) {
                ++it;
                continue;
            }
            int cc = space.category_of(idx, rule.child_var);
            if (cc == rule.child_cat) {
                it = support.erase(it);
                continue;
            }
            std::uint64_t group = idx - static_cast<std::uint64_t>(cc) * child_stride;
            const auto &[pre, masked] = groups[group];
            double remaining = pre - masked;
            if (masked > 0 && remaining > 0) it->second *= pre / remaining;
            ++it;
        }
        // groups whose whole mass sat on the masked cell disappear; the
        // final normalization below absorbs that loss
    }
    dist.normalize();
}

/// Algorithm: order the variables, seed the joint, extend one variable at a
/// time, then mask and prune. Returns the normalized chain estimate p1.
inline TupleDistribution run_chain(const Schema &schema, const DependencyGraph &graph,
                                   const std::vector<int> &order, const MarginalTables &d1,
                                   const ConditionalTables &d2, double prune_eps = 1e-15) {
    ChainJoint joint;
    size_t next = 0;
    if (graph.seed_pair()) {
        joint = seed_joint(schema, order[0], order[1], d2);
        next = 2;
    } else {
        joint = seed_marginal(schema, order[0], d1);
        next = 1;
    }
    for (; next < order.size(); ++next) {
        int child = order[next];
        const auto &parents = graph.collapsed_parents(child);
        if (parents.empty()) {
            joint = extend_independent(joint, child, d1);
            continue;
        }
        const ConditionalTable *t = d2.find(child);
        if (!t)
            throw DataError("no conditional table for variable " + schema.var(child).name);
        joint = extend(joint, child, *t, d1);
    }
    TupleDistribution p1 = chain_to_distribution(joint);
    apply_mask_rules(p1, schema.mask_rules());
    p1.prune_below(prune_eps);
    return p1;
}

} // namespace gensyn
