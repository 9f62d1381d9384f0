#pragma once

#include "gensyn/errors.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/tables.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gensyn {

enum class OrderMode { Entropy, Declared };

/// Variable DAG from the declared conditioning. A mutually-conditioned pair
/// (age <-> gender in the reference datasets) is collapsed into a joint
/// seed node; exactly one such pair is permitted and it must have no other
/// parents, so it sits at level 1.
class DependencyGraph {
  public:
    const std::optional<std::pair<int, int>> &seed_pair() const { return seed_pair_; }
    int level(int var) const { return levels_[var]; }
    const std::vector<int> &levels() const { return levels_; }

    /// Parents in the collapsed graph (seed-pair internal edges removed).
    const std::vector<int> &collapsed_parents(int var) const { return parents_[var]; }

    bool in_seed_pair(int var) const {
        return seed_pair_ && (seed_pair_->first == var || seed_pair_->second == var);
    }

    friend DependencyGraph build_graph(const Schema &schema);

  private:
    std::optional<std::pair<int, int>> seed_pair_;
    std::vector<std::vector<int>> parents_;
    std::vector<int> levels_;
};

/// Builds the collapsed DAG and assigns levels by longest-path depth.
/// Deterministic for a fixed schema.
inline DependencyGraph build_graph(const Schema &schema) {
    const int k = static_cast<int>(schema.size());
    DependencyGraph g;
    g.parents_.assign(k, {});

    auto is_parent = [&](int parent, int child) {
        const auto &ps = schema.parents(child);
        return std::find(ps.begin(), ps.end(), parent) != ps.end();
    };

    // Only the first mutually-conditioned pair collapses into a seed node;
    // any further mutual pair survives as a cycle and errors below.
    for (int a = 0; a < k && !g.seed_pair_; ++a)
        for (int b = a + 1; b < k && !g.seed_pair_; ++b)
            if (is_parent(a, b) && is_parent(b, a)) g.seed_pair_ = {a, b};

    for (int c = 0; c < k; ++c) {
        for (int p : schema.parents(c)) {
            if (g.seed_pair_ && g.in_seed_pair(c) && g.in_seed_pair(p))
                continue; // internal edge of the collapsed seed node
            g.parents_[c].push_back(p);
        }
    }

    // Longest-path levels over collapsed nodes; the seed members share one
    // node whose parents are the union of both members' external parents.
    auto node_of = [&](int var) {
        if (g.seed_pair_ && var == g.seed_pair_->second) return g.seed_pair_->first;
        return var;
    };
    std::vector<std::vector<int>> node_parents(k);
    for (int c = 0; c < k; ++c)
        for (int p : g.parents_[c]) {
            int pn = node_of(p), cn = node_of(c);
            if (pn != cn) node_parents[cn].push_back(pn);
        }

    std::vector<int> level(k, 0);
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (int c = 0; c < k; ++c) {
            if (node_of(c) != c || level[c] != 0) continue;
            int lvl = 1;
            bool ready = true;
            for (int p : node_parents[c]) {
                if (level[p] == 0) {
                    ready = false;
                    break;
                }
                lvl = std::max(lvl, level[p] + 1);
            }
            if (ready) {
                level[c] = lvl;
                progressed = true;
            }
        }
    }
    std::vector<int> unassigned;
    for (int c = 0; c < k; ++c)
        if (level[node_of(c)] == 0) unassigned.push_back(c);
    if (!unassigned.empty()) {
        std::ostringstream msg;
        msg << "conditioning contains a cycle involving:";
        for (int c : unassigned) msg << " " << schema.var(c).name;
        throw ConfigError(msg.str());
    }

    if (g.seed_pair_ && level[g.seed_pair_->first] != 1)
        throw ConfigError("seed pair (" + schema.var(g.seed_pair_->first).name + ", " +
                          schema.var(g.seed_pair_->second).name +
                          ") must sit at level 1 but has other parents");

    g.levels_.resize(k);
    for (int c = 0; c < k; ++c) g.levels_[c] = level[node_of(c)];
    return g;
}

/// Shannon entropy (natural log) of a normalized D1 marginal; 0*log 0 = 0.
/// Scaling all counts by a positive constant leaves the value unchanged.
inline double marginal_entropy(const Schema &schema, const UnivariateTable &table) {
    double h = 0;
    for (double p : table.proportions(schema))
        if (p > 0) h -= p * std::log(p);
    return h;
}

/// Total variable ordering for the conditional chain. Levels are respected;
/// within a level the order is ascending D1 entropy or the declared schema
/// order, ties broken by name. The seed pair always leads.
inline std::vector<int> order_variables(const Schema &schema, const DependencyGraph &graph,
                                        const MarginalTables &d1,
                                        OrderMode mode = OrderMode::Entropy) {
    const int k = static_cast<int>(schema.size());
    std::vector<double> entropy(k, 0.0);
    if (mode == OrderMode::Entropy)
        for (int v = 0; v < k; ++v) entropy[v] = marginal_entropy(schema, d1.require(schema, v));

    std::vector<int> order(k);
    for (int v = 0; v < k; ++v) order[v] = v;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        bool sa = graph.in_seed_pair(a), sb = graph.in_seed_pair(b);
        if (sa != sb) return sa; // seed pair first
        if (sa && sb) return a < b; // declared order within the pair
        if (graph.level(a) != graph.level(b)) return graph.level(a) < graph.level(b);
        if (mode == OrderMode::Entropy && entropy[a] != entropy[b])
            return entropy[a] < entropy[b];
        if (mode == OrderMode::Declared) return a < b;
        return schema.var(a).name < schema.var(b).name;
    });
    return order;
}

/// DOT dump for inspection: one node per variable (level annotated), one
/// edge per conditioning relation.
inline std::string to_dot(const Schema &schema, const DependencyGraph &graph) {
    std::ostringstream out;
    out << "digraph dependencies {\n";
    for (size_t v = 0; v < schema.size(); ++v)
        out << "  \"" << schema.var(static_cast<int>(v)).name << "\" [label=\""
            << schema.var(static_cast<int>(v)).name << "\\nlevel "
            << graph.level(static_cast<int>(v)) << "\"];\n";
    for (size_t c = 0; c < schema.size(); ++c)
        for (int p : schema.parents(static_cast<int>(c)))
            out << "  \"" << schema.var(p).name << "\" -> \""
                << schema.var(static_cast<int>(c)).name << "\";\n";
    out << "}\n";
    return out.str();
}

} // namespace gensyn
