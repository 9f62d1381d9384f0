#pragma once

#include "gensyn/errors.hpp"
#include "gensyn/schema.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace gensyn {

/// D1: univariate frequency counts for one variable at the target location.
struct UnivariateTable {
    int variable = -1;
    std::vector<double> counts; // one entry per category, schema order
    std::string location;

    double total() const {
        double t = 0;
        for (double c : counts) t += c;
        return t;
    }

    /// Counts normalized to proportions. Errors on zero total.
    std::vector<double> proportions(const Schema &schema) const {
        double t = total();
        if (t <= 0.0)
            throw DataError("univariate table for " + schema.var(variable).name +
                            " has zero total");
        std::vector<double> p(counts.size());
        for (size_t i = 0; i < counts.size(); ++i) p[i] = counts[i] / t;
        return p;
    }
};

/// One D1 table per variable; entries may be absent.
struct MarginalTables {
    std::vector<std::optional<UnivariateTable>> by_var;

    explicit MarginalTables(size_t k = 0) : by_var(k) {}

    const UnivariateTable &require(const Schema &schema, int var) const {
        if (var < 0 || static_cast<size_t>(var) >= by_var.size() || !by_var[var])
            throw DataError("missing univariate table for variable " + schema.var(var).name);
        return *by_var[var];
    }
    bool has(int var) const {
        return var >= 0 && static_cast<size_t>(var) < by_var.size() && by_var[var].has_value();
    }
};

/// D2: counts of a child variable cross-tabulated against 1 or 2 parents.
/// Cells absent from the input read as zero.
class ConditionalTable {
  public:
    ConditionalTable() = default;
    ConditionalTable(const Schema &schema, int child, std::vector<int> parents)
        : child_(child), parents_(std::move(parents)) {
        if (parents_.empty() || parents_.size() > 2)
            throw ConfigError("conditional table needs 1 or 2 parents");
        child_size_ = schema.var(child_).categories.size();
        size_t rows = 1;
        for (int p : parents_) rows *= schema.var(p).categories.size();
        counts_.assign(rows * child_size_, 0.0);
        p2_size_ = parents_.size() == 2 ? schema.var(parents_[1]).categories.size() : 1;
    }

    int child() const { return child_; }
    const std::vector<int> &parents() const { return parents_; }
    size_t child_size() const { return child_size_; }
    size_t row_count() const { return counts_.size() / child_size_; }

    size_t row_index(int p1_cat, int p2_cat) const {
        return static_cast<size_t>(p1_cat) * p2_size_ + (parents_.size() == 2 ? p2_cat : 0);
    }

    double &cell(int p1_cat, int p2_cat, int child_cat) {
        return counts_[row_index(p1_cat, p2_cat) * child_size_ + child_cat];
    }
    double cell(int p1_cat, int p2_cat, int child_cat) const {
        return counts_[row_index(p1_cat, p2_cat) * child_size_ + child_cat];
    }

    std::span<const double> row(int p1_cat, int p2_cat) const {
        return {counts_.data() + row_index(p1_cat, p2_cat) * child_size_, child_size_};
    }

    double total() const {
        double t = 0;
        for (double c : counts_) t += c;
        return t;
    }

  private:
    int child_ = -1;
    std::vector<int> parents_;
    size_t child_size_ = 0;
    size_t p2_size_ = 1;
    std::vector<double> counts_;
};

/// A set of D2 tables with lookup by child variable.
struct ConditionalTables {
    std::vector<ConditionalTable> tables;

    const ConditionalTable *find(int child) const {
        for (const auto &t : tables)
            if (t.child() == child) return &t;
        return nullptr;
    }
    const ConditionalTable *find(int child, int parent) const {
        for (const auto &t : tables)
            if (t.child() == child)
                for (int p : t.parents())
                    if (p == parent) return &t;
        return nullptr;
    }
};

/// D3: rows are auxiliary locations, columns are the M_comp = sum_k |c_k|
/// categorical components in schema order.
struct AuxiliaryMatrix {
    std::vector<std::string> locations;       // size L_aux
    std::vector<std::vector<double>> values;  // L_aux x M_comp

    size_t location_count() const { return locations.size(); }
    size_t component_count() const { return values.empty() ? 0 : values[0].size(); }
};

inline size_t component_count(const Schema &schema) {
    size_t m = 0;
    for (const auto &v : schema.variables()) m += v.categories.size();
    return m;
}

/// Component labels "<var>:<cat>" in schema order.
inline std::vector<std::string> component_labels(const Schema &schema) {
    std::vector<std::string> labels;
    for (const auto &v : schema.variables())
        for (const auto &c : v.categories) labels.push_back(v.name + ":" + c);
    return labels;
}

/// Converts every row's per-variable count block to percentages so each
/// block sums to 1. Errors on a zero-total block, naming location and
/// variable. Idempotent on already-normalized input.
inline AuxiliaryMatrix normalize_auxiliary(const Schema &schema, const AuxiliaryMatrix &d3) {
    AuxiliaryMatrix out = d3;
    size_t m = component_count(schema);
    for (size_t l = 0; l < out.values.size(); ++l) {
        auto &row = out.values[l];
        if (row.size() != m)
            throw DataError("auxiliary row " + out.locations[l] + " has " +
                            std::to_string(row.size()) + " components, schema expects " +
                            std::to_string(m));
        size_t offset = 0;
        for (const auto &v : schema.variables()) {
            double block = 0;
            for (size_t c = 0; c < v.categories.size(); ++c) block += row[offset + c];
            if (block <= 0.0)
                throw DataError("auxiliary location " + out.locations[l] +
                                " has zero-total block for variable " + v.name);
            for (size_t c = 0; c < v.categories.size(); ++c) row[offset + c] /= block;
            offset += v.categories.size();
        }
    }
    return out;
}

} // namespace gensyn
