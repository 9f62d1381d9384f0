#pragma once

#include "gensyn/errors.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace gensyn {

/// One categorical variable: an ordered list of category labels.
struct Variable {
    std::string name;
    std::vector<std::string> categories;
    std::string source; // free-text provenance tag

    int category_index(const std::string &label) const {
        for (size_t i = 0; i < categories.size(); ++i)
            if (categories[i] == label) return static_cast<int>(i);
        return -1;
    }
};

/// A structural-impossibility rule: the child category cannot co-occur
/// with the parent category. Applied as a post-chain mask.
struct MaskRule {
    int parent_var = -1;
    int parent_cat = -1;
    int child_var = -1;
    int child_cat = -1;
};

/// Ordered variable set plus the declared conditioning edges.
/// Declaration order defines the component order used by the auxiliary
/// matrix and the tuple-index enumeration.
class Schema {
  public:
    Schema() = default;

    /// Validates: K >= 2, unique variable names, unique labels per variable,
    /// every conditioning parent declared. Acyclicity is the dependency
    /// graph's job, not checked here.
    Schema(std::vector<Variable> variables,
           std::vector<std::vector<std::string>> conditioning_names)
        : variables_(std::move(variables)) {
        if (variables_.size() < 2)
            throw ConfigError("schema must declare at least 2 variables");
        std::set<std::string> seen;
        for (const auto &v : variables_) {
            if (v.name.empty()) throw ConfigError("variable with empty name");
            if (!seen.insert(v.name).second)
                throw ConfigError("duplicate variable name: " + v.name);
            if (v.categories.empty())
                throw ConfigError("variable " + v.name + " has no categories");
            std::set<std::string> cats(v.categories.begin(), v.categories.end());
            if (cats.size() != v.categories.size())
                throw ConfigError("duplicate category label in variable " + v.name);
        }
        parents_.resize(variables_.size());
        if (!conditioning_names.empty()) {
            if (conditioning_names.size() != variables_.size())
                throw ConfigError("conditioning list size mismatch");
            for (size_t k = 0; k < variables_.size(); ++k) {
                for (const auto &pname : conditioning_names[k]) {
                    int p = index_of(pname);
                    if (p < 0)
                        throw ConfigError("unknown parent '" + pname + "' for variable " +
                                          variables_[k].name);
                    if (p == static_cast<int>(k))
                        throw ConfigError("variable " + pname + " conditioned on itself");
                    parents_[k].push_back(p);
                }
            }
        }
    }

    size_t size() const { return variables_.size(); }
    const Variable &var(int k) const { return variables_[k]; }
    const std::vector<Variable> &variables() const { return variables_; }

    int index_of(const std::string &name) const {
        for (size_t i = 0; i < variables_.size(); ++i)
            if (variables_[i].name == name) return static_cast<int>(i);
        return -1;
    }

    int require(const std::string &name) const {
        int k = index_of(name);
        if (k < 0) throw DataError("unknown variable: " + name);
        return k;
    }

    /// Declared conditioning parents of variable k (may be empty).
    const std::vector<int> &parents(int k) const { return parents_[k]; }

    const std::vector<MaskRule> &mask_rules() const { return mask_rules_; }
    void add_mask_rule(MaskRule r) { mask_rules_.push_back(r); }

    /// Optional input-label renames, applied when loading tables.
    void add_remap(int var, std::string from, std::string to) {
        remaps_[var][std::move(from)] = std::move(to);
    }
    std::string remap_label(int var, const std::string &label) const {
        auto it = remaps_.find(var);
        if (it == remaps_.end()) return label;
        auto jt = it->second.find(label);
        return jt == it->second.end() ? label : jt->second;
    }
    const std::map<int, std::map<std::string, std::string>> &remaps() const { return remaps_; }

  private:
    std::vector<Variable> variables_;
    std::vector<std::vector<int>> parents_;
    std::vector<MaskRule> mask_rules_;
    std::map<int, std::map<std::string, std::string>> remaps_;
};

/// The cartesian product of all category sets, enumerated lexicographically
/// (first declared variable most significant). The enumeration is a
/// bijection between tuples and flat indices.
class TupleSpace {
  public:
    explicit TupleSpace(const Schema &schema) : schema_(&schema) {
        radices_.reserve(schema.size());
        for (const auto &v : schema.variables())
            radices_.push_back(static_cast<std::uint64_t>(v.categories.size()));
        strides_.assign(radices_.size(), 1);
        for (int k = static_cast<int>(radices_.size()) - 2; k >= 0; --k)
            strides_[k] = strides_[k + 1] * radices_[k + 1];
        size_ = strides_.empty() ? 0 : strides_[0] * radices_[0];
    }

    std::uint64_t size() const { return size_; }
    const Schema &schema() const { return *schema_; }

    std::uint64_t flat_index(std::span<const int> cats) const {
        std::uint64_t idx = 0;
        for (size_t k = 0; k < radices_.size(); ++k)
            idx += static_cast<std::uint64_t>(cats[k]) * strides_[k];
        return idx;
    }

    std::vector<int> unflatten(std::uint64_t idx) const {
        std::vector<int> cats(radices_.size());
        for (size_t k = 0; k < radices_.size(); ++k) {
            cats[k] = static_cast<int>(idx / strides_[k]);
            idx %= strides_[k];
        }
        return cats;
    }

    /// Category of one variable without decoding the whole tuple.
    int category_of(std::uint64_t idx, int var) const {
        return static_cast<int>((idx / strides_[var]) % radices_[var]);
    }

  private:
    const Schema *schema_;
    std::vector<std::uint64_t> radices_;
    std::vector<std::uint64_t> strides_;
    std::uint64_t size_ = 0;
};

inline std::uint64_t tuple_space_size(const Schema &schema) {
    std::uint64_t n = 1;
    for (const auto &v : schema.variables()) n *= v.categories.size();
    return n;
}

namespace detail {
inline bool same_schema(const Schema &a, const Schema &b) {
    if (&a == &b) return true;
    if (a.size() != b.size()) return false;
    for (size_t k = 0; k < a.size(); ++k) {
        if (a.var(static_cast<int>(k)).name != b.var(static_cast<int>(k)).name) return false;
        if (a.var(static_cast<int>(k)).categories != b.var(static_cast<int>(k)).categories)
            return false;
    }
    return true;
}
} // namespace detail

} // namespace gensyn
