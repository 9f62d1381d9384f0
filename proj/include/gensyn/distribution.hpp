#pragma once

#include "gensyn/csv.hpp"
#include "gensyn/errors.hpp"
#include "gensyn/schema.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

namespace gensyn {

/// Sparse probability map over the tuple space. Houses every distribution
/// the pipeline passes around: the chain estimate, the copula estimate,
/// the fused prior and the final weights.
class TupleDistribution {
  public:
    TupleDistribution() = default;
    explicit TupleDistribution(const Schema &schema) : schema_(&schema) {}

    const Schema &schema() const { return *schema_; }
    const std::map<std::uint64_t, double> &support() const { return p_; }
    std::map<std::uint64_t, double> &support() { return p_; }
    size_t support_size() const { return p_.size(); }

    double mass() const {
        double m = 0;
        for (const auto &[_, v] : p_) m += v;
        return m;
    }

    double at(std::uint64_t idx) const {
        auto it = p_.find(idx);
        return it == p_.end() ? 0.0 : it->second;
    }

    void add(std::uint64_t idx, double v) {
        if (v != 0.0) p_[idx] += v;
    }

    void normalize() {
        double m = mass();
        if (m <= 0.0) throw NumericError("cannot normalize a zero-mass distribution");
        for (auto &[_, v] : p_) v /= m;
    }

    /// Drops entries below eps and renormalizes. Keeps the support tractable.
    void prune_below(double eps) {
        for (auto it = p_.begin(); it != p_.end();)
            it = it->second < eps ? p_.erase(it) : std::next(it);
        normalize();
    }

    bool is_normalized(double tol = 1e-9) const { return std::abs(mass() - 1.0) < tol; }

    void dump_csv(const std::string &path) const {
        csv::Writer w(path);
        TupleSpace space(*schema_);
        std::vector<std::string> header{"tuple_index"};
        for (const auto &v : schema_->variables()) header.push_back(v.name);
        header.push_back("probability");
        w.row(header);
        for (const auto &[idx, prob] : p_) {
            std::vector<std::string> row{std::to_string(idx)};
            auto cats = space.unflatten(idx);
            for (size_t k = 0; k < cats.size(); ++k)
                row.push_back(schema_->var(static_cast<int>(k)).categories[cats[k]]);
            row.push_back(csv::format_double(prob));
            w.row(row);
        }
    }

    static TupleDistribution load_csv(const std::string &path, const Schema &schema) {
        TupleDistribution d(schema);
        TupleSpace space(schema);
        auto rows = csv::read_file(path);
        for (const auto &row : rows) {
            if (row.size() != schema.size() + 2)
                throw ConfigError(path + ": distribution rows need K+2 fields");
            if (row[0] == "tuple_index") continue;
            std::vector<int> cats(schema.size());
            for (size_t k = 0; k < schema.size(); ++k) {
                int c = schema.var(static_cast<int>(k)).category_index(row[k + 1]);
                if (c < 0)
                    throw ConfigError(path + ": unknown category '" + row[k + 1] + "'");
                cats[k] = c;
            }
            d.add(space.flat_index(cats), csv::parse_count(row[schema.size() + 1], path));
        }
        return d;
    }

  private:
    const Schema *schema_ = nullptr;
    std::map<std::uint64_t, double> p_; // ordered for deterministic iteration
};

} // namespace gensyn
