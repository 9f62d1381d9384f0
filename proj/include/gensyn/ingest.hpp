#pragma once

#include "gensyn/csv.hpp"
#include "gensyn/errors.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/tables.hpp"

#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace gensyn {

/// Minimal sectioned config: "[section]" headers followed by "key = value"
/// lines. Keys may repeat within a section; order is preserved. Lines
/// starting with '#' are comments.
struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
};

inline std::vector<ConfigSection> parse_config_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::vector<ConfigSection> sections;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = csv::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
            sections.push_back({csv::trim(t.substr(1, t.size() - 2)), {}});
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        if (sections.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": entry before any section");
        sections.back().entries.emplace_back(csv::trim(t.substr(0, eq)),
                                             csv::trim(t.substr(eq + 1)));
    }
    return sections;
}

namespace detail {

inline std::pair<std::string, std::string> split_var_cat(const std::string &s,
                                                         const std::string &what) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
        throw ConfigError("expected <variable>:<category> in " + what + ", got '" + s + "'");
    return {csv::trim(s.substr(0, colon)), csv::trim(s.substr(colon + 1))};
}

inline int require_category(const Schema &schema, int var, const std::string &label,
                            const std::string &what) {
    int c = schema.var(var).category_index(label);
    if (c < 0)
        throw ConfigError("unknown category '" + label + "' of variable " +
                          schema.var(var).name + " in " + what);
    return c;
}

} // namespace detail

/// Loads and validates a schema config. Conditioning edges are recorded but
/// acyclicity is left to the dependency graph.
inline Schema load_schema(const std::string &path) {
    auto sections = parse_config_file(path);

    std::vector<Variable> variables;
    for (const auto &sec : sections) {
        if (sec.name != "variable") continue;
        Variable v;
        for (const auto &[key, value] : sec.entries) {
            if (key == "name") v.name = value;
            else if (key == "source") v.source = value;
            else if (key == "categories") v.categories = csv::split(value);
            else throw ConfigError(path + ": unknown key '" + key + "' in [variable]");
        }
        variables.push_back(std::move(v));
    }

    std::vector<std::vector<std::string>> conditioning(variables.size());
    auto name_index = [&](const std::string &n) {
        for (size_t i = 0; i < variables.size(); ++i)
            if (variables[i].name == n) return static_cast<int>(i);
        return -1;
    };
    for (const auto &sec : sections) {
        if (sec.name != "conditioning") continue;
        for (const auto &[child, parents] : sec.entries) {
            int k = name_index(child);
            if (k < 0) throw ConfigError(path + ": conditioning for unknown variable " + child);
            conditioning[k] = csv::split(parents);
        }
    }

    Schema schema(std::move(variables), std::move(conditioning));

    for (const auto &sec : sections) {
        if (sec.name == "remap") {
            // <variable>:<input-label> = <schema-label>
            for (const auto &[key, value] : sec.entries) {
                auto [var_name, old_label] = detail::split_var_cat(key, "[remap]");
                int var = schema.index_of(var_name);
                if (var < 0) throw ConfigError(path + ": remap for unknown variable " + var_name);
                detail::require_category(schema, var, value, "[remap]");
                schema.add_remap(var, old_label, value);
            }
        } else if (sec.name == "rules") {
            // <child>:<childcat> = <parent>:<parentcat>  (the pair cannot co-occur)
            for (const auto &[key, value] : sec.entries) {
                auto [cv, cc] = detail::split_var_cat(key, "[rules]");
                auto [pv, pc] = detail::split_var_cat(value, "[rules]");
                MaskRule r;
                r.child_var = schema.index_of(cv);
                r.parent_var = schema.index_of(pv);
                if (r.child_var < 0 || r.parent_var < 0)
                    throw ConfigError(path + ": rule references unknown variable");
                r.child_cat = detail::require_category(schema, r.child_var, cc, "[rules]");
                r.parent_cat = detail::require_category(schema, r.parent_var, pc, "[rules]");
                schema.add_mask_rule(r);
            }
        } else if (sec.name != "variable" && sec.name != "conditioning") {
            throw ConfigError(path + ": unknown section [" + sec.name + "]");
        }
    }
    return schema;
}

inline void write_schema(const std::string &path, const Schema &schema) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    for (const auto &v : schema.variables()) {
        out << "[variable]\n";
        out << "name = " << v.name << "\n";
        if (!v.source.empty()) out << "source = " << v.source << "\n";
        out << "categories = ";
        for (size_t i = 0; i < v.categories.size(); ++i)
            out << (i ? ", " : "") << v.categories[i];
        out << "\n\n";
    }
    bool any = false;
    for (size_t k = 0; k < schema.size(); ++k) any = any || !schema.parents(k).empty();
    if (any) {
        out << "[conditioning]\n";
        for (size_t k = 0; k < schema.size(); ++k) {
            if (schema.parents(k).empty()) continue;
            out << schema.var(static_cast<int>(k)).name << " = ";
            const auto &ps = schema.parents(static_cast<int>(k));
            for (size_t i = 0; i < ps.size(); ++i)
                out << (i ? ", " : "") << schema.var(ps[i]).name;
            out << "\n";
        }
    }
    if (!schema.mask_rules().empty()) {
        out << "\n[rules]\n";
        for (const auto &r : schema.mask_rules())
            out << schema.var(r.child_var).name << ":"
                << schema.var(r.child_var).categories[r.child_cat] << " = "
                << schema.var(r.parent_var).name << ":"
                << schema.var(r.parent_var).categories[r.parent_cat] << "\n";
    }
    if (!schema.remaps().empty()) {
        out << "\n[remap]\n";
        for (const auto &[var, table] : schema.remaps())
            for (const auto &[from, to] : table)
                out << schema.var(var).name << ":" << from << " = " << to << "\n";
    }
}

/// D1 CSV: variable,category,count. One file may carry several variables.
inline MarginalTables load_d1(const std::string &path, const Schema &schema,
                              const std::string &location = "") {
    MarginalTables d1(schema.size());
    auto rows = csv::read_file(path);
    for (const auto &row : rows) {
        if (row.size() != 3) throw ConfigError(path + ": D1 rows need 3 fields");
        if (row[0] == "variable") continue; // optional header
        int var = schema.index_of(row[0]);
        if (var < 0) throw ConfigError(path + ": unknown variable " + row[0]);
        if (!d1.by_var[var]) {
            UnivariateTable t;
            t.variable = var;
            t.location = location;
            t.counts.assign(schema.var(var).categories.size(), 0.0);
            d1.by_var[var] = std::move(t);
        }
        std::string label = schema.remap_label(var, row[1]);
        int cat = detail::require_category(schema, var, label, path);
        d1.by_var[var]->counts[cat] += csv::parse_count(row[2], path);
    }
    for (size_t k = 0; k < schema.size(); ++k)
        if (d1.by_var[k] && d1.by_var[k]->total() <= 0.0)
            throw DataError(path + ": zero-total counts for variable " + schema.var(k).name);
    return d1;
}

inline void write_d1(const std::string &path, const Schema &schema, const MarginalTables &d1) {
    csv::Writer w(path);
    w.row({"variable", "category", "count"});
    for (size_t k = 0; k < schema.size(); ++k) {
        if (!d1.by_var[k]) continue;
        const auto &v = schema.var(static_cast<int>(k));
        for (size_t c = 0; c < v.categories.size(); ++c)
            w.row({v.name, v.categories[c], csv::format_double(d1.by_var[k]->counts[c])});
    }
}

/// D2 CSV: child,parent1,parent2|-,p1_cat,p2_cat|-,child_cat,count
inline ConditionalTables load_d2(const std::string &path, const Schema &schema) {
    ConditionalTables d2;
    auto rows = csv::read_file(path);
    for (const auto &row : rows) {
        if (row.size() != 7) throw ConfigError(path + ": D2 rows need 7 fields");
        if (row[0] == "child") continue; // optional header
        int child = schema.index_of(row[0]);
        if (child < 0) throw ConfigError(path + ": unknown child variable " + row[0]);
        std::vector<int> parents;
        parents.push_back(schema.require(row[1]));
        bool two = row[2] != "-";
        if (two) parents.push_back(schema.require(row[2]));

        ConditionalTable *table = nullptr;
        for (auto &t : d2.tables)
            if (t.child() == child && t.parents() == parents) table = &t;
        if (!table) {
            d2.tables.emplace_back(schema, child, parents);
            table = &d2.tables.back();
        }

        int p1 = detail::require_category(schema, parents[0],
                                          schema.remap_label(parents[0], row[3]), path);
        int p2 = 0;
        if (two)
            p2 = detail::require_category(schema, parents[1],
                                          schema.remap_label(parents[1], row[4]), path);
        else if (row[4] != "-")
            throw ConfigError(path + ": p2_cat must be '-' when parent2 is '-'");
        int cc = detail::require_category(schema, child, schema.remap_label(child, row[5]), path);
        table->cell(p1, p2, cc) += csv::parse_count(row[6], path);
    }
    return d2;
}

inline void write_d2(const std::string &path, const Schema &schema, const ConditionalTables &d2) {
    csv::Writer w(path);
    w.row({"child", "parent1", "parent2", "p1_cat", "p2_cat", "child_cat", "count"});
    for (const auto &t : d2.tables) {
        const auto &cv = schema.var(t.child());
        const auto &p1v = schema.var(t.parents()[0]);
        bool two = t.parents().size() == 2;
        size_t p1n = p1v.categories.size();
        size_t p2n = two ? schema.var(t.parents()[1]).categories.size() : 1;
        for (size_t a = 0; a < p1n; ++a)
            for (size_t b = 0; b < p2n; ++b)
                for (size_t c = 0; c < cv.categories.size(); ++c) {
                    double count = t.cell(static_cast<int>(a), static_cast<int>(b),
                                          static_cast<int>(c));
                    w.row({cv.name, p1v.name, two ? schema.var(t.parents()[1]).name : "-",
                           p1v.categories[a],
                           two ? schema.var(t.parents()[1]).categories[b] : "-",
                           cv.categories[c], csv::format_double(count)});
                }
    }
}

/// D3 CSV: header "location,<var>:<cat>,..." in schema order, one row per
/// auxiliary location.
inline AuxiliaryMatrix load_d3(const std::string &path, const Schema &schema) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw ConfigError(path + ": empty D3 file");
    auto expected = component_labels(schema);
    const auto &header = rows[0];
    if (header.size() != expected.size() + 1 || header[0] != "location")
        throw ConfigError(path + ": D3 header must be location,<var>:<cat>,... in schema order");
    for (size_t i = 0; i < expected.size(); ++i) {
        // allow remapped labels in the header
        auto [var_name, cat] = detail::split_var_cat(header[i + 1], path);
        int var = schema.require(var_name);
        std::string canonical = var_name + ":" + schema.remap_label(var, cat);
        if (canonical != expected[i])
            throw ConfigError(path + ": D3 column " + std::to_string(i + 1) + " is '" +
                              header[i + 1] + "', expected '" + expected[i] + "'");
    }
    AuxiliaryMatrix d3;
    for (size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size())
            throw ConfigError(path + ": D3 row " + std::to_string(r) + " has wrong width");
        d3.locations.push_back(rows[r][0]);
        std::vector<double> vals;
        for (size_t i = 1; i < rows[r].size(); ++i)
            vals.push_back(csv::parse_count(rows[r][i], path));
        d3.values.push_back(std::move(vals));
    }
    if (d3.locations.size() < 2)
        throw DataError(path + ": D3 needs at least 2 auxiliary locations");
    return d3;
}

inline void write_d3(const std::string &path, const Schema &schema, const AuxiliaryMatrix &d3) {
    csv::Writer w(path);
    std::vector<std::string> header{"location"};
    for (const auto &l : component_labels(schema)) header.push_back(l);
    w.row(header);
    for (size_t r = 0; r < d3.values.size(); ++r) {
        std::vector<std::string> row{d3.locations[r]};
        for (double v : d3.values[r]) row.push_back(csv::format_double(v));
        w.row(row);
    }
}

} // namespace gensyn
