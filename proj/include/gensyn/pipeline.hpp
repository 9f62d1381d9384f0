#pragma once

#include "gensyn/baselines.hpp"
#include "gensyn/conditional.hpp"
#include "gensyn/copula.hpp"
#include "gensyn/dependency_graph.hpp"
#include "gensyn/ground_truth.hpp"
#include "gensyn/ingest.hpp"
#include "gensyn/maxent.hpp"
#include "gensyn/metrics.hpp"
#include "gensyn/synthesis.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gensyn {

inline const std::vector<std::string> kAllMethods = {"gensyn",  "maxent",   "conditional",
                                                     "sync",    "syntropy", "synthacs"};

struct RunConfig {
    std::string schema_path;
    std::string d1_path;
    std::string d2_path;
    std::string d3_path;
    std::string reference_path; // optional: tuple distribution CSV for KL/Frobenius
    long long n_pop = 0;
    std::optional<double> tau; // default 1/n_pop
    bool tau_sweep = false;
    int iterations = 20;
    std::optional<int> n_draw; // default min(n_pop, 50000)
    std::uint64_t seed = 0;
    std::vector<std::string> methods = {"gensyn"};
    std::string output_dir = "out";
    OrderMode order_mode = OrderMode::Entropy;

    double resolved_tau() const { return tau ? *tau : 1.0 / static_cast<double>(n_pop); }
    int resolved_n_draw() const {
        if (n_draw) return *n_draw;
        return static_cast<int>(std::min<long long>(n_pop, 50000));
    }
};

namespace detail {

inline std::string resolve_path(const std::filesystem::path &base, const std::string &p) {
    if (p.empty()) return p;
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
}

// stable stream ids so a method's draws do not depend on which other
// methods run
inline std::uint64_t method_stream(const std::string &name) {
    for (size_t i = 0; i < kAllMethods.size(); ++i)
        if (kAllMethods[i] == name) return i + 1;
    throw ConfigError("unknown method: " + name);
}

} // namespace detail

inline RunConfig load_run_config(const std::string &path) {
    auto sections = parse_config_file(path);
    auto base = std::filesystem::path(path).parent_path();
    RunConfig cfg;
    bool seen = false;
    for (const auto &sec : sections) {
        if (sec.name != "run") throw ConfigError(path + ": unexpected section [" + sec.name + "]");
        seen = true;
        for (const auto &[key, value] : sec.entries) {
            if (key == "schema") cfg.schema_path = detail::resolve_path(base, value);
            else if (key == "d1") cfg.d1_path = detail::resolve_path(base, value);
            else if (key == "d2") cfg.d2_path = detail::resolve_path(base, value);
            else if (key == "d3") cfg.d3_path = detail::resolve_path(base, value);
            else if (key == "reference") cfg.reference_path = detail::resolve_path(base, value);
            else if (key == "n_pop") cfg.n_pop = csv::parse_int(value, path);
            else if (key == "tau") cfg.tau = csv::parse_double(value, path);
            else if (key == "iterations") cfg.iterations = static_cast<int>(csv::parse_int(value, path));
            else if (key == "n_draw") cfg.n_draw = static_cast<int>(csv::parse_int(value, path));
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(csv::parse_int(value, path));
            else if (key == "methods") {
                cfg.methods = csv::split(value);
            } else if (key == "output_dir") cfg.output_dir = value; // outputs are cwd-relative
            else if (key == "order_mode") {
                if (value == "entropy") cfg.order_mode = OrderMode::Entropy;
                else if (value == "declared") cfg.order_mode = OrderMode::Declared;
                else throw ConfigError(path + ": order_mode must be entropy or declared");
            } else throw ConfigError(path + ": unknown key '" + key + "' in [run]");
        }
    }
    if (!seen) throw ConfigError(path + ": missing [run] section");
    if (cfg.schema_path.empty() || cfg.d1_path.empty() || cfg.d2_path.empty() ||
        cfg.d3_path.empty())
        throw ConfigError(path + ": schema, d1, d2 and d3 paths are required");
    if (cfg.n_pop < 1) throw ConfigError(path + ": n_pop must be >= 1");
    if (cfg.tau && *cfg.tau < 0) throw ConfigError(path + ": tau must be >= 0");
    return cfg;
}

/// Loaded inputs plus lazily shared intermediates (the chain estimate and
/// the copula spec are reused by every method that needs them).
class RunContext {
  public:
    explicit RunContext(RunConfig cfg) : cfg_(std::move(cfg)) {
        schema_ = std::make_shared<Schema>(load_schema(cfg_.schema_path));
        d1_ = load_d1(cfg_.d1_path, *schema_);
        d2_ = load_d2(cfg_.d2_path, *schema_);
        d3_ = load_d3(cfg_.d3_path, *schema_);
        graph_ = build_graph(*schema_);
        order_ = order_variables(*schema_, graph_, d1_, cfg_.order_mode);
        constraints_ = build_constraints(*schema_, d1_);
        if (!cfg_.reference_path.empty()) {
            reference_ = TupleDistribution::load_csv(cfg_.reference_path, *schema_);
            reference_->normalize();
            reference_assoc_ = association_matrix(*reference_);
        }
    }

    const RunConfig &config() const { return cfg_; }
    const Schema &schema() const { return *schema_; }
    std::shared_ptr<Schema> schema_ptr() const { return schema_; }
    const MarginalTables &d1() const { return d1_; }
    const ConditionalTables &d2() const { return d2_; }
    const DependencyGraph &graph() const { return graph_; }
    const std::vector<int> &order() const { return order_; }
    const ConstraintSet &constraints() const { return constraints_; }
    const std::optional<TupleDistribution> &reference() const { return reference_; }
    const std::optional<AssociationMatrix> &reference_assoc() const { return reference_assoc_; }

    const TupleDistribution &p1() {
        if (!p1_) p1_ = run_chain(*schema_, graph_, order_, d1_, d2_);
        return *p1_;
    }

    const CopulaSpec &copula() {
        if (!copula_) {
            AuxiliaryMatrix normalized = normalize_auxiliary(*schema_, d3_);
            copula_ = estimate_spec(*schema_, normalized, cfg_.iterations,
                                    cfg_.resolved_n_draw());
        }
        return *copula_;
    }

    /// Expected category counts at population scale.
    std::vector<std::vector<double>> expected_counts() const {
        std::vector<std::vector<double>> expected(schema_->size());
        for (size_t k = 0; k < schema_->size(); ++k) {
            auto props = d1_.require(*schema_, static_cast<int>(k)).proportions(*schema_);
            expected[k].resize(props.size());
            for (size_t c = 0; c < props.size(); ++c)
                expected[k][c] = props[c] * static_cast<double>(cfg_.n_pop);
        }
        return expected;
    }

  private:
    RunConfig cfg_;
    std::shared_ptr<Schema> schema_;
    MarginalTables d1_;
    ConditionalTables d2_;
    AuxiliaryMatrix d3_;
    DependencyGraph graph_;
    std::vector<int> order_;
    ConstraintSet constraints_;
    std::optional<TupleDistribution> reference_;
    std::optional<AssociationMatrix> reference_assoc_;
    std::optional<TupleDistribution> p1_;
    std::optional<CopulaSpec> copula_;
};

struct MethodMetrics {
    double tae = 0.0;
    std::vector<double> per_variable_tae;
    std::optional<double> kl;
    std::optional<double> frobenius;
    AssociationMatrix association;
};

inline MethodMetrics evaluate_population(RunContext &ctx, const SyntheticPopulation &pop) {
    MethodMetrics m;
    auto observed = pop.category_counts();
    auto expected = ctx.expected_counts();
    m.tae = tae(observed, expected);
    m.per_variable_tae = per_variable_tae(observed, expected);
    m.association = association_matrix(pop);
    if (ctx.reference()) {
        m.kl = kl_divergence(*ctx.reference(), pop.empirical());
        m.frobenius = frobenius_distance(*ctx.reference_assoc(), m.association);
    }
    return m;
}

inline nlohmann::json metrics_to_json(const RunContext &ctx, const std::string &method,
                                      const MethodMetrics &m,
                                      const std::optional<MaxentResult> &solver) {
    const Schema &schema = ctx.schema();
    nlohmann::json j;
    j["method"] = method;
    j["n_pop"] = ctx.config().n_pop;
    j["seed"] = ctx.config().seed;
    j["tau"] = ctx.config().resolved_tau();
    j["tae"] = m.tae;
    nlohmann::json pvt = nlohmann::json::object();
    for (size_t k = 0; k < schema.size(); ++k)
        pvt[schema.var(static_cast<int>(k)).name] = m.per_variable_tae[k];
    j["per_variable_tae"] = pvt;
    j["kl"] = m.kl ? nlohmann::json(*m.kl) : nlohmann::json(nullptr);
    j["frobenius"] = m.frobenius ? nlohmann::json(*m.frobenius) : nlohmann::json(nullptr);
    nlohmann::json assoc;
    assoc["variables"] = nlohmann::json::array();
    for (const auto &v : schema.variables()) assoc["variables"].push_back(v.name);
    assoc["values"] = m.association.values;
    j["association_matrix"] = assoc;
    if (solver) {
        j["solver"] = {{"converged", solver->converged},
                       {"iterations", solver->iterations},
                       {"max_violation", solver->max_violation}};
    }
    return j;
}

struct MethodStatus {
    std::string name;
    bool ok = false;
    std::string message;
    double seconds = 0.0;
};

struct RunReport {
    std::string output_dir;
    std::vector<MethodStatus> methods;

    /// 0 = all methods succeeded, 3 = all failed, 4 = partial.
    int exit_code() const {
        size_t ok = 0;
        for (const auto &m : methods) ok += m.ok ? 1 : 0;
        if (ok == methods.size()) return 0;
        return ok == 0 ? 3 : 4;
    }
};

namespace detail {

inline SyntheticPopulation run_method(RunContext &ctx, const std::string &name,
                                      const std::string &outdir,
                                      std::optional<MaxentResult> &solver) {
    const RunConfig &cfg = ctx.config();
    Rng rng = make_rng(cfg.seed, method_stream(name));
    double tau = cfg.resolved_tau();

    if (name == "gensyn") {
        auto eta = integerize_eta(ctx.schema(), ctx.d1(), cfg.resolved_n_draw());
        TupleDistribution p2 =
            estimate_p2(ctx.schema(), ctx.copula(), eta, cfg.iterations, rng);
        TupleDistribution fused = fuse_priors(ctx.p1(), p2);
        fused.dump_csv(outdir + "/gensyn_prior.csv");
        dump_copula_diagnostics(outdir + "/gensyn_copula_marginals.csv",
                                outdir + "/gensyn_copula_sigma.csv", ctx.schema(), ctx.copula());
        MaxentResult res = maxent_solve(threshold(fused, tau), ctx.constraints());
        write_convergence_log(outdir + "/gensyn_convergence.csv", res);
        solver = res;
        return expand(res.weights, cfg.n_pop);
    }
    if (name == "maxent") {
        MaxentResult res = baseline_maxent(ctx.schema(), ctx.constraints(), tau);
        solver = res;
        return expand(res.weights, cfg.n_pop);
    }
    if (name == "conditional") return baseline_conditional(ctx.schema(), ctx.p1(), cfg.n_pop, rng);
    if (name == "sync") return baseline_sync(ctx.schema(), ctx.copula(), ctx.d1(), cfg.n_pop, rng);
    if (name == "syntropy") {
        MaxentResult res = baseline_syntropy(ctx.p1(), ctx.constraints(), tau);
        solver = res;
        return expand(res.weights, cfg.n_pop);
    }
    if (name == "synthacs")
        return baseline_synthacs(ctx.schema(), ctx.p1(), ctx.d1(), cfg.n_pop, {}, rng);
    throw ConfigError("unknown method: " + name);
}

} // namespace detail

inline std::vector<std::string> expand_methods(const std::vector<std::string> &methods) {
    std::vector<std::string> out;
    for (const auto &m : methods) {
        if (m == "all") {
            out.insert(out.end(), kAllMethods.begin(), kAllMethods.end());
        } else {
            detail::method_stream(m); // validates
            out.push_back(m);
        }
    }
    return out;
}

/// Full pipeline: ingest -> graph -> priors -> refine -> expand -> evaluate.
/// A failing method is recorded and the others continue.
inline RunReport run(const RunConfig &cfg) {
    namespace fs = std::filesystem;
    RunContext ctx(cfg);
    fs::create_directories(cfg.output_dir);

    RunReport report;
    report.output_dir = cfg.output_dir;
    nlohmann::json summary;
    summary["seed"] = cfg.seed;
    summary["n_pop"] = cfg.n_pop;
    summary["tau"] = cfg.resolved_tau();
    summary["methods"] = nlohmann::json::array();

    for (const auto &name : expand_methods(cfg.methods)) {
        MethodStatus status;
        status.name = name;
        auto start = std::chrono::steady_clock::now();
        try {
            std::optional<MaxentResult> solver;
            SyntheticPopulation pop = detail::run_method(ctx, name, cfg.output_dir, solver);
            write_population_csv(cfg.output_dir + "/" + name + "_population.csv", pop);
            MethodMetrics m = evaluate_population(ctx, pop);
            std::ofstream out(cfg.output_dir + "/" + name + "_metrics.json");
            out << metrics_to_json(ctx, name, m, solver).dump(2) << "\n";
            status.ok = true;
        } catch (const std::exception &e) {
            status.ok = false;
            status.message = e.what();
        }
        status.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.methods.push_back(status);
        summary["methods"].push_back({{"name", status.name},
                                      {"ok", status.ok},
                                      {"message", status.message},
                                      {"seconds", status.seconds}});
    }
    summary["exit_code"] = report.exit_code();
    std::ofstream out(cfg.output_dir + "/run_summary.json");
    out << summary.dump(2) << "\n";
    return report;
}

/// The sweep grid from the sensitivity experiments:
/// tau in {10/N, 1/N, 1/(10 N), 1/(100 N)}.
inline std::vector<double> tau_sweep_grid(long long n_pop) {
    double n = static_cast<double>(n_pop);
    return {10.0 / n, 1.0 / n, 0.1 / n, 0.01 / n};
}

struct TauSweepRow {
    double tau = 0.0;
    bool ok = false;
    std::string message;
    std::optional<double> kl;
    double tae = 0.0;
    std::optional<double> frobenius;
    double rare_pct_diff = 0.0; // |O-E|/E * 100 for the rarest D1 category
};

/// Runs the full-prior pipeline once per grid value, reusing the same fused
/// prior, and tracks how the rarest category fares.
inline std::vector<TauSweepRow> run_tau_sweep(const RunConfig &cfg) {
    namespace fs = std::filesystem;
    RunContext ctx(cfg);
    fs::create_directories(cfg.output_dir);

    Rng rng = make_rng(cfg.seed, detail::method_stream("gensyn"));
    auto eta = integerize_eta(ctx.schema(), ctx.d1(), cfg.resolved_n_draw());
    TupleDistribution p2 = estimate_p2(ctx.schema(), ctx.copula(), eta, cfg.iterations, rng);
    TupleDistribution fused = fuse_priors(ctx.p1(), p2);

    // rarest category with a positive D1 share
    int rare_var = -1, rare_cat = -1;
    double rare_share = 2.0;
    for (size_t k = 0; k < ctx.schema().size(); ++k) {
        auto props = ctx.d1().require(ctx.schema(), static_cast<int>(k)).proportions(ctx.schema());
        for (size_t c = 0; c < props.size(); ++c)
            if (props[c] > 0 && props[c] < rare_share) {
                rare_share = props[c];
                rare_var = static_cast<int>(k);
                rare_cat = static_cast<int>(c);
            }
    }

    auto expected = ctx.expected_counts();
    std::vector<TauSweepRow> rows;
    for (double tau : tau_sweep_grid(cfg.n_pop)) {
        TauSweepRow row;
        row.tau = tau;
        try {
            MaxentResult res = maxent_solve(threshold(fused, tau), ctx.constraints());
            SyntheticPopulation pop = expand(res.weights, cfg.n_pop);
            MethodMetrics m = evaluate_population(ctx, pop);
            row.ok = true;
            row.kl = m.kl;
            row.tae = m.tae;
            row.frobenius = m.frobenius;
            auto observed = pop.category_counts();
            double e = expected[rare_var][rare_cat];
            if (e > 0)
                row.rare_pct_diff = std::abs(observed[rare_var][rare_cat] - e) / e * 100.0;
        } catch (const std::exception &ex) {
            row.ok = false;
            row.message = ex.what();
        }
        rows.push_back(row);
    }

    csv::Writer w(cfg.output_dir + "/tau_sweep.csv");
    w.row({"tau", "ok", "kl", "tae", "frobenius", "rare_variable", "rare_category",
           "rare_pct_diff"});
    for (const auto &row : rows)
        w.row({csv::format_double(row.tau), row.ok ? "1" : "0",
               row.kl ? csv::format_double(*row.kl) : "",
               csv::format_double(row.tae),
               row.frobenius ? csv::format_double(*row.frobenius) : "",
               rare_var >= 0 ? ctx.schema().var(rare_var).name : "",
               rare_cat >= 0 ? ctx.schema().var(rare_var).categories[rare_cat] : "",
               csv::format_double(row.rare_pct_diff)});
    return rows;
}

/// Shallow structural validation of a metrics report against the published
/// JSON schema (required keys and primitive types).
inline bool validate_metrics_json(const nlohmann::json &schema_doc, const nlohmann::json &doc,
                                  std::string *why = nullptr) {
    auto fail = [&](const std::string &msg) {
        if (why) *why = msg;
        return false;
    };
    if (!schema_doc.contains("required") || !schema_doc.contains("properties"))
        return fail("schema document lacks required/properties");
    for (const auto &req : schema_doc["required"])
        if (!doc.contains(req.get<std::string>()))
            return fail("missing required key: " + req.get<std::string>());
    for (auto it = schema_doc["properties"].begin(); it != schema_doc["properties"].end(); ++it) {
        if (!doc.contains(it.key())) continue;
        const auto &prop = it.value();
        if (!prop.contains("type")) continue;
        std::vector<std::string> allowed;
        if (prop["type"].is_array())
            for (const auto &t : prop["type"]) allowed.push_back(t.get<std::string>());
        else allowed.push_back(prop["type"].get<std::string>());
        const auto &v = doc[it.key()];
        bool ok = false;
        for (const auto &t : allowed) {
            if (t == "number" && v.is_number()) ok = true;
            if (t == "integer" && v.is_number_integer()) ok = true;
            if (t == "string" && v.is_string()) ok = true;
            if (t == "object" && v.is_object()) ok = true;
            if (t == "array" && v.is_array()) ok = true;
            if (t == "boolean" && v.is_boolean()) ok = true;
            if (t == "null" && v.is_null()) ok = true;
        }
        if (!ok) return fail("key '" + it.key() + "' has unexpected type");
    }
    return true;
}

/// Parses a ground-truth spec file ([truth], [tilt], [prevalence]).
/// Returns the spec plus the declared seed and output directory.
struct TruthFileSpec {
    GroundTruthSpec spec;
    std::uint64_t seed = 0;
    std::string output_dir = "truth";
};

inline TruthFileSpec load_truth_spec(const std::string &path) {
    auto sections = parse_config_file(path);
    auto base = std::filesystem::path(path).parent_path();
    TruthFileSpec out;
    std::string schema_path;
    for (const auto &sec : sections) {
        if (sec.name == "truth") {
            for (const auto &[key, value] : sec.entries) {
                if (key == "schema") schema_path = detail::resolve_path(base, value);
                else if (key == "n_pop") out.spec.n_pop = csv::parse_int(value, path);
                else if (key == "aux_locations")
                    out.spec.aux_locations = static_cast<int>(csv::parse_int(value, path));
                else if (key == "perturbation")
                    out.spec.perturbation = csv::parse_double(value, path);
                else if (key == "concentration")
                    out.spec.concentration = csv::parse_double(value, path);
                else if (key == "seed") out.seed = static_cast<std::uint64_t>(csv::parse_int(value, path));
                else if (key == "output_dir") out.output_dir = value; // cwd-relative
                else if (key == "joint") {
                    if (value != "dag_noise")
                        out.spec.explicit_joint_csv = detail::resolve_path(base, value);
                } else throw ConfigError(path + ": unknown key '" + key + "' in [truth]");
            }
        }
    }
    if (schema_path.empty()) throw ConfigError(path + ": [truth] needs a schema path");
    if (out.spec.perturbation < 0) throw ConfigError(path + ": perturbation must be >= 0");
    out.spec.schema = std::make_shared<Schema>(load_schema(schema_path));
    const Schema &schema = *out.spec.schema;

    for (const auto &sec : sections) {
        if (sec.name == "tilt") {
            // <varA>:<catA> & <varB>:<catB> = gamma[, comove]
            for (const auto &[key, value] : sec.entries) {
                auto amp = key.find('&');
                if (amp == std::string::npos)
                    throw ConfigError(path + ": tilt key needs 'a:cat & b:cat'");
                auto [va, ca] = detail::split_var_cat(csv::trim(key.substr(0, amp)), "[tilt]");
                auto [vb, cb] = detail::split_var_cat(csv::trim(key.substr(amp + 1)), "[tilt]");
                TiltSpec t;
                t.var_a = schema.require(va);
                t.var_b = schema.require(vb);
                t.cat_a = detail::require_category(schema, t.var_a, ca, "[tilt]");
                t.cat_b = detail::require_category(schema, t.var_b, cb, "[tilt]");
                auto parts = csv::split(value);
                if (parts.empty() || parts.size() > 2)
                    throw ConfigError(path + ": tilt value is gamma[, comove]");
                t.gamma = csv::parse_double(parts[0], path);
                if (parts.size() == 2) t.comove = csv::parse_double(parts[1], path);
                out.spec.tilts.push_back(t);
            }
        } else if (sec.name == "prevalence") {
            for (const auto &[key, value] : sec.entries) {
                auto [vn, cn] = detail::split_var_cat(key, "[prevalence]");
                int var = schema.require(vn);
                int cat = detail::require_category(schema, var, cn, "[prevalence]");
                out.spec.prevalence_targets[var][cat] = csv::parse_double(value, path);
            }
        } else if (sec.name != "truth") {
            throw ConfigError(path + ": unknown section [" + sec.name + "]");
        }
    }
    return out;
}

} // namespace gensyn
