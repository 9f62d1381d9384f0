#include "gensyn/pipeline.hpp"

#include "support/helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gensyn;

namespace {

std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Generates a harness truth, writes it to dir, and returns the run config.
RunConfig prepared_run(const std::string &dir, long long n_pop, std::uint64_t seed) {
    auto spec = testutil::harness_spec(n_pop, 10, 0.05);
    GroundTruth gt = make_ground_truth(spec, seed);
    write_ground_truth(dir, gt, spec, seed);
    RunConfig cfg = load_run_config(dir + "/run.cfg");
    cfg.output_dir = dir + "/out";
    cfg.iterations = 5; // keep the toy runs quick
    cfg.n_draw = 1000;
    return cfg;
}

} // namespace

TEST_CASE("ground truth tables are exact recounts of the truth population") {
    auto spec = testutil::harness_spec(2000, 6, 0.0);
    GroundTruth gt = make_ground_truth(spec, 5);
    const Schema &schema = *gt.schema;
    TupleSpace space(schema);

    SECTION("D1 sums to the population size") {
        for (size_t k = 0; k < schema.size(); ++k)
            REQUIRE(gt.d1.by_var[k]->total() == Catch::Approx(2000.0));
    }
    SECTION("D1 equals a direct recount") {
        auto counts = gt.population.category_counts();
        for (size_t k = 0; k < schema.size(); ++k)
            for (size_t c = 0; c < counts[k].size(); ++c)
                REQUIRE(gt.d1.by_var[k]->counts[c] == counts[k][c]);
    }
    SECTION("the poverty cross-tab matches a recount") {
        const ConditionalTable *t = gt.d2.find(schema.index_of("poverty"));
        REQUIRE(t != nullptr);
        REQUIRE(t->parents().size() == 2);
        std::map<std::tuple<int, int, int>, double> recount;
        for (const auto &[idx, n] : gt.population.prevalence)
            recount[{space.category_of(idx, t->parents()[0]),
                     space.category_of(idx, t->parents()[1]),
                     space.category_of(idx, schema.index_of("poverty"))}] +=
                static_cast<double>(n);
        for (const auto &[key, count] : recount) {
            auto [p1, p2, c] = key;
            REQUIRE(t->cell(p1, p2, c) == count);
        }
    }
    SECTION("at zero perturbation every D3 row equals the truth proportions") {
        auto counts = gt.population.category_counts();
        for (const auto &row : gt.d3.values) {
            size_t offset = 0;
            for (size_t k = 0; k < schema.size(); ++k) {
                const auto &var = schema.var(static_cast<int>(k));
                for (size_t c = 0; c < var.categories.size(); ++c)
                    REQUIRE(row[offset + c] ==
                            Catch::Approx(counts[k][c] / 2000.0).margin(1e-12));
                offset += var.categories.size();
            }
        }
    }
}

TEST_CASE("run config round-trips through the generated files") {
    std::string dir = testutil::scratch_dir("pipeline_cfg");
    auto spec = testutil::harness_spec(500, 6, 0.05);
    GroundTruth gt = make_ground_truth(spec, 8);
    write_ground_truth(dir, gt, spec, 8);

    RunConfig cfg = load_run_config(dir + "/run.cfg");
    REQUIRE(cfg.n_pop == 500);
    REQUIRE(cfg.seed == 8);
    REQUIRE(cfg.resolved_tau() == Catch::Approx(1.0 / 500));
    REQUIRE(std::filesystem::exists(cfg.schema_path));
    REQUIRE(std::filesystem::exists(cfg.reference_path));

    // the reference distribution reloads to the truth
    Schema schema = load_schema(cfg.schema_path);
    TupleDistribution ref = TupleDistribution::load_csv(cfg.reference_path, schema);
    REQUIRE(ref.support_size() == gt.truth.support_size());
}

TEST_CASE("run executes every requested method and writes reports") {
    std::string dir = testutil::scratch_dir("pipeline_all");
    RunConfig cfg = prepared_run(dir, 1200, 19);
    cfg.methods = {"all"};
    RunReport report = run(cfg);
    REQUIRE(report.exit_code() == 0);
    REQUIRE(report.methods.size() == 6);
    for (const auto &name : kAllMethods) {
        REQUIRE(std::filesystem::exists(cfg.output_dir + "/" + name + "_population.csv"));
        REQUIRE(std::filesystem::exists(cfg.output_dir + "/" + name + "_metrics.json"));
        // every population has exactly n_pop records (plus header)
        auto rows = csv::read_file(cfg.output_dir + "/" + name + "_population.csv");
        REQUIRE(rows.size() == 1201);
    }
    REQUIRE(std::filesystem::exists(cfg.output_dir + "/run_summary.json"));
    REQUIRE(std::filesystem::exists(cfg.output_dir + "/gensyn_convergence.csv"));
    REQUIRE(std::filesystem::exists(cfg.output_dir + "/gensyn_prior.csv"));
    REQUIRE(std::filesystem::exists(cfg.output_dir + "/gensyn_copula_sigma.csv"));
}

TEST_CASE("metrics reports validate against the published schema") {
    std::string dir = testutil::scratch_dir("pipeline_schema");
    RunConfig cfg = prepared_run(dir, 800, 21);
    cfg.methods = {"gensyn", "sync"};
    run(cfg);

    std::ifstream schema_file(std::string(GENSYN_SOURCE_DIR) + "/schemas/metrics.schema.json");
    REQUIRE(schema_file);
    nlohmann::json schema_doc = nlohmann::json::parse(schema_file);
    for (const auto &name : {"gensyn", "sync"}) {
        std::ifstream in(cfg.output_dir + "/" + std::string(name) + "_metrics.json");
        nlohmann::json doc = nlohmann::json::parse(in);
        std::string why;
        bool ok = validate_metrics_json(schema_doc, doc, &why);
        INFO(why);
        REQUIRE(ok);
        REQUIRE(doc["method"] == name);
        REQUIRE(doc["kl"].is_number());
        REQUIRE(doc["frobenius"].is_number());
    }
}

TEST_CASE("fixed seed reproduces byte-identical reports") {
    std::string dir_a = testutil::scratch_dir("pipeline_det_a");
    std::string dir_b = testutil::scratch_dir("pipeline_det_b");
    RunConfig cfg_a = prepared_run(dir_a, 900, 33);
    RunConfig cfg_b = prepared_run(dir_b, 900, 33);
    cfg_a.methods = {"all"};
    cfg_b.methods = {"all"};
    REQUIRE(run(cfg_a).exit_code() == 0);
    REQUIRE(run(cfg_b).exit_code() == 0);
    for (const auto &name : kAllMethods) {
        REQUIRE(slurp(cfg_a.output_dir + "/" + name + "_population.csv") ==
                slurp(cfg_b.output_dir + "/" + name + "_population.csv"));
        REQUIRE(slurp(cfg_a.output_dir + "/" + name + "_metrics.json") ==
                slurp(cfg_b.output_dir + "/" + name + "_metrics.json"));
    }
}

TEST_CASE("method draws do not depend on which other methods run") {
    std::string dir_a = testutil::scratch_dir("pipeline_iso_a");
    std::string dir_b = testutil::scratch_dir("pipeline_iso_b");
    RunConfig cfg_a = prepared_run(dir_a, 700, 55);
    RunConfig cfg_b = prepared_run(dir_b, 700, 55);
    cfg_a.methods = {"all"};
    cfg_b.methods = {"conditional"};
    run(cfg_a);
    run(cfg_b);
    REQUIRE(slurp(cfg_a.output_dir + "/conditional_population.csv") ==
            slurp(cfg_b.output_dir + "/conditional_population.csv"));
}

TEST_CASE("a failing method is recorded while the others continue") {
    std::string dir = testutil::scratch_dir("pipeline_partial");
    RunConfig cfg = prepared_run(dir, 600, 66);
    cfg.methods = {"gensyn", "conditional"};
    cfg.tau = 1.0; // empties the fused support: gensyn fails, conditional runs
    RunReport report = run(cfg);
    REQUIRE(report.exit_code() == 4);
    REQUIRE_FALSE(report.methods[0].ok);
    REQUIRE(report.methods[1].ok);
    REQUIRE_FALSE(std::filesystem::exists(cfg.output_dir + "/gensyn_metrics.json"));
    REQUIRE(std::filesystem::exists(cfg.output_dir + "/conditional_metrics.json"));
}

TEST_CASE("bad run configs are rejected") {
    std::string dir = testutil::scratch_dir("pipeline_badcfg");
    {
        std::ofstream f(dir + "/bad.cfg");
        f << "[run]\nschema = missing.cfg\n"; // no tables, no n_pop
    }
    REQUIRE_THROWS_AS(load_run_config(dir + "/bad.cfg"), ConfigError);
    {
        std::ofstream f(dir + "/unknown_method.cfg");
        f << "[run]\nschema = sks\nd1 = a\nd2 = b\nd3 = c\nn_pop = 10\nmethods = bogus\n";
    }
    RunConfig cfg = load_run_config(dir + "/unknown_method.cfg");
    REQUIRE_THROWS_AS(expand_methods(cfg.methods), ConfigError);
}

TEST_CASE("tau sweep covers the grid and reports the rare category") {
    std::string dir = testutil::scratch_dir("pipeline_sweep");
    RunConfig cfg = prepared_run(dir, 1500, 71);
    auto rows = run_tau_sweep(cfg);
    REQUIRE(rows.size() == 4);
    REQUIRE(rows[0].tau == Catch::Approx(10.0 / 1500));
    REQUIRE(rows[1].tau == Catch::Approx(1.0 / 1500));
    REQUIRE(rows[2].tau == Catch::Approx(0.1 / 1500));
    REQUIRE(rows[3].tau == Catch::Approx(0.01 / 1500));
    for (const auto &row : rows) {
        REQUIRE(row.ok);
        REQUIRE(row.kl.has_value());
    }
    // harsher pruning cannot help the fit
    REQUIRE(*rows[1].kl <= *rows[0].kl + 1e-9);
    REQUIRE(std::filesystem::exists(cfg.output_dir + "/tau_sweep.csv"));
}

TEST_CASE("graph DOT dump is emitted through the schema config") {
    std::string dir = testutil::scratch_dir("pipeline_dot");
    auto spec = testutil::harness_spec(100, 6, 0.0);
    write_schema(dir + "/schema.cfg", *spec.schema);
    Schema schema = load_schema(dir + "/schema.cfg");
    DependencyGraph graph = build_graph(schema);
    std::string dot = to_dot(schema, graph);
    REQUIRE(dot.find("\"gender\" -> \"poverty\"") != std::string::npos);
}
