// gensyn command-line driver: run the synthesis pipeline, generate ground
// truths, dump dependency graphs and render report plots.

#include "gensyn/dependency_graph.hpp"
#include "gensyn/ground_truth.hpp"
#include "gensyn/ingest.hpp"
#include "gensyn/pipeline.hpp"
#include "gensyn/svg_plot.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int cmd_run(const std::string &config_path, const std::vector<std::string> &methods,
            std::optional<double> tau, bool tau_sweep, std::optional<std::uint64_t> seed) {
    gensyn::RunConfig cfg = gensyn::load_run_config(config_path);
    if (!methods.empty()) cfg.methods = methods;
    if (tau) cfg.tau = *tau;
    if (seed) cfg.seed = *seed;
    if (tau_sweep) cfg.tau_sweep = true;

    if (cfg.tau_sweep) {
        auto rows = gensyn::run_tau_sweep(cfg);
        bool any_ok = false, all_ok = true;
        for (const auto &r : rows) {
            std::cout << "tau=" << gensyn::csv::format_double(r.tau)
                      << (r.ok ? " kl=" + (r.kl ? gensyn::csv::format_double(*r.kl) : "n/a")
                               : " failed: " + r.message)
                      << "\n";
            any_ok = any_ok || r.ok;
            all_ok = all_ok && r.ok;
        }
        std::cout << "sweep written to " << cfg.output_dir << "/tau_sweep.csv\n";
        return all_ok ? kExitOk : (any_ok ? 4 : kExitNumeric);
    }

    gensyn::RunReport report = gensyn::run(cfg);
    for (const auto &m : report.methods)
        std::cout << m.name << ": " << (m.ok ? "ok" : "failed: " + m.message) << " ("
                  << m.seconds << "s)\n";
    std::cout << "reports written to " << report.output_dir << "\n";
    return report.exit_code();
}

int cmd_truth(const std::string &spec_path, std::optional<std::uint64_t> seed) {
    gensyn::TruthFileSpec file_spec = gensyn::load_truth_spec(spec_path);
    std::uint64_t use_seed = seed ? *seed : file_spec.seed;
    gensyn::GroundTruth gt = gensyn::make_ground_truth(file_spec.spec, use_seed);
    gensyn::write_ground_truth(file_spec.output_dir, gt, file_spec.spec, use_seed);
    std::cout << "ground truth written to " << file_spec.output_dir << "\n";
    return kExitOk;
}

int cmd_graph(const std::string &schema_path, const std::string &out_path) {
    gensyn::Schema schema = gensyn::load_schema(schema_path);
    gensyn::DependencyGraph graph = gensyn::build_graph(schema);
    std::string dot = gensyn::to_dot(schema, graph);
    if (out_path.empty()) {
        std::cout << dot;
    } else {
        std::ofstream out(out_path);
        out << dot;
        std::cout << "graph written to " << out_path << "\n";
    }
    return kExitOk;
}

int cmd_plot(const std::string &report_dir) {
    namespace fs = std::filesystem;
    bool wrote_any = false;

    // per-method comparison from the metrics reports
    std::vector<std::string> found;
    std::vector<double> kls, frobs, taes;
    for (const auto &name : gensyn::kAllMethods) {
        fs::path p = fs::path(report_dir) / (name + "_metrics.json");
        if (!fs::exists(p)) continue;
        std::ifstream in(p);
        nlohmann::json j = nlohmann::json::parse(in);
        found.push_back(name);
        kls.push_back(j["kl"].is_null() ? 0.0 : j["kl"].get<double>());
        frobs.push_back(j["frobenius"].is_null() ? 0.0 : j["frobenius"].get<double>());
        taes.push_back(j["tae"].get<double>());
    }
    if (!found.empty()) {
        gensyn::csv::Writer data(report_dir + "/plot_data.csv");
        data.row({"method", "kl", "frobenius", "tae"});
        for (size_t i = 0; i < found.size(); ++i)
            data.row({found[i], gensyn::csv::format_double(kls[i]),
                      gensyn::csv::format_double(frobs[i]), gensyn::csv::format_double(taes[i])});

        auto comparison = [&](const std::string &metric, const std::vector<double> &ys) {
            gensyn::SvgPlot plot("method comparison: " + metric, "method", metric);
            plot.set_x_categories(found);
            std::vector<double> xs(found.size());
            for (size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
            plot.add_series(metric, xs, ys, false);
            plot.render(report_dir + "/" + metric + "_comparison.svg");
        };
        comparison("kl", kls);
        comparison("frobenius", frobs);
        comparison("tae", taes);
        wrote_any = true;
    }

    fs::path sweep = fs::path(report_dir) / "tau_sweep.csv";
    if (fs::exists(sweep)) {
        auto rows = gensyn::csv::read_file(sweep.string());
        std::vector<double> taus, kls_sw, rare;
        for (size_t r = 1; r < rows.size(); ++r) {
            if (rows[r][1] != "1" || rows[r][2].empty()) continue;
            taus.push_back(gensyn::csv::parse_double(rows[r][0], "tau_sweep"));
            kls_sw.push_back(gensyn::csv::parse_double(rows[r][2], "tau_sweep"));
            rare.push_back(gensyn::csv::parse_double(rows[r][7], "tau_sweep"));
        }
        if (!taus.empty()) {
            gensyn::SvgPlot plot("KL divergence vs tau", "tau", "KL divergence");
            plot.set_log_x(true);
            plot.add_series("kl", taus, kls_sw);
            plot.render(report_dir + "/tau_sweep.svg");
            gensyn::SvgPlot plot2("rare-category error vs tau", "tau", "% difference");
            plot2.set_log_x(true);
            plot2.add_series("rare category", taus, rare);
            plot2.render(report_dir + "/tau_rare_category.svg");
            wrote_any = true;
        }
    }

    fs::path conv = fs::path(report_dir) / "gensyn_convergence.csv";
    if (fs::exists(conv)) {
        auto rows = gensyn::csv::read_file(conv.string());
        std::vector<double> iters, gnorms;
        for (size_t r = 1; r < rows.size(); ++r) {
            iters.push_back(gensyn::csv::parse_double(rows[r][0], "convergence"));
            gnorms.push_back(gensyn::csv::parse_double(rows[r][2], "convergence"));
        }
        if (!iters.empty()) {
            gensyn::SvgPlot plot("solver convergence", "iteration", "gradient norm");
            plot.add_series("gradient norm", iters, gnorms);
            plot.render(report_dir + "/convergence.svg");
            wrote_any = true;
        }
    }

    if (!wrote_any) {
        std::cerr << "no reports found in " << report_dir << "\n";
        return kExitConfig;
    }
    std::cout << "plots written to " << report_dir << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"gensyn: synthetic microdata from aggregated frequency tables"};
    app.require_subcommand(1);

    std::string config_path, spec_path, schema_path, report_dir, graph_out;
    std::vector<std::string> methods;
    double tau_value = -1.0;
    bool tau_sweep = false;
    std::uint64_t seed_value = 0;
    bool seed_set = false, tau_set = false;

    auto *run_cmd = app.add_subcommand("run", "run the synthesis pipeline from a config file");
    run_cmd->add_option("--config", config_path, "run config file")->required();
    run_cmd->add_option("--method", methods,
                        "methods to run (gensyn|maxent|conditional|sync|syntropy|synthacs|all)");
    run_cmd->add_option("--tau", tau_value, "probability threshold")->each([&](const std::string &) {
        tau_set = true;
    });
    run_cmd->add_flag("--tau-sweep", tau_sweep, "run the tau sensitivity sweep");
    run_cmd->add_option("--seed", seed_value, "RNG seed")->each([&](const std::string &) {
        seed_set = true;
    });

    auto *truth_cmd = app.add_subcommand("truth", "generate a synthetic ground truth");
    truth_cmd->add_option("--spec", spec_path, "ground-truth spec file")->required();
    truth_cmd->add_option("--seed", seed_value, "RNG seed")->each([&](const std::string &) {
        seed_set = true;
    });

    auto *graph_cmd = app.add_subcommand("graph", "dump the dependency graph as DOT");
    graph_cmd->add_option("--config", schema_path, "schema config file")->required();
    graph_cmd->add_option("--out", graph_out, "output path (default: stdout)");

    auto *plot_cmd = app.add_subcommand("plot", "render SVG plots from a report directory");
    plot_cmd->add_option("--report", report_dir, "report directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed())
            return cmd_run(config_path, methods,
                           tau_set ? std::optional<double>(tau_value) : std::nullopt, tau_sweep,
                           seed_set ? std::optional<std::uint64_t>(seed_value) : std::nullopt);
        if (truth_cmd->parsed())
            return cmd_truth(spec_path,
                             seed_set ? std::optional<std::uint64_t>(seed_value) : std::nullopt);
        if (graph_cmd->parsed()) return cmd_graph(schema_path, graph_out);
        if (plot_cmd->parsed()) return cmd_plot(report_dir);
    } catch (const gensyn::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gensyn::DataError &e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gensyn::NumericError &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
