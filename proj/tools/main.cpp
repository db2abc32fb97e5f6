#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xling/adversarial.hpp"
#include "xling/correlation.hpp"
#include "xling/distance.hpp"
#include "xling/feature_store.hpp"
#include "xling/metric_fit.hpp"
#include "xling/report.hpp"
#include "xling/selection.hpp"

namespace fs = std::filesystem;
using namespace xling;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write output file: " + path.string());
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CommonOpts {
    std::string out = "out";
    std::uint64_t seed = 0;
    std::string config_path;
};

std::map<FeatureClass, FeatureTable> load_tables(
    const std::map<FeatureClass, std::string>& paths) {
    std::map<FeatureClass, FeatureTable> tables;
    for (const auto& [cls, path] : paths)
        if (!path.empty()) tables.emplace(cls, load_feature_table(path, cls));
    return tables;
}

int run_dist(const CommonOpts& common, const std::map<FeatureClass, std::string>& paths,
             const std::vector<std::string>& metric_names, bool normalize, bool svg) {
    auto tables = load_tables(paths);
    std::vector<MetricId> metrics;
    if (metric_names.empty()) {
        for (MetricId id : all_base_metrics())
            if (tables.count(metric_feature_class(id))) metrics.push_back(id);
    } else {
        for (const auto& name : metric_names) metrics.push_back(metric_from_string(name));
    }
    if (metrics.empty())
        throw ValidationError("dist: no feature tables given (see --syntax etc.)");

    std::vector<DistanceMatrix> matrices;
    for (MetricId metric : metrics) {
        auto table = tables.find(metric_feature_class(metric));
        if (table == tables.end())
            throw ValidationError("dist: metric " + to_string(metric) +
                                  " needs a " +
                                  std::string(to_string(metric_feature_class(metric))) +
                                  " feature table");
        auto D = build_distance_matrix(table->second, metric, normalize);
        write_file(fs::path(common.out) / (to_string(metric) + ".csv"),
                   distance_matrix_to_csv(D));
        matrices.push_back(std::move(D));
    }
    if (matrices.size() >= 2) {
        auto corr = metric_metric_correlation(matrices);
        write_file(fs::path(common.out) / "metric_correlation.csv",
                   metric_correlation_to_csv(matrices, corr));
        if (svg) {
            std::vector<std::string> labels;
            for (const auto& m : matrices) labels.push_back(to_string(m.metric()));
            write_file(fs::path(common.out) / "metric_correlation.svg",
                       svg_heatmap(labels, labels, corr, "metric-metric Pearson correlation"));
        }
    }
    return 0;
}

int run_correlate(const CommonOpts& common, const std::string& dist_path,
                  const std::vector<std::string>& score_paths, bool include_self) {
    auto D = load_distance_matrix(dist_path);
    for (const auto& path : score_paths) {
        auto S = load_transfer_scores(path);
        auto report = distance_transfer_correlation(D, S, !include_self);
        const std::string stem = to_string(report.metric) + "_" + S.task() + "_" +
                                 to_string(S.scale());
        write_file(fs::path(common.out) / ("correlation_" + stem + ".csv"),
                   correlation_report_to_csv(report));
        write_file(fs::path(common.out) / ("correlation_" + stem + ".json"),
                   correlation_report_to_json(report));
    }
    return 0;
}

int run_sweep(const CommonOpts& common, const std::map<FeatureClass, std::string>& paths,
              const std::vector<std::string>& score_paths, bool include_self) {
    auto tables = load_tables(paths);
    std::vector<TransferScoreMatrix> scores;
    for (const auto& path : score_paths) scores.push_back(load_transfer_scores(path));
    auto entries = correlation_sweep(tables, scores, !include_self);
    std::ostringstream out;
    out << "metric,task,scale,mean_rho,error\n";
    out.precision(17);
    for (const auto& e : entries) {
        out << to_string(e.metric) << ',' << e.task << ',' << to_string(e.scale) << ',';
        if (e.report) out << e.report->mean;
        out << ',' << e.error << "\n";
    }
    write_file(fs::path(common.out) / "sweep.csv", out.str());
    return 0;
}

int run_fit(const CommonOpts& common, const std::vector<std::string>& component_paths,
            const std::vector<std::string>& score_paths, double grid_step, bool preset) {
    if (preset) {
        auto weights = preset_dcomb();
        nlohmann::json j;
        nlohmann::json comps = nlohmann::json::array();
        for (MetricId id : weights.components) comps.push_back(to_string(id));
        j["components"] = comps;
        j["weights"] = weights.weights;
        write_file(fs::path(common.out) / "dcomb_weights.json", j.dump(2));
        return 0;
    }
    std::vector<DistanceMatrix> components;
    for (const auto& path : component_paths)
        components.push_back(load_distance_matrix(path));
    std::vector<TransferScoreMatrix> scores;
    for (const auto& path : score_paths) scores.push_back(load_transfer_scores(path));
    auto result = fit_weights(components, scores, grid_step);
    write_file(fs::path(common.out) / "fit.json", fit_result_to_json(result));
    std::ostringstream csv;
    csv << "component,weight\n";
    csv.precision(17);
    for (std::size_t i = 0; i < result.weights.components.size(); ++i)
        csv << to_string(result.weights.components[i]) << ','
            << result.weights.weights[i] << "\n";
    write_file(fs::path(common.out) / "fit_weights.csv", csv.str());
    return 0;
}

int run_cluster(const CommonOpts& common, const std::string& dist_path, std::size_t k,
                std::size_t min_size) {
    auto D = load_distance_matrix(dist_path);
    Clustering c;
    if (k > 0) {
        c = pam(D, k, common.seed);
    } else {
        auto [chosen, clustering] = select_k(D, min_size, common.seed);
        c = std::move(clustering);
    }
    write_file(fs::path(common.out) / "clustering.json", clustering_to_json(c));
    return 0;
}

int run_graph(const CommonOpts& common, const std::string& clustering_path) {
    auto c = clustering_from_json(read_file(clustering_path));
    auto g = build_relation_graph(c);
    write_file(fs::path(common.out) / "graph.json", graph_to_json(g));
    write_file(fs::path(common.out) / "graph.dot", graph_to_dot(g));
    return 0;
}

int run_simulate(const CommonOpts& common, const std::string& spec_path,
                 const std::string& config_path, const std::string& mode_name,
                 const std::vector<std::string>& source_codes) {
    auto spec = task_spec_from_json(read_file(spec_path));
    TrainConfig config;
    if (!config_path.empty()) config = train_config_from_json(read_file(config_path));
    if (!mode_name.empty()) config.mode = train_mode_from_string(mode_name);
    if (common.seed != 0) config.seed = common.seed;
    if (config.mode == TrainMode::Grda && !config.graph)
        config.graph = build_relation_graph(spec.clustering);

    auto datasets = gen_synthetic(spec);
    if (!source_codes.empty()) {
        std::set<LanguageId> sources;
        for (const auto& code : source_codes) sources.insert(LanguageId::parse(code));
        strip_labels(datasets, sources);
    }
    auto result = train(datasets, config);
    const std::string stem = std::string(to_string(result.mode));
    write_file(fs::path(common.out) / ("result_" + stem + ".json"),
               train_result_to_json(result));
    write_file(fs::path(common.out) / ("curves_" + stem + ".csv"), curves_to_csv(result));
    return 0;
}

int run_report(const CommonOpts& common, const std::string& table_path, bool svg) {
    auto table = parse_delta_table(read_file(table_path), table_path);
    auto completed = complete_delta_table(table);
    write_file(fs::path(common.out) / "table.csv", render_delta_table_csv(completed));
    if (svg) {
        std::vector<std::string> rows, cols = {"SMALL", "BASE", "LARGE", "MODEL_AVG"};
        std::vector<double> values;
        for (const auto& row : completed.rows) {
            rows.push_back(row.task + " " + row.config + " (" + row.method + ")");
            for (const auto& v : {row.small, row.base, row.large, row.model_avg})
                values.push_back(v ? round1(*v) : 0.0);
        }
        write_file(fs::path(common.out) / "table.svg",
                   svg_heatmap(rows, cols, values, "score deltas"));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transfer-planning toolkit: language distances, correlation, "
                 "metric fitting, medoid selection, and adversarial simulation"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--out", common.out, "output directory");
    app.add_option("--seed", common.seed, "explicit random seed");
    app.add_option("--config", common.config_path, "JSON config with option defaults");

    // dist
    std::map<FeatureClass, std::string> feature_paths;
    auto* dist = app.add_subcommand("dist", "compute distance matrices");
    dist->add_option("--syntax", feature_paths[FeatureClass::Syntax], "syntax feature CSV");
    dist->add_option("--phonology", feature_paths[FeatureClass::Phonology],
                     "phonology feature CSV");
    dist->add_option("--inventory", feature_paths[FeatureClass::Inventory],
                     "inventory feature CSV");
    dist->add_option("--fam", feature_paths[FeatureClass::Fam], "family feature CSV");
    dist->add_option("--geo", feature_paths[FeatureClass::Geo], "geography feature CSV");
    std::vector<std::string> metric_names;
    dist->add_option("--metrics", metric_names, "metric ids (default: all computable)");
    bool no_normalize = false, svg = false;
    dist->add_flag("--no-normalize", no_normalize, "skip min-max normalization");
    dist->add_flag("--svg", svg, "also emit SVG heatmaps");

    // correlate
    auto* correlate = app.add_subcommand("correlate", "distance-transfer correlation");
    std::string dist_path;
    std::vector<std::string> score_paths;
    bool include_self = false, sweep = false;
    correlate->add_option("--dist", dist_path, "distance matrix CSV");
    correlate->add_option("--scores", score_paths, "transfer score CSVs")->required();
    correlate->add_flag("--include-self", include_self, "keep self-transfer pairs");
    correlate->add_flag("--sweep", sweep, "report all 14 base metrics from feature tables");
    correlate->add_option("--syntax", feature_paths[FeatureClass::Syntax], "syntax CSV");
    correlate->add_option("--phonology", feature_paths[FeatureClass::Phonology],
                          "phonology CSV");
    correlate->add_option("--inventory", feature_paths[FeatureClass::Inventory],
                          "inventory CSV");
    correlate->add_option("--fam", feature_paths[FeatureClass::Fam], "family CSV");
    correlate->add_option("--geo", feature_paths[FeatureClass::Geo], "geography CSV");

    // fit
    auto* fit = app.add_subcommand("fit", "fit simplex weights over component metrics");
    std::vector<std::string> component_paths;
    double grid_step = 0.05;
    bool preset = false;
    fit->add_option("--components", component_paths, "normalized component matrix CSVs");
    fit->add_option("--scores", score_paths, "transfer score CSVs");
    fit->add_option("--grid-step", grid_step, "simplex lattice resolution");
    fit->add_flag("--preset", preset, "emit the d_comb preset weights");

    // cluster
    auto* cluster = app.add_subcommand("cluster", "k-medoids language clustering");
    std::size_t k_override = 0, min_size = 3;
    cluster->add_option("--dist", dist_path, "distance matrix CSV")->required();
    cluster->add_option("--k", k_override, "fixed cluster count (default: select)");
    cluster->add_option("--min-size", min_size, "minimum cluster size for k selection");

    // graph
    auto* graph = app.add_subcommand("graph", "build the language relation graph");
    std::string clustering_path;
    graph->add_option("--clustering", clustering_path, "clustering JSON")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "synthetic adversarial training run");
    std::string spec_path, train_config_path, mode_name;
    std::vector<std::string> source_codes;
    simulate->add_option("--spec", spec_path, "scenario spec JSON")->required();
    simulate->add_option("--train-config", train_config_path, "train config JSON");
    simulate->add_option("--mode", mode_name, "erm | dann | grda");
    simulate->add_option("--sources", source_codes,
                         "labeled source domains (others become unlabeled)");

    // report
    auto* report = app.add_subcommand("report", "render delta tables");
    std::string table_path;
    report->add_option("--table", table_path, "delta table input CSV")->required();
    report->add_flag("--svg", svg, "also emit an SVG heatmap");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!common.config_path.empty()) {
            nlohmann::json j = nlohmann::json::parse(read_file(common.config_path));
            if (j.contains("out") && common.out == "out")
                common.out = j.at("out").get<std::string>();
            if (j.contains("seed") && common.seed == 0)
                common.seed = j.at("seed").get<std::uint64_t>();
        }
        if (dist->parsed())
            return run_dist(common, feature_paths, metric_names, !no_normalize, svg);
        if (correlate->parsed()) {
            if (sweep) return run_sweep(common, feature_paths, score_paths, include_self);
            if (dist_path.empty())
                throw ValidationError("correlate: --dist required unless --sweep");
            return run_correlate(common, dist_path, score_paths, include_self);
        }
        if (fit->parsed())
            return run_fit(common, component_paths, score_paths, grid_step, preset);
        if (cluster->parsed())
            return run_cluster(common, dist_path, k_override, min_size);
        if (graph->parsed()) return run_graph(common, clustering_path);
        if (simulate->parsed())
            return run_simulate(common, spec_path, train_config_path, mode_name,
                                source_codes);
        if (report->parsed()) return run_report(common, table_path, svg);
    } catch (const ValidationError& e) {
        std::cerr << "error (validation): " << e.what() << "\n";
        return 2;
    } catch (const ComputeError& e) {
        std::cerr << "error (compute): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
