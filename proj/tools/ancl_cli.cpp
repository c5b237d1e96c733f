// Command-line front end for the amortized time-series clustering library:
// simulate scenario data, train and persist affinity networks, ingest price
// panels, extract partitions, and run the full evaluation protocol.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ancl/csv.hpp"
#include "ancl/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ancl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_config = true) {
    if (with_config) cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--seed", flags.seed, "master seed (overrides the config)");
    cmd->add_option("--out", flags.out_dir, "output directory");
}

fs::path ensure_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

ExperimentConfig load_experiment_config(const CommonFlags& flags) {
    if (flags.config_path.empty()) throw ConfigError("--config is required");
    ExperimentConfig cfg = experiment_config_from_json(load_json_file(flags.config_path));
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.seed_set = true;
    }
    if (!cfg.seed_set) throw ConfigError("a master seed is required (config \"seed\" or --seed)");
    return cfg;
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

FeatureDataset dataset_from_feature_csv(const FeatureCsv& csv) {
    FeatureDataset ds;
    // The spec is reconstructed only as far as inference needs it: the column
    // names fix the layout identity, the row width fixes the dimension.
    for (auto& row : csv.rows) ds.vectors.push_back(FeatureVector{row});
    ds.labels = csv.labels;
    return ds;
}

int cmd_simulate(const CommonFlags& flags, std::size_t count) {
    ExperimentConfig cfg = load_experiment_config(flags);
    if (count == 0) throw ConfigError("--count must be positive");
    const fs::path out = ensure_out_dir(flags.out_dir);
    const std::uint64_t base = mix_seed(cfg.seed, kTrainStreamTag);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(mix_seed(base, i));
        const LabeledCollection coll = generate_collection(cfg.scenario, rng);
        char name[32];
        std::snprintf(name, sizeof(name), "collection_%05zu.csv", i);
        write_collection_csv((out / name).string(), coll);
    }
    ordered_json manifest;
    manifest["seed"] = cfg.seed;
    manifest["count"] = count;
    manifest["scenario"] = scenario_to_json(cfg.scenario);
    write_json_file((out / "manifest.json").string(), manifest);
    std::cout << "wrote " << count << " collections to " << out.string() << "\n";
    return kExitOk;
}

int cmd_train(const CommonFlags& flags) {
    ExperimentConfig cfg = load_experiment_config(flags);
    const fs::path out = ensure_out_dir(flags.out_dir);
    if (cfg.model_out.empty()) cfg.model_out = (out / "model.ancl").string();

    const auto start = std::chrono::steady_clock::now();
    const auto [model, trace] = obtain_model(cfg);
    if (!trace.empty()) {
        double first = 0.0, last = 0.0;
        const std::size_t tenth = std::max<std::size_t>(1, trace.size() / 10);
        for (std::size_t i = 0; i < tenth; ++i) first += trace[i];
        for (std::size_t i = trace.size() - tenth; i < trace.size(); ++i) last += trace[i];
        std::cout << "trained on " << trace.size() << " datasets in " << seconds_since(start)
                  << " s; mean loss " << first / static_cast<double>(tenth) << " -> "
                  << last / static_cast<double>(tenth) << "\n";
    }
    std::cout << "model written to " << cfg.model_out << "\n";
    return kExitOk;
}

int cmd_infer(const CommonFlags& flags, const std::string& model_path, const std::string& features_path) {
    if (model_path.empty() || features_path.empty()) throw ConfigError("--model and --features are required");
    const Model model = load_model(model_path);
    const FeatureCsv csv = read_feature_csv(features_path);
    if (csv.columns != model.layout.component_names()) {
        throw ConfigError("feature columns in '" + features_path + "' do not match the model layout");
    }
    const fs::path out = ensure_out_dir(flags.out_dir);
    FeatureDataset ds = dataset_from_feature_csv(csv);
    ds.spec = model.layout;
    const AffinityMatrix a = affinity_matrix(model.params, ds);
    write_affinity_csv((out / "affinity.csv").string(), a);
    std::cout << "affinity matrix (" << a.n << "x" << a.n << ") written to " << (out / "affinity.csv").string()
              << "\n";
    return kExitOk;
}

int cmd_cluster(const CommonFlags& flags, const std::string& affinity_path, const std::string& features_path,
                const std::string& method, int k) {
    const bool graph_method = method == "spectral" || method == "louvain";
    const bool point_method = method == "kmeans" || method == "kmedoids" || method == "ward";
    if (!graph_method && !point_method) {
        throw ConfigError("--method must be spectral|louvain|kmeans|kmedoids|ward");
    }
    if (graph_method && affinity_path.empty()) throw ConfigError("--affinity is required for " + method);
    if (point_method && features_path.empty()) throw ConfigError("--features is required for " + method);
    if (method != "louvain" && k <= 0) throw ConfigError("--k is required for " + method);
    if (!flags.seed) throw ConfigError("--seed is required for cluster");

    Rng rng(*flags.seed);
    Partition part;
    std::vector<std::string> ids;
    if (graph_method) {
        const AffinityMatrix a = read_affinity_csv(affinity_path);
        part = method == "spectral" ? spectral_cluster(a, k, rng) : louvain(a, rng);
    } else {
        const FeatureCsv csv = read_feature_csv(features_path);
        ids = csv.ids;
        if (method == "kmeans") {
            part = kmeans(csv.rows, k, 200, rng);
        } else if (method == "kmedoids") {
            part = kmedoids(csv.rows, k, rng);
        } else {
            part = ward_hierarchical(csv.rows, k);
        }
    }
    const fs::path out = ensure_out_dir(flags.out_dir);
    write_partition_csv((out / "partition.csv").string(), part, ids.empty() ? nullptr : &ids);
    std::cout << "partition with " << part.k << " clusters written to " << (out / "partition.csv").string()
              << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonFlags& flags) {
    const ExperimentConfig cfg = load_experiment_config(flags);
    const fs::path out = ensure_out_dir(flags.out_dir);
    const auto start = std::chrono::steady_clock::now();
    const ExperimentReport report = run_scenario_experiment(cfg);
    write_json_file((out / "report.json").string(), report.to_json());
    write_ari_csv((out / "ari.csv").string(), report);
    std::cout << "experiment finished in " << seconds_since(start) << " s\n";
    for (const auto& m : report.methods) {
        std::cout << "  " << m.method << ": mean ARI " << m.mean << ", median " << m.median << "\n";
    }
    std::cout << "report written to " << (out / "report.json").string() << "\n";
    return kExitOk;
}

int cmd_ingest(const CommonFlags& flags, const std::string& prices_path) {
    if (prices_path.empty()) throw ConfigError("--prices is required");
    const ReturnsMatrix returns = ingest_prices(prices_path);
    const fs::path out = ensure_out_dir(flags.out_dir);
    std::ofstream file((out / "returns.csv").string(), std::ios::trunc);
    if (!file) throw DataError("cannot open returns.csv for writing");
    for (std::size_t c = 0; c < returns.assets.size(); ++c) {
        file << returns.assets[c] << (c + 1 < returns.assets.size() ? ',' : '\n');
    }
    const std::size_t rows = returns.returns.empty() ? 0 : returns.returns.front().size();
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t c = 0; c < returns.returns.size(); ++c) {
            file << detail::format_double(returns.returns[c][t])
                 << (c + 1 < returns.returns.size() ? ',' : '\n');
        }
    }
    std::cout << rows << " return rows for " << returns.assets.size() << " assets written to "
              << (out / "returns.csv").string() << "\n";
    return kExitOk;
}

int cmd_app(const CommonFlags& flags, int k_override_flag) {
    if (flags.config_path.empty()) throw ConfigError("--config is required");
    AppConfig cfg = app_config_from_json(load_json_file(flags.config_path));
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.seed_set = true;
    }
    if (k_override_flag > 0) cfg.k_override = k_override_flag;

    const auto start = std::chrono::steady_clock::now();
    const AppResult result = run_application(cfg);
    const fs::path out = ensure_out_dir(flags.out_dir);
    write_json_file((out / "report.json").string(), result.to_json());
    write_partition_csv((out / "partition.csv").string(), result.partition, &result.assets);
    write_feature_csv((out / "features.csv").string(), result.features.spec.component_names(),
                      to_points(result.features), &result.assets, &result.partition.labels);
    std::ofstream elbow_file((out / "elbow.csv").string(), std::ios::trunc);
    elbow_file << "k,wcss\n";
    for (std::size_t i = 0; i < result.elbow.wcss.size(); ++i) {
        elbow_file << (i + 1) << ',' << detail::format_double(result.elbow.wcss[i]) << '\n';
    }
    std::cout << "application pipeline finished in " << seconds_since(start) << " s\n";
    std::cout << "suggested K " << result.elbow.suggested_k << ", clustered " << result.assets.size()
              << " series into " << result.partition.k << " groups\n";
    std::cout << "report written to " << (out / "report.json").string() << "\n";
    return kExitOk;
}

int cmd_elbow(const CommonFlags& flags, const std::string& features_path, int k_max) {
    if (features_path.empty()) throw ConfigError("--features is required");
    if (!flags.seed) throw ConfigError("--seed is required for elbow");
    const FeatureCsv csv = read_feature_csv(features_path);
    Rng rng(*flags.seed);
    const ElbowResult result = elbow_wcss(csv.rows, k_max, rng);
    const fs::path out = ensure_out_dir(flags.out_dir);
    std::ofstream file((out / "elbow.csv").string(), std::ios::trunc);
    if (!file) throw DataError("cannot open elbow.csv for writing");
    file << "k,wcss\n";
    for (std::size_t i = 0; i < result.wcss.size(); ++i) {
        file << (i + 1) << ',' << detail::format_double(result.wcss[i]) << '\n';
    }
    std::cout << "suggested K " << result.suggested_k << "; curve written to " << (out / "elbow.csv").string()
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"amortized neural clustering of time series"};
    app.require_subcommand(1);

    CommonFlags simulate_flags, train_flags, infer_flags, cluster_flags, evaluate_flags, ingest_flags,
        app_flags, elbow_flags;

    auto* simulate = app.add_subcommand("simulate", "generate labeled collections to disk");
    add_common(simulate, simulate_flags);
    std::size_t simulate_count = 10;
    simulate->add_option("--count", simulate_count, "number of collections");

    auto* train_cmd = app.add_subcommand("train", "train an affinity network from a scenario");
    add_common(train_cmd, train_flags);

    auto* infer = app.add_subcommand("infer", "affinity matrix from a model and a feature CSV");
    add_common(infer, infer_flags, false);
    std::string infer_model, infer_features;
    infer->add_option("--model", infer_model, "model file");
    infer->add_option("--features", infer_features, "feature CSV");

    auto* cluster = app.add_subcommand("cluster", "extract a partition from affinities or features");
    add_common(cluster, cluster_flags, false);
    std::string cluster_affinity, cluster_features, cluster_method;
    int cluster_k = 0;
    cluster->add_option("--affinity", cluster_affinity, "affinity CSV (spectral, louvain)");
    cluster->add_option("--features", cluster_features, "feature CSV (kmeans, kmedoids, ward)");
    cluster->add_option("--method", cluster_method, "spectral|louvain|kmeans|kmedoids|ward")->required();
    cluster->add_option("--k", cluster_k, "number of clusters (ignored by louvain)");

    auto* evaluate = app.add_subcommand("evaluate", "full scenario experiment with baselines");
    add_common(evaluate, evaluate_flags);

    auto* ingest = app.add_subcommand("ingest", "prices CSV to log-returns CSV");
    add_common(ingest, ingest_flags, false);
    std::string ingest_prices_path;
    ingest->add_option("--prices", ingest_prices_path, "price panel CSV");

    auto* app_cmd = app.add_subcommand("app", "cluster a price panel end to end");
    add_common(app_cmd, app_flags);
    int app_k_override = 0;
    app_cmd->add_option("--k", app_k_override, "override the elbow suggestion");

    auto* elbow = app.add_subcommand("elbow", "WCSS curve and suggested K from features");
    add_common(elbow, elbow_flags, false);
    std::string elbow_features;
    int elbow_k_max = 8;
    elbow->add_option("--features", elbow_features, "feature CSV");
    elbow->add_option("--k-max", elbow_k_max, "largest K to evaluate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(simulate_flags, simulate_count);
        if (train_cmd->parsed()) return cmd_train(train_flags);
        if (infer->parsed()) return cmd_infer(infer_flags, infer_model, infer_features);
        if (cluster->parsed()) {
            return cmd_cluster(cluster_flags, cluster_affinity, cluster_features, cluster_method, cluster_k);
        }
        if (evaluate->parsed()) return cmd_evaluate(evaluate_flags);
        if (ingest->parsed()) return cmd_ingest(ingest_flags, ingest_prices_path);
        if (app_cmd->parsed()) return cmd_app(app_flags, app_k_override);
        if (elbow->parsed()) return cmd_elbow(elbow_flags, elbow_features, elbow_k_max);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
