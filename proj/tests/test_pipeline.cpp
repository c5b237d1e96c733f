#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ancl/metrics.hpp"
#include "ancl/pipeline.hpp"

using namespace ancl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

ExperimentConfig tiny_experiment_config() {
    ExperimentConfig cfg;
    cfg.seed = 4242;
    cfg.seed_set = true;
    cfg.scenario = ScenarioConfig::defaults(1, 50);
    cfg.scenario.n = 10;
    cfg.scenario.k = 2;
    cfg.train.total_datasets = 30;
    cfg.evaluate.collections = 6;
    cfg.evaluate.kmeans_restarts = 20;
    cfg.evaluate.spectral_restarts = 10;
    return cfg;
}

}  // namespace

TEST_CASE("ingest_prices computes log-returns", "[pipeline]") {
    const auto dir = scratch_dir("ancl_ingest");
    const auto path = (dir / "prices.csv").string();
    write_text(path, "AAA,BBB\n100,5\n110,5\n121,5\n");
    const auto returns = ingest_prices(path);
    REQUIRE(returns.assets == std::vector<std::string>{"AAA", "BBB"});
    REQUIRE(returns.returns[0].size() == 2);
    REQUIRE(returns.returns[0][0] == Catch::Approx(std::log(1.1)).epsilon(1e-12));
    REQUIRE(returns.returns[0][1] == Catch::Approx(std::log(1.1)).epsilon(1e-12));
    REQUIRE(returns.returns[1][0] == 0.0);
    REQUIRE(returns.returns[1][1] == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("ingest_prices reports the offending cell", "[pipeline]") {
    const auto dir = scratch_dir("ancl_ingest_err");

    const auto zero_path = (dir / "zero.csv").string();
    write_text(zero_path, "AAA,BBB\n100,5\n0,5\n");
    REQUIRE_THROWS_WITH(ingest_prices(zero_path),
                        Catch::Matchers::ContainsSubstring("row 3") &&
                            Catch::Matchers::ContainsSubstring("column 1") &&
                            Catch::Matchers::ContainsSubstring("AAA"));

    const auto ragged_path = (dir / "ragged.csv").string();
    write_text(ragged_path, "AAA,BBB\n100,5\n100\n");
    REQUIRE_THROWS_WITH(ingest_prices(ragged_path), Catch::Matchers::ContainsSubstring("line 3"));

    const auto text_path = (dir / "text.csv").string();
    write_text(text_path, "AAA,BBB\n100,5\nx,5\n");
    REQUIRE_THROWS_AS(ingest_prices(text_path), DataError);

    const auto short_path = (dir / "short.csv").string();
    write_text(short_path, "AAA,BBB\n100,5\n");
    REQUIRE_THROWS_AS(ingest_prices(short_path), DataError);

    fs::remove_all(dir);
}

TEST_CASE("experiment config echo round-trips exactly", "[pipeline]") {
    ExperimentConfig cfg = tiny_experiment_config();
    cfg.scenario = ScenarioConfig::defaults(3, 300);
    cfg.scenario.n_max = 40;
    cfg.features.kind = FeatureKind::Qaf;
    cfg.evaluate.methods = {"proposed_louvain", "ward"};
    cfg.model_out = "somewhere/model.ancl";

    const auto echo = experiment_config_to_json(cfg);
    const auto reparsed = experiment_config_from_json(echo);
    REQUIRE(experiment_config_to_json(reparsed) == echo);
    REQUIRE(reparsed.seed_set);
}

TEST_CASE("config validation failures", "[pipeline]") {
    ExperimentConfig cfg = tiny_experiment_config();
    cfg.evaluate.methods = {"mystery"};
    REQUIRE_THROWS_AS(run_scenario_experiment(cfg), ConfigError);

    cfg = tiny_experiment_config();
    cfg.seed_set = false;
    REQUIRE_THROWS_AS(run_scenario_experiment(cfg), ConfigError);

    cfg = tiny_experiment_config();
    cfg.evaluate.methods = {};
    REQUIRE_THROWS_AS(run_scenario_experiment(cfg), ConfigError);

    REQUIRE_THROWS_AS(scenario_from_json(ordered_json{{"id", 9}}), ConfigError);
}

TEST_CASE("experiment reruns are identical under the same seed", "[pipeline]") {
    const ExperimentConfig cfg = tiny_experiment_config();
    const auto r1 = run_scenario_experiment(cfg);
    const auto r2 = run_scenario_experiment(cfg);
    REQUIRE(r1.to_json().dump(2) == r2.to_json().dump(2));
}

TEST_CASE("orchestrated experiment equals hand-wired composition", "[pipeline]") {
    const auto dir = scratch_dir("ancl_handwired");
    ExperimentConfig cfg = tiny_experiment_config();
    cfg.evaluate.methods = {"proposed_spectral", "kmeans"};
    cfg.model_out = (dir / "model.ancl").string();
    const auto report = run_scenario_experiment(cfg);

    const Model model = load_model(cfg.model_out);
    const std::uint64_t eval_base = mix_seed(cfg.seed, kEvalStreamTag);
    std::vector<double> spectral_ari, kmeans_ari;
    for (std::size_t item = 0; item < cfg.evaluate.collections; ++item) {
        Rng rng(mix_seed(eval_base, item));
        const auto coll = generate_collection(cfg.scenario, rng);
        const auto features = extract_features(coll, cfg.features);
        const auto affinity = affinity_matrix(model.params, features);
        const auto spectral = spectral_cluster(affinity, coll.k, rng, cfg.evaluate.spectral_restarts);
        spectral_ari.push_back(ari(spectral.labels, coll.labels));
        const auto km = kmeans(to_points(features), coll.k, cfg.evaluate.kmeans_restarts, rng);
        kmeans_ari.push_back(ari(km.labels, coll.labels));
    }
    REQUIRE(report.methods[0].ari_values == spectral_ari);
    REQUIRE(report.methods[1].ari_values == kmeans_ari);
    fs::remove_all(dir);
}

TEST_CASE("baselines-only experiments never touch model files", "[pipeline]") {
    ExperimentConfig cfg = tiny_experiment_config();
    cfg.evaluate.methods = {"kmeans", "ward"};
    cfg.model_in = "/nonexistent/never_loaded.ancl";
    const auto report = run_scenario_experiment(cfg);
    REQUIRE(report.methods.size() == 2);
    REQUIRE(report.training_loss_trace.empty());
    REQUIRE(report.comparisons.empty());
    for (const auto& m : report.methods) REQUIRE(m.ari_values.size() == cfg.evaluate.collections);
}

TEST_CASE("experiment report carries comparisons for proposed methods", "[pipeline]") {
    ExperimentConfig cfg = tiny_experiment_config();
    const auto report = run_scenario_experiment(cfg);
    REQUIRE(report.methods.size() == 5);
    // Two proposed variants against three baselines.
    REQUIRE(report.comparisons.size() == 6);
    for (const auto& row : report.comparisons) {
        REQUIRE(row.stats.prop_a_wins + row.stats.prop_b_wins + row.stats.prop_ties ==
                Catch::Approx(1.0).margin(1e-12));
        REQUIRE(row.stats.p_value >= 0.0);
        REQUIRE(row.stats.p_value <= 1.0);
    }
}

TEST_CASE("model layout mismatch is rejected", "[pipeline]") {
    const auto dir = scratch_dir("ancl_layout");
    ExperimentConfig cfg = tiny_experiment_config();
    cfg.model_out = (dir / "model.ancl").string();
    run_scenario_experiment(cfg);

    ExperimentConfig other = cfg;
    other.model_in = cfg.model_out;
    other.model_out.clear();
    other.features.lags = {1, 2};
    REQUIRE_THROWS_AS(run_scenario_experiment(other), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("collection csv round-trips", "[pipeline]") {
    const auto dir = scratch_dir("ancl_coll");
    Rng rng(3030);
    const auto coll = generate_scenario1(8, 2, 20, rng);
    const auto path = (dir / "c.csv").string();
    write_collection_csv(path, coll);
    const auto loaded = read_collection_csv(path);
    REQUIRE(loaded.labels == coll.labels);
    REQUIRE(loaded.k == coll.k);
    REQUIRE(loaded.series == coll.series);
    fs::remove_all(dir);
}

TEST_CASE("feature and affinity csv round-trips", "[pipeline]") {
    const auto dir = scratch_dir("ancl_iocsv");
    Rng rng(3131);

    FeatureSpec spec;
    PointSet rows;
    std::vector<int> labels;
    for (int i = 0; i < 7; ++i) {
        rows.push_back({rng.normal(), rng.normal(), rng.normal()});
        labels.push_back(i % 2);
    }
    const auto fpath = (dir / "f.csv").string();
    write_feature_csv(fpath, spec.component_names(), rows, nullptr, &labels);
    const auto loaded = read_feature_csv(fpath);
    REQUIRE(loaded.columns == spec.component_names());
    REQUIRE(loaded.labels == labels);
    REQUIRE(loaded.rows == rows);

    AffinityMatrix a(5);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) a.set_pair(i, j, rng.uniform());
    }
    const auto apath = (dir / "a.csv").string();
    write_affinity_csv(apath, a);
    const auto b = read_affinity_csv(apath);
    REQUIRE(b.values == a.values);
    fs::remove_all(dir);
}

TEST_CASE("application pipeline recovers a constructed volatility panel", "[pipeline][heavy]") {
    const auto dir = scratch_dir("ancl_app");

    // Train a small quantile-feature model on the volatility scenario.
    ExperimentConfig train_cfg;
    train_cfg.seed = 97531;
    train_cfg.seed_set = true;
    train_cfg.scenario = ScenarioConfig::defaults(3, 2000);
    train_cfg.scenario.n_min = 10;
    train_cfg.scenario.n_max = 30;
    train_cfg.features.kind = FeatureKind::Qaf;
    train_cfg.train.total_datasets = 3000;
    train_cfg.model_out = (dir / "model.ancl").string();
    obtain_model(train_cfg);

    // Panel: three volatility regimes, ten assets each, chosen so their
    // quantile-feature signatures are strongly and evenly separated (shock
    // size and persistence both vary across regimes).
    const GARCHSpec regimes[] = {
        {5e-5, 0.02, 0.55, 10000.0},
        {2e-5, 0.25, 0.74, 10000.0},
        {1e-6, 0.30, 0.45, 10000.0},
    };
    Rng panel_rng(86420);
    std::vector<int> truth;
    std::vector<TimeSeries> return_series;
    for (int regime = 0; regime < 3; ++regime) {
        for (int asset = 0; asset < 10; ++asset) {
            return_series.push_back(simulate_garch(regimes[regime], 5000, 1000, panel_rng));
            truth.push_back(regime);
        }
    }
    // Prices from compounded returns; the app re-derives the returns.
    std::ofstream prices(dir / "prices.csv");
    for (std::size_t i = 0; i < return_series.size(); ++i) {
        prices << "A" << i << (i + 1 < return_series.size() ? ',' : '\n');
    }
    std::vector<double> level(return_series.size(), 100.0);
    for (std::size_t t = 0; t <= 5000; ++t) {
        for (std::size_t i = 0; i < return_series.size(); ++i) {
            if (t > 0) level[i] *= std::exp(return_series[i][t - 1]);
            prices << detail::format_double(level[i]) << (i + 1 < return_series.size() ? ',' : '\n');
        }
    }
    prices.close();

    AppConfig app_cfg;
    app_cfg.seed = 13579;
    app_cfg.seed_set = true;
    app_cfg.prices_csv = (dir / "prices.csv").string();
    app_cfg.model_path = train_cfg.model_out;
    const auto result = run_application(app_cfg);
    REQUIRE(result.assets.size() == 30);
    REQUIRE(ari(result.partition.labels, truth) >= 0.8);

    // Override skips the elbow choice.
    AppConfig forced = app_cfg;
    forced.k_override = 2;
    const auto forced_result = run_application(forced);
    REQUIRE(forced_result.chosen_k == 2);
    REQUIRE(forced_result.elbow.suggested_k == result.elbow.suggested_k);

    fs::remove_all(dir);
}

TEST_CASE("application handles the 50-asset panel shape end to end", "[pipeline][heavy]") {
    const auto dir = scratch_dir("ancl_app_shape");

    ExperimentConfig train_cfg;
    train_cfg.seed = 2468;
    train_cfg.seed_set = true;
    train_cfg.scenario = ScenarioConfig::defaults(3, 500);
    train_cfg.scenario.n_min = 10;
    train_cfg.scenario.n_max = 20;
    train_cfg.features.kind = FeatureKind::Qaf;
    train_cfg.train.total_datasets = 50;
    train_cfg.model_out = (dir / "model.ancl").string();
    obtain_model(train_cfg);

    // 50 series of length 5281 after the return transform, as in the target
    // application shape.
    Rng rng(1357);
    std::ofstream prices(dir / "prices.csv");
    for (int i = 0; i < 50; ++i) prices << "T" << i << (i + 1 < 50 ? ',' : '\n');
    std::vector<double> level(50, 50.0);
    for (int t = 0; t < 5282; ++t) {
        for (int i = 0; i < 50; ++i) {
            if (t > 0) level[static_cast<std::size_t>(i)] *= std::exp(0.01 * rng.normal());
            prices << detail::format_double(level[static_cast<std::size_t>(i)]) << (i + 1 < 50 ? ',' : '\n');
        }
    }
    prices.close();

    AppConfig app_cfg;
    app_cfg.seed = 8642;
    app_cfg.seed_set = true;
    app_cfg.prices_csv = (dir / "prices.csv").string();
    app_cfg.model_path = train_cfg.model_out;
    const auto result = run_application(app_cfg);
    REQUIRE(result.assets.size() == 50);
    REQUIRE(result.features.size() == 50);
    REQUIRE(result.features.vectors[0].values.size() == 27);
    REQUIRE(result.affinity.n == 50);
    REQUIRE(result.chosen_k >= 1);
    fs::remove_all(dir);
}
