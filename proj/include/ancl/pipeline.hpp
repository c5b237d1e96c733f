#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ancl/csv.hpp"
#include "ancl/errors.hpp"
#include "ancl/features.hpp"
#include "ancl/metrics.hpp"
#include "ancl/network.hpp"
#include "ancl/partition.hpp"
#include "ancl/scenario_gen.hpp"

namespace ancl {

using ordered_json = nlohmann::ordered_json;

// Seed-stream tags: every stage derives its own generator from the master
// seed, so stages can be reordered or skipped without disturbing each other.
inline constexpr std::uint64_t kTrainStreamTag = 1;
inline constexpr std::uint64_t kTrainInitTag = 2;
inline constexpr std::uint64_t kEvalStreamTag = 3;
inline constexpr std::uint64_t kAppTag = 4;

// ---------------------------------------------------------------------------
// Price ingestion.
// ---------------------------------------------------------------------------

/// Asset identifiers plus per-asset log-return series (column-major: one
/// vector per asset).
struct ReturnsMatrix {
    std::vector<std::string> assets;
    std::vector<TimeSeries> returns;
};

/// Reads a price panel (header of tickers, chronological rows of positive
/// prices) and converts each column to log-returns r_t = ln(P_t / P_{t-1}).
/// The output has one fewer row than the input.
inline ReturnsMatrix ingest_prices(const std::string& csv_path) {
    const CsvTable table = read_csv(csv_path);
    if (table.rows.size() < 2) {
        throw DataError("'" + csv_path + "': need at least 2 price rows to form returns");
    }
    const std::size_t assets = table.header.size();
    std::vector<std::vector<double>> prices(assets, std::vector<double>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < assets; ++c) {
            const double value =
                detail::parse_double(table.rows[r][c], r + 2, c + 1, "'" + csv_path + "'");
            if (!(value > 0.0) || !std::isfinite(value)) {
                throw DataError("'" + csv_path + "': nonpositive price at row " + std::to_string(r + 2) +
                                ", column " + std::to_string(c + 1) + " (" + table.header[c] + ")");
            }
            prices[c][r] = value;
        }
    }
    ReturnsMatrix out;
    out.assets = table.header;
    out.returns.resize(assets);
    for (std::size_t c = 0; c < assets; ++c) {
        out.returns[c].resize(prices[c].size() - 1);
        for (std::size_t t = 0; t + 1 < prices[c].size(); ++t) {
            out.returns[c][t] = std::log(prices[c][t + 1] / prices[c][t]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration (single JSON document; CLI flags override fields).
// ---------------------------------------------------------------------------

struct EvaluateConfig {
    std::size_t collections = 200;
    std::vector<std::string> methods = {"proposed_spectral", "proposed_louvain", "kmeans", "kmedoids", "ward"};
    int kmeans_restarts = 200;
    int spectral_restarts = 50;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;  // a master seed is mandatory; no silent default
    ScenarioConfig scenario = ScenarioConfig::defaults(1, 500);
    FeatureSpec features;
    TrainConfig train;
    EvaluateConfig evaluate;
    std::string model_in;   // when set, load this model instead of training
    std::string model_out;  // when set, persist the trained model here
};

namespace detail {

inline void maybe_get(const ordered_json& j, const char* key, double& out) {
    if (j.contains(key)) out = j.at(key).get<double>();
}
inline void maybe_get(const ordered_json& j, const char* key, std::size_t& out) {
    if (j.contains(key)) out = j.at(key).get<std::size_t>();
}
inline void maybe_get(const ordered_json& j, const char* key, int& out) {
    if (j.contains(key)) out = j.at(key).get<int>();
}
inline void maybe_get(const ordered_json& j, const char* key, std::string& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
}

inline void range_to_json(ordered_json& j, const ParameterRanges& r) {
    j["kappa"] = {r.kappa_min, r.kappa_max};
    j["sigma2"] = {r.sigma2_min, r.sigma2_max};
    j["omega"] = {r.omega_min, r.omega_max};
    j["garch_alpha"] = {r.garch_alpha_min, r.garch_alpha_max};
    j["garch_beta_min"] = r.garch_beta_min;
    j["nu_choices"] = r.nu_choices;
    j["setar_phi"] = {r.setar_phi_min, r.setar_phi_max};
    j["setar_threshold"] = {r.setar_threshold_min, r.setar_threshold_max};
}

inline void range_from_json(const ordered_json& j, ParameterRanges& r) {
    const auto pair = [&](const char* key, double& lo, double& hi) {
        if (!j.contains(key)) return;
        const auto& arr = j.at(key);
        if (!arr.is_array() || arr.size() != 2) {
            throw ConfigError(std::string("config: '") + key + "' must be a [low, high] pair");
        }
        lo = arr[0].get<double>();
        hi = arr[1].get<double>();
        if (!(lo < hi)) throw ConfigError(std::string("config: '") + key + "' must satisfy low < high");
    };
    pair("kappa", r.kappa_min, r.kappa_max);
    pair("sigma2", r.sigma2_min, r.sigma2_max);
    pair("omega", r.omega_min, r.omega_max);
    pair("garch_alpha", r.garch_alpha_min, r.garch_alpha_max);
    maybe_get(j, "garch_beta_min", r.garch_beta_min);
    if (j.contains("nu_choices")) r.nu_choices = j.at("nu_choices").get<std::vector<double>>();
    pair("setar_phi", r.setar_phi_min, r.setar_phi_max);
    pair("setar_threshold", r.setar_threshold_min, r.setar_threshold_max);
}

}  // namespace detail

inline ordered_json scenario_to_json(const ScenarioConfig& s) {
    ordered_json j;
    j["id"] = s.scenario;
    j["series_length"] = s.series_length;
    j["n"] = s.n;
    j["k"] = s.k;
    j["n_min"] = s.n_min;
    j["n_max"] = s.n_max;
    j["concentration_rate"] = s.concentration_rate;
    j["setar_mixture_prob"] = s.setar_mixture_prob;
    j["ar_burn_in"] = s.ar_burn_in;
    j["garch_burn_in"] = s.garch_burn_in;
    ordered_json ranges;
    detail::range_to_json(ranges, s.ranges);
    j["ranges"] = ranges;
    return j;
}

inline ScenarioConfig scenario_from_json(const ordered_json& j) {
    int id = 1;
    detail::maybe_get(j, "id", id);
    std::size_t series_length = 500;
    detail::maybe_get(j, "series_length", series_length);
    ScenarioConfig s = ScenarioConfig::defaults(id, series_length);
    detail::maybe_get(j, "n", s.n);
    detail::maybe_get(j, "k", s.k);
    detail::maybe_get(j, "n_min", s.n_min);
    detail::maybe_get(j, "n_max", s.n_max);
    detail::maybe_get(j, "concentration_rate", s.concentration_rate);
    detail::maybe_get(j, "setar_mixture_prob", s.setar_mixture_prob);
    detail::maybe_get(j, "ar_burn_in", s.ar_burn_in);
    detail::maybe_get(j, "garch_burn_in", s.garch_burn_in);
    if (j.contains("ranges")) detail::range_from_json(j.at("ranges"), s.ranges);
    if (s.n_min > s.n_max) throw ConfigError("config: scenario n_min must not exceed n_max");
    if (s.concentration_rate <= 0.0) throw ConfigError("config: concentration_rate must be positive");
    return s;
}

inline ordered_json features_to_json(const FeatureSpec& f) {
    ordered_json j;
    j["kind"] = to_string(f.kind);
    j["lags"] = f.lags;
    j["levels"] = f.levels;
    return j;
}

inline FeatureSpec features_from_json(const ordered_json& j) {
    FeatureSpec f;
    if (j.contains("kind")) f.kind = feature_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("lags")) f.lags = j.at("lags").get<std::vector<int>>();
    if (j.contains("levels")) f.levels = j.at("levels").get<std::vector<double>>();
    return f;
}

inline ordered_json experiment_config_to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["scenario"] = scenario_to_json(c.scenario);
    j["features"] = features_to_json(c.features);
    ordered_json train;
    train["datasets"] = c.train.total_datasets;
    train["learning_rate"] = c.train.learning_rate;
    train["beta1"] = c.train.beta1;
    train["beta2"] = c.train.beta2;
    train["epsilon"] = c.train.epsilon;
    train["pair_sample"] = c.train.pair_sample;
    train["all_pairs_max_n"] = c.train.all_pairs_max_n;
    j["train"] = train;
    ordered_json eval;
    eval["collections"] = c.evaluate.collections;
    eval["methods"] = c.evaluate.methods;
    eval["kmeans_restarts"] = c.evaluate.kmeans_restarts;
    eval["spectral_restarts"] = c.evaluate.spectral_restarts;
    j["evaluate"] = eval;
    j["model_in"] = c.model_in;
    j["model_out"] = c.model_out;
    return j;
}

inline ExperimentConfig experiment_config_from_json(const ordered_json& j) {
    ExperimentConfig c;
    if (j.contains("seed")) {
        c.seed = j.at("seed").get<std::uint64_t>();
        c.seed_set = true;
    }
    if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
    if (j.contains("features")) c.features = features_from_json(j.at("features"));
    if (j.contains("train")) {
        const auto& t = j.at("train");
        detail::maybe_get(t, "datasets", c.train.total_datasets);
        detail::maybe_get(t, "learning_rate", c.train.learning_rate);
        detail::maybe_get(t, "beta1", c.train.beta1);
        detail::maybe_get(t, "beta2", c.train.beta2);
        detail::maybe_get(t, "epsilon", c.train.epsilon);
        detail::maybe_get(t, "pair_sample", c.train.pair_sample);
        detail::maybe_get(t, "all_pairs_max_n", c.train.all_pairs_max_n);
    }
    if (j.contains("evaluate")) {
        const auto& e = j.at("evaluate");
        detail::maybe_get(e, "collections", c.evaluate.collections);
        if (e.contains("methods")) c.evaluate.methods = e.at("methods").get<std::vector<std::string>>();
        detail::maybe_get(e, "kmeans_restarts", c.evaluate.kmeans_restarts);
        detail::maybe_get(e, "spectral_restarts", c.evaluate.spectral_restarts);
    }
    detail::maybe_get(j, "model_in", c.model_in);
    detail::maybe_get(j, "model_out", c.model_out);
    return c;
}

inline ordered_json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Training and evaluation.
// ---------------------------------------------------------------------------

inline PointSet to_points(const FeatureDataset& ds) {
    PointSet points;
    points.reserve(ds.size());
    for (const auto& v : ds.vectors) points.push_back(v.values);
    return points;
}

inline bool is_proposed_method(const std::string& method) { return method.rfind("proposed_", 0) == 0; }

inline void validate_methods(const std::vector<std::string>& methods) {
    if (methods.empty()) throw ConfigError("config: evaluate.methods must be nonempty");
    for (const auto& m : methods) {
        if (m != "proposed_spectral" && m != "proposed_louvain" && m != "kmeans" && m != "kmedoids" &&
            m != "ward") {
            throw ConfigError("config: unknown method '" + m + "'");
        }
    }
}

/// Simulated training stream: dataset i is generated from an independent seed
/// stream mixed from (master seed, item index), so workers could partition
/// the index range without changing the result.
inline std::function<FeatureDataset()> make_training_stream(const ScenarioConfig& scenario,
                                                            const FeatureSpec& features,
                                                            std::uint64_t master_seed) {
    const std::uint64_t base = mix_seed(master_seed, kTrainStreamTag);
    auto index = std::make_shared<std::uint64_t>(0);
    return [scenario, features, base, index]() {
        Rng rng(mix_seed(base, (*index)++));
        const LabeledCollection coll = generate_collection(scenario, rng);
        return extract_features(coll, features);
    };
}

/// Trains per the config, or loads `model_in` when set. The returned flag
/// says whether training happened (and a loss trace is meaningful).
inline std::pair<Model, std::vector<double>> obtain_model(const ExperimentConfig& cfg) {
    if (!cfg.model_in.empty()) {
        Model model = load_model(cfg.model_in);
        if (!(model.layout == cfg.features)) {
            throw ConfigError("model '" + cfg.model_in + "' has a different feature layout than the config");
        }
        return {std::move(model), {}};
    }
    cfg.features.validate(cfg.scenario.series_length);
    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(cfg.seed, kTrainInitTag);
    TrainResult result = train(make_training_stream(cfg.scenario, cfg.features, cfg.seed), tc);
    Model model{std::move(result.params), cfg.features};
    if (!cfg.model_out.empty()) save_model(model, cfg.model_out);
    return {std::move(model), std::move(result.loss_trace)};
}

struct MethodScores {
    std::string method;
    std::vector<double> ari_values;
    double mean = 0.0;
    double median = 0.0;
};

struct ComparisonRow {
    std::string a;
    std::string b;
    ComparisonStats stats;
};

struct ExperimentReport {
    ordered_json config_echo;
    std::uint64_t seed = 0;
    std::vector<MethodScores> methods;
    std::vector<ComparisonRow> comparisons;
    std::vector<double> training_loss_trace;  // empty when a model was loaded

    ordered_json to_json() const {
        ordered_json j;
        j["config"] = config_echo;
        j["seed"] = seed;
        ordered_json names = ordered_json::array();
        for (const auto& m : methods) names.push_back(m.method);
        j["methods"] = names;
        ordered_json summary;
        for (const auto& m : methods) {
            ordered_json s;
            s["mean"] = m.mean;
            s["median"] = m.median;
            summary[m.method] = s;
        }
        j["summary"] = summary;
        ordered_json comps = ordered_json::array();
        for (const auto& row : comparisons) {
            ordered_json c;
            c["a"] = row.a;
            c["b"] = row.b;
            c["a_wins"] = row.stats.prop_a_wins;
            c["b_wins"] = row.stats.prop_b_wins;
            c["ties"] = row.stats.prop_ties;
            c["p_value"] = row.stats.p_value;
            comps.push_back(c);
        }
        j["comparisons"] = comps;
        ordered_json ari_lists;
        for (const auto& m : methods) ari_lists[m.method] = m.ari_values;
        j["ari"] = ari_lists;
        if (!training_loss_trace.empty()) {
            double first = 0.0, last = 0.0;
            const std::size_t tenth = std::max<std::size_t>(1, training_loss_trace.size() / 10);
            for (std::size_t i = 0; i < tenth; ++i) first += training_loss_trace[i];
            for (std::size_t i = training_loss_trace.size() - tenth; i < training_loss_trace.size(); ++i) {
                last += training_loss_trace[i];
            }
            ordered_json t;
            t["datasets"] = training_loss_trace.size();
            t["mean_loss_first_tenth"] = first / static_cast<double>(tenth);
            t["mean_loss_last_tenth"] = last / static_cast<double>(tenth);
            j["training"] = t;
        }
        return j;
    }
};

/// One evaluation item: cluster a fresh collection with every configured
/// method and score each against the ground truth. K-requiring methods are
/// given the true K; Louvain is not.
inline void evaluate_one_collection(const LabeledCollection& coll, const FeatureDataset& features,
                                    const Model* model, const EvaluateConfig& eval, Rng& rng,
                                    std::vector<MethodScores>& scores) {
    const int true_k = coll.k;
    const PointSet points = to_points(features);
    AffinityMatrix affinity;
    if (model) affinity = affinity_matrix(model->params, features);

    for (auto& slot : scores) {
        Partition part;
        if (slot.method == "proposed_spectral") {
            part = spectral_cluster(affinity, true_k, rng, eval.spectral_restarts);
        } else if (slot.method == "proposed_louvain") {
            part = louvain(affinity, rng);
        } else if (slot.method == "kmeans") {
            part = kmeans(points, true_k, eval.kmeans_restarts, rng);
        } else if (slot.method == "kmedoids") {
            part = kmedoids(points, true_k, rng);
        } else {
            part = ward_hierarchical(points, true_k);
        }
        slot.ari_values.push_back(ari(part.labels, coll.labels));
    }
}

/// Full scenario experiment: (train or load) -> evaluate on fresh collections
/// -> score -> aggregate -> pairwise comparisons of each proposed variant
/// against each baseline.
inline ExperimentReport run_scenario_experiment(const ExperimentConfig& cfg) {
    if (!cfg.seed_set) throw ConfigError("config: a master seed is required");
    validate_methods(cfg.evaluate.methods);
    if (cfg.evaluate.collections == 0) throw ConfigError("config: evaluate.collections must be positive");
    cfg.features.validate(cfg.scenario.series_length);

    bool needs_model = false;
    for (const auto& m : cfg.evaluate.methods) needs_model = needs_model || is_proposed_method(m);

    ExperimentReport report;
    report.config_echo = experiment_config_to_json(cfg);
    report.seed = cfg.seed;

    Model model;
    if (needs_model) {
        auto [m, trace] = obtain_model(cfg);
        model = std::move(m);
        report.training_loss_trace = std::move(trace);
    }

    for (const auto& name : cfg.evaluate.methods) report.methods.push_back({name, {}, 0.0, 0.0});

    const std::uint64_t eval_base = mix_seed(cfg.seed, kEvalStreamTag);
    for (std::size_t item = 0; item < cfg.evaluate.collections; ++item) {
        Rng rng(mix_seed(eval_base, item));
        LabeledCollection coll;
        FeatureDataset features;
        try {
            coll = generate_collection(cfg.scenario, rng);
            features = extract_features(coll, cfg.features);
            evaluate_one_collection(coll, features, needs_model ? &model : nullptr, cfg.evaluate, rng,
                                    report.methods);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw NumericError("evaluation item " + std::to_string(item) + ": " + e.what());
        }
    }

    for (auto& m : report.methods) {
        const auto [mean, median] = summarize(m.ari_values);
        m.mean = mean;
        m.median = median;
    }
    for (const auto& a : report.methods) {
        if (!is_proposed_method(a.method)) continue;
        for (const auto& b : report.methods) {
            if (is_proposed_method(b.method)) continue;
            ComparisonRow row;
            row.a = a.method;
            row.b = b.method;
            row.stats = pairwise_compare(a.ari_values, b.ari_values);
            row.stats.p_value = wilcoxon_signed_rank(a.ari_values, b.ari_values);
            report.comparisons.push_back(std::move(row));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Application pipeline: prices -> returns -> features -> affinity -> elbow ->
// spectral partition.
// ---------------------------------------------------------------------------

struct AppConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string prices_csv;
    std::string model_path;
    int elbow_k_max = 8;
    int elbow_restarts = 50;
    int k_override = 0;  // 0 means use the elbow suggestion
    int spectral_restarts = 50;
};

inline AppConfig app_config_from_json(const ordered_json& j) {
    AppConfig c;
    if (j.contains("seed")) {
        c.seed = j.at("seed").get<std::uint64_t>();
        c.seed_set = true;
    }
    detail::maybe_get(j, "prices_csv", c.prices_csv);
    detail::maybe_get(j, "model", c.model_path);
    detail::maybe_get(j, "elbow_k_max", c.elbow_k_max);
    detail::maybe_get(j, "elbow_restarts", c.elbow_restarts);
    detail::maybe_get(j, "k_override", c.k_override);
    detail::maybe_get(j, "spectral_restarts", c.spectral_restarts);
    return c;
}

inline ordered_json app_config_to_json(const AppConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["prices_csv"] = c.prices_csv;
    j["model"] = c.model_path;
    j["elbow_k_max"] = c.elbow_k_max;
    j["elbow_restarts"] = c.elbow_restarts;
    j["k_override"] = c.k_override;
    j["spectral_restarts"] = c.spectral_restarts;
    return j;
}

struct AppResult {
    ordered_json config_echo;
    std::vector<std::string> assets;
    FeatureDataset features;
    AffinityMatrix affinity;
    ElbowResult elbow;
    int chosen_k = 0;
    Partition partition;

    ordered_json to_json() const {
        ordered_json j;
        j["config"] = config_echo;
        j["n_series"] = assets.size();
        j["suggested_k"] = elbow.suggested_k;
        j["chosen_k"] = chosen_k;
        j["wcss"] = elbow.wcss;
        ordered_json clusters = ordered_json::array();
        for (int c = 0; c < partition.k; ++c) {
            ordered_json members = ordered_json::array();
            for (std::size_t i = 0; i < assets.size(); ++i) {
                if (partition.labels[i] == c) members.push_back(assets[i]);
            }
            ordered_json entry;
            entry["cluster"] = c;
            entry["size"] = members.size();
            entry["members"] = members;
            clusters.push_back(entry);
        }
        j["clusters"] = clusters;
        return j;
    }
};

inline AppResult run_application(const AppConfig& cfg) {
    if (!cfg.seed_set) throw ConfigError("app config: a master seed is required");
    if (cfg.prices_csv.empty()) throw ConfigError("app config: prices_csv is required");
    if (cfg.model_path.empty()) throw ConfigError("app config: model is required");
    if (cfg.k_override < 0) throw ConfigError("app config: k_override must be nonnegative");

    const Model model = load_model(cfg.model_path);
    const ReturnsMatrix returns = ingest_prices(cfg.prices_csv);

    AppResult result;
    result.config_echo = app_config_to_json(cfg);
    result.assets = returns.assets;
    result.features = extract_features(returns.returns, model.layout);
    result.affinity = affinity_matrix(model.params, result.features);

    Rng rng(mix_seed(cfg.seed, kAppTag));
    const PointSet points = to_points(result.features);
    result.elbow = elbow_wcss(points, cfg.elbow_k_max, rng, cfg.elbow_restarts);
    result.chosen_k = cfg.k_override > 0 ? cfg.k_override : result.elbow.suggested_k;
    result.partition = spectral_cluster(result.affinity, result.chosen_k, rng, cfg.spectral_restarts);
    return result;
}

/// Serializes a report JSON with a stable layout: 2-space indentation and a
/// trailing newline, so identical reports are byte-identical files.
inline void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write to '" + path + "' failed");
}

/// ARI lists as CSV (one column per method) for external plotting.
inline void write_ari_csv(const std::string& path, const ExperimentReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    std::string header;
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        header += report.methods[m].method;
        if (m + 1 < report.methods.size()) header += ',';
    }
    out << header << '\n';
    const std::size_t rows = report.methods.empty() ? 0 : report.methods.front().ari_values.size();
    for (std::size_t r = 0; r < rows; ++r) {
        std::string line;
        for (std::size_t m = 0; m < report.methods.size(); ++m) {
            line += detail::format_double(report.methods[m].ari_values[r]);
            if (m + 1 < report.methods.size()) line += ',';
        }
        out << line << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

}  // namespace ancl
