#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ancl/errors.hpp"
#include "ancl/process_sim.hpp"
#include "ancl/rng.hpp"

namespace ancl {

/// A collection of equal-length series with ground-truth cluster labels
/// (contiguous ids from 0) and the implied cluster count.
struct LabeledCollection {
    std::vector<TimeSeries> series;
    std::vector<int> labels;
    int k = 0;
    std::string family;  // "ar", "garch", or "setar"
};

/// A sampled partition together with the prior quantities that produced it.
struct PartitionDraw {
    std::vector<int> labels;
    int k = 0;
    std::vector<double> weights;  // Dirichlet weights, aligned with canonical labels
    double concentration = 0.0;   // CRP concentration, when applicable
};

/// Uniform sampling bounds for the cluster-level process parameters.
struct ParameterRanges {
    double kappa_min = -1.0, kappa_max = 1.0;
    double sigma2_min = 0.1, sigma2_max = 2.0;
    double omega_min = 1e-6, omega_max = 1e-4;
    double garch_alpha_min = 0.01, garch_alpha_max = 0.30;
    double garch_beta_min = 0.70;  // upper bound is 1 - alpha_k
    std::vector<double> nu_choices = {3, 4, 5, 6, 7, 8, 10000};
    double setar_phi_min = -1.0, setar_phi_max = 1.0;
    double setar_threshold_min = -0.75, setar_threshold_max = 0.75;
};

/// Full description of one generating scenario. `defaults(id, T)` matches the
/// four canonical setups; individual fields can then be overridden (e.g. a
/// narrower collection-size range for quick studies).
struct ScenarioConfig {
    int scenario = 1;
    std::size_t series_length = 500;

    // Scenario 1 only.
    std::size_t n = 20;
    int k = 2;

    // Scenarios 2-4.
    std::size_t n_min = 10, n_max = 200;
    double concentration_rate = 1.0;  // exponential rate for the CRP concentration

    // Scenario 4 only: probability of the SETAR branch.
    double setar_mixture_prob = 0.5;

    ParameterRanges ranges;
    std::size_t ar_burn_in = kArBurnIn;
    std::size_t garch_burn_in = kGarchBurnIn;

    static ScenarioConfig defaults(int scenario, std::size_t series_length) {
        ScenarioConfig cfg;
        cfg.scenario = scenario;
        cfg.series_length = series_length;
        switch (scenario) {
            case 1:
                break;
            case 2:
            case 4:
                cfg.n_min = 10;
                cfg.n_max = 200;
                cfg.concentration_rate = 1.0;
                break;
            case 3:
                cfg.n_min = 10;
                cfg.n_max = 100;
                cfg.concentration_rate = 0.5;
                break;
            default:
                throw ConfigError("scenario id must be 1, 2, 3, or 4");
        }
        return cfg;
    }
};

// Rejection sampling never loops silently: after this many attempts the draw
// is abandoned with an error.
inline constexpr std::size_t kMaxRejectionAttempts = 1'000'000;

/// Renames labels to first-appearance order (0, 1, 2, ...), making draws
/// seed-reproducible regardless of how the sampler numbered its clusters.
/// Returns the old-id -> new-id map alongside the relabeled vector.
inline std::pair<std::vector<int>, std::unordered_map<int, int>>
relabel_first_appearance(const std::vector<int>& labels) {
    std::unordered_map<int, int> remap;
    std::vector<int> out(labels.size());
    int next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = remap.try_emplace(labels[i], next);
        if (inserted) ++next;
        out[i] = it->second;
    }
    return {std::move(out), std::move(remap)};
}

/// Partition of n items: weights ~ Dirichlet(1_K), labels i.i.d. categorical.
/// Draws realizing fewer than K distinct labels are rejected and fully
/// resampled (weights included). Returned weights are aligned with the
/// canonicalized label ids.
inline PartitionDraw sample_dirichlet_categorical(std::size_t n, int k, Rng& rng) {
    if (k < 2) throw ConfigError("sample_dirichlet_categorical: K must be at least 2");
    if (static_cast<std::size_t>(k) > n) throw ConfigError("sample_dirichlet_categorical: K must not exceed n");
    for (std::size_t attempt = 0; attempt < kMaxRejectionAttempts; ++attempt) {
        const std::vector<double> weights = rng.dirichlet_ones(static_cast<std::size_t>(k));
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.uniform();
            double cum = 0.0;
            int chosen = k - 1;
            for (int c = 0; c < k; ++c) {
                cum += weights[static_cast<std::size_t>(c)];
                if (u < cum) {
                    chosen = c;
                    break;
                }
            }
            labels[i] = chosen;
        }
        std::vector<bool> seen(static_cast<std::size_t>(k), false);
        int distinct = 0;
        for (const int l : labels) {
            if (!seen[static_cast<std::size_t>(l)]) {
                seen[static_cast<std::size_t>(l)] = true;
                ++distinct;
            }
        }
        if (distinct < k) continue;
        auto [canon, remap] = relabel_first_appearance(labels);
        std::vector<double> canon_weights(static_cast<std::size_t>(k));
        for (const auto& [old_id, new_id] : remap) {
            canon_weights[static_cast<std::size_t>(new_id)] = weights[static_cast<std::size_t>(old_id)];
        }
        PartitionDraw draw;
        draw.labels = std::move(canon);
        draw.k = k;
        draw.weights = std::move(canon_weights);
        return draw;
    }
    throw NumericError("sample_dirichlet_categorical: rejection sampling did not terminate");
}

/// One CRP seating pass without rejection; labels are in table-creation order.
inline std::vector<int> crp_partition_raw(std::size_t n, double concentration, Rng& rng) {
    if (concentration <= 0.0) throw ConfigError("crp: concentration must be positive");
    if (n == 0) throw ConfigError("crp: n must be positive");
    std::vector<int> labels(n);
    std::vector<double> table_sizes;
    labels[0] = 0;
    table_sizes.push_back(1.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double denom = static_cast<double>(i) + concentration;
        const double u = rng.uniform() * denom;
        double cum = 0.0;
        int chosen = static_cast<int>(table_sizes.size());  // new table unless an existing one wins
        for (std::size_t t = 0; t < table_sizes.size(); ++t) {
            cum += table_sizes[t];
            if (u < cum) {
                chosen = static_cast<int>(t);
                break;
            }
        }
        labels[i] = chosen;
        if (chosen == static_cast<int>(table_sizes.size())) {
            table_sizes.push_back(1.0);
        } else {
            table_sizes[static_cast<std::size_t>(chosen)] += 1.0;
        }
    }
    return labels;
}

/// CRP partition conditioned on K >= 2: single-cluster draws are discarded
/// and resampled.
inline PartitionDraw sample_crp(std::size_t n, double concentration, Rng& rng) {
    if (n < 2) throw ConfigError("sample_crp: n must be at least 2");
    for (std::size_t attempt = 0; attempt < kMaxRejectionAttempts; ++attempt) {
        std::vector<int> labels = crp_partition_raw(n, concentration, rng);
        const int k = 1 + *std::max_element(labels.begin(), labels.end());
        if (k < 2) continue;
        PartitionDraw draw;
        draw.labels = std::move(labels);  // seating order is already first-appearance order
        draw.k = k;
        draw.concentration = concentration;
        return draw;
    }
    throw NumericError("sample_crp: rejection sampling did not terminate");
}

namespace detail {

/// kappa ~ U[lo, hi] resampled on the (measure-zero) event |kappa| >= 1,
/// which would violate the Durbin-Levinson precondition.
inline double sample_open_kappa(double lo, double hi, Rng& rng) {
    double k = rng.uniform(lo, hi);
    while (std::abs(k) >= 1.0) k = rng.uniform(lo, hi);
    return k;
}

inline std::vector<ARSpec> sample_ar_specs(int k, const ParameterRanges& r, Rng& rng) {
    std::vector<ARSpec> specs(static_cast<std::size_t>(k));
    for (auto& spec : specs) {
        PACFSpec pacf;
        for (auto& kappa : pacf.kappa) kappa = sample_open_kappa(r.kappa_min, r.kappa_max, rng);
        spec.phi = durbin_levinson(pacf);
        spec.sigma2 = rng.uniform(r.sigma2_min, r.sigma2_max);
    }
    return specs;
}

inline std::vector<GARCHSpec> sample_garch_specs(int k, const ParameterRanges& r, Rng& rng) {
    std::vector<GARCHSpec> specs(static_cast<std::size_t>(k));
    for (auto& spec : specs) {
        do {
            spec.omega = rng.uniform(r.omega_min, r.omega_max);
            spec.alpha = rng.uniform(r.garch_alpha_min, r.garch_alpha_max);
            spec.beta = rng.uniform(r.garch_beta_min, 1.0 - spec.alpha);
        } while (spec.alpha + spec.beta >= 1.0);  // boundary hits only
    }
    return specs;
}

inline std::vector<SETARSpec> sample_setar_specs(int k, const ParameterRanges& r, Rng& rng) {
    std::vector<SETARSpec> specs(static_cast<std::size_t>(k));
    for (auto& spec : specs) {
        do {
            spec.phi_regime1 = rng.uniform(r.setar_phi_min, r.setar_phi_max);
            spec.phi_regime2 = rng.uniform(r.setar_phi_min, r.setar_phi_max);
        } while (std::max(std::abs(spec.phi_regime1), std::abs(spec.phi_regime2)) >= 1.0);
        spec.threshold_r = rng.uniform(r.setar_threshold_min, r.setar_threshold_max);
    }
    return specs;
}

inline double sample_nu(const ParameterRanges& r, Rng& rng) {
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(r.nu_choices.size()) - 1));
    return r.nu_choices[idx];
}

/// Collection size for the variable-n scenarios.
inline std::size_t sample_collection_size(const ScenarioConfig& cfg, Rng& rng) {
    return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(cfg.n_min),
                                                    static_cast<std::int64_t>(cfg.n_max)));
}

inline LabeledCollection assemble_ar(const PartitionDraw& draw, const std::vector<ARSpec>& specs,
                                     const ScenarioConfig& cfg, Rng& rng) {
    LabeledCollection coll;
    coll.labels = draw.labels;
    coll.k = draw.k;
    coll.family = "ar";
    coll.series.reserve(draw.labels.size());
    for (const int label : draw.labels) {
        coll.series.push_back(
            simulate_ar(specs[static_cast<std::size_t>(label)], cfg.series_length, cfg.ar_burn_in, rng));
    }
    return coll;
}

}  // namespace detail

/// Scenario 1: fixed n and K, Dirichlet-categorical partition, per-cluster
/// AR(3) specs from uniform partial autocorrelations.
inline LabeledCollection generate_scenario1(std::size_t n, int k, std::size_t series_length, Rng& rng,
                                            const ScenarioConfig* override_cfg = nullptr) {
    if (series_length < 10) throw ConfigError("generate_scenario1: series length must be at least 10");
    ScenarioConfig cfg = override_cfg ? *override_cfg : ScenarioConfig::defaults(1, series_length);
    cfg.series_length = series_length;
    const PartitionDraw draw = sample_dirichlet_categorical(n, k, rng);
    const auto specs = detail::sample_ar_specs(k, cfg.ranges, rng);
    return detail::assemble_ar(draw, specs, cfg, rng);
}

/// Scenario 2: n ~ U_D[n_min, n_max], CRP partition with exponential
/// concentration, AR(3) clusters as in Scenario 1.
inline LabeledCollection generate_scenario2(std::size_t series_length, Rng& rng,
                                            const ScenarioConfig* override_cfg = nullptr) {
    if (series_length < 10) throw ConfigError("generate_scenario2: series length must be at least 10");
    ScenarioConfig cfg = override_cfg ? *override_cfg : ScenarioConfig::defaults(2, series_length);
    cfg.series_length = series_length;
    const std::size_t n = detail::sample_collection_size(cfg, rng);
    const double concentration = rng.exponential(cfg.concentration_rate);
    const PartitionDraw draw = sample_crp(n, concentration, rng);
    const auto specs = detail::sample_ar_specs(draw.k, cfg.ranges, rng);
    return detail::assemble_ar(draw, specs, cfg, rng);
}

/// Scenario 3: CRP partition, cluster-level GARCH(1,1) coefficients, and
/// per-series degrees of freedom drawn from the finite candidate set (so tail
/// weight varies within clusters).
inline LabeledCollection generate_scenario3(std::size_t series_length, Rng& rng,
                                            const ScenarioConfig* override_cfg = nullptr) {
    if (series_length < 10) throw ConfigError("generate_scenario3: series length must be at least 10");
    ScenarioConfig cfg = override_cfg ? *override_cfg : ScenarioConfig::defaults(3, series_length);
    cfg.series_length = series_length;
    const std::size_t n = detail::sample_collection_size(cfg, rng);
    const double concentration = rng.exponential(cfg.concentration_rate);
    const PartitionDraw draw = sample_crp(n, concentration, rng);
    const auto specs = detail::sample_garch_specs(draw.k, cfg.ranges, rng);
    LabeledCollection coll;
    coll.labels = draw.labels;
    coll.k = draw.k;
    coll.family = "garch";
    coll.series.reserve(n);
    for (const int label : draw.labels) {
        GARCHSpec spec = specs[static_cast<std::size_t>(label)];
        spec.nu = detail::sample_nu(cfg.ranges, rng);
        coll.series.push_back(simulate_garch(spec, cfg.series_length, cfg.garch_burn_in, rng));
    }
    return coll;
}

/// Scenario 4: a coin picks either the Scenario 2 AR mechanism or the SETAR
/// scheme (CRP partition, per-cluster regime coefficients and threshold).
inline LabeledCollection generate_scenario4(std::size_t series_length, Rng& rng,
                                            const ScenarioConfig* override_cfg = nullptr) {
    if (series_length < 10) throw ConfigError("generate_scenario4: series length must be at least 10");
    ScenarioConfig cfg = override_cfg ? *override_cfg : ScenarioConfig::defaults(4, series_length);
    cfg.series_length = series_length;
    const bool use_setar = rng.uniform() < cfg.setar_mixture_prob;
    if (!use_setar) {
        ScenarioConfig ar_cfg = cfg;
        ar_cfg.scenario = 2;
        return generate_scenario2(series_length, rng, &ar_cfg);
    }
    const std::size_t n = detail::sample_collection_size(cfg, rng);
    const double concentration = rng.exponential(cfg.concentration_rate);
    const PartitionDraw draw = sample_crp(n, concentration, rng);
    const auto specs = detail::sample_setar_specs(draw.k, cfg.ranges, rng);
    LabeledCollection coll;
    coll.labels = draw.labels;
    coll.k = draw.k;
    coll.family = "setar";
    coll.series.reserve(n);
    for (const int label : draw.labels) {
        coll.series.push_back(simulate_setar(specs[static_cast<std::size_t>(label)], cfg.series_length,
                                             cfg.ar_burn_in, rng));
    }
    return coll;
}

/// Dispatch by scenario id.
inline LabeledCollection generate_collection(const ScenarioConfig& cfg, Rng& rng) {
    switch (cfg.scenario) {
        case 1: return generate_scenario1(cfg.n, cfg.k, cfg.series_length, rng, &cfg);
        case 2: return generate_scenario2(cfg.series_length, rng, &cfg);
        case 3: return generate_scenario3(cfg.series_length, rng, &cfg);
        case 4: return generate_scenario4(cfg.series_length, rng, &cfg);
        default: throw ConfigError("generate_collection: scenario id must be 1, 2, 3, or 4");
    }
}

}  // namespace ancl
