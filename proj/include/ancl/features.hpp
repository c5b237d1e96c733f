#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "ancl/errors.hpp"
#include "ancl/scenario_gen.hpp"

namespace ancl {

enum class FeatureKind { Acf, Qaf };

inline std::string to_string(FeatureKind kind) { return kind == FeatureKind::Acf ? "acf" : "qaf"; }

inline FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "acf") return FeatureKind::Acf;
    if (s == "qaf") return FeatureKind::Qaf;
    throw ConfigError("unknown feature kind '" + s + "' (expected \"acf\" or \"qaf\")");
}

namespace detail {

inline std::string format_level(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", tau);
    return buf;
}

}  // namespace detail

/// Which statistics to extract per series: sample autocorrelations over the
/// lag grid, or quantile autocorrelations over the (level, level, lag) grid.
/// The component order is part of the contract: a trained network's input
/// layout must match between training and inference.
struct FeatureSpec {
    FeatureKind kind = FeatureKind::Acf;
    std::vector<int> lags = {1, 2, 3};
    std::vector<double> levels = {0.1, 0.5, 0.9};  // QAF only

    std::size_t dimension() const {
        return kind == FeatureKind::Acf ? lags.size() : levels.size() * levels.size() * lags.size();
    }

    /// Component names, e.g. "acf_2" or "qaf_0.1_0.9_3", in vector order
    /// (QAF entries ordered lexicographically by (tau, tau', lag)).
    std::vector<std::string> component_names() const {
        std::vector<std::string> names;
        names.reserve(dimension());
        if (kind == FeatureKind::Acf) {
            for (const int l : lags) names.push_back("acf_" + std::to_string(l));
        } else {
            for (const double tau : levels) {
                for (const double tau2 : levels) {
                    for (const int l : lags) {
                        names.push_back("qaf_" + detail::format_level(tau) + "_" + detail::format_level(tau2) +
                                        "_" + std::to_string(l));
                    }
                }
            }
        }
        return names;
    }

    void validate(std::size_t series_length) const {
        if (lags.empty()) throw ConfigError("feature spec: lag grid must be nonempty");
        for (std::size_t i = 0; i < lags.size(); ++i) {
            if (lags[i] <= 0) throw ConfigError("feature spec: lags must be positive");
            if (i > 0 && lags[i] <= lags[i - 1]) throw ConfigError("feature spec: lags must be strictly increasing");
        }
        if (static_cast<std::size_t>(lags.back()) >= series_length) {
            throw ConfigError("feature spec: max lag must be smaller than the series length");
        }
        if (kind == FeatureKind::Qaf) {
            if (levels.empty()) throw ConfigError("feature spec: level grid must be nonempty");
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (!(levels[i] > 0.0 && levels[i] < 1.0)) {
                    throw ConfigError("feature spec: levels must lie in (0, 1)");
                }
                if (i > 0 && levels[i] <= levels[i - 1]) {
                    throw ConfigError("feature spec: levels must be strictly increasing");
                }
            }
        }
    }

    bool operator==(const FeatureSpec& other) const = default;
};

struct FeatureVector {
    std::vector<double> values;
};

/// Feature vectors with a shared layout; labels carried through when the
/// source collection had them.
struct FeatureDataset {
    FeatureSpec spec;
    std::vector<FeatureVector> vectors;
    std::vector<int> labels;  // empty when absent

    std::size_t size() const { return vectors.size(); }
};

/// Sample autocorrelations rho(l) = sum_{t=1}^{T-l} (x_{t+l}-mean)(x_t-mean)
/// / sum_{t=1}^{T} (x_t-mean)^2; the common 1/T factors cancel. With this
/// normalization |rho(l)| <= 1 always.
inline std::vector<double> acf(const TimeSeries& series, const std::vector<int>& lags) {
    const std::size_t t_len = series.size();
    if (t_len == 0) throw DataError("acf: empty series");
    for (const int l : lags) {
        if (l < 0) throw ConfigError("acf: lags must be nonnegative");
        if (static_cast<std::size_t>(l) >= t_len) throw ConfigError("acf: lag must be smaller than the series length");
    }
    double mean = 0.0;
    for (const double x : series) mean += x;
    mean /= static_cast<double>(t_len);
    double denom = 0.0;
    for (const double x : series) denom += (x - mean) * (x - mean);
    if (denom == 0.0) throw DataError("acf: constant series has zero variance");
    std::vector<double> out;
    out.reserve(lags.size());
    for (const int l : lags) {
        const auto lag = static_cast<std::size_t>(l);
        double num = 0.0;
        for (std::size_t t = 0; t + lag < t_len; ++t) {
            num += (series[t + lag] - mean) * (series[t] - mean);
        }
        out.push_back(num / denom);
    }
    return out;
}

/// Empirical tau-quantile by linear interpolation between order statistics at
/// the fractional (1-indexed) position 1 + (T-1) tau.
inline double empirical_quantile(const TimeSeries& series, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("empirical_quantile: tau must lie in (0, 1)");
    if (series.empty()) throw DataError("empirical_quantile: empty series");
    std::vector<double> sorted(series);
    std::sort(sorted.begin(), sorted.end());
    const double pos = 1.0 + static_cast<double>(sorted.size() - 1) * tau;
    const auto lo = static_cast<std::size_t>(pos) - 1;
    const double frac = pos - std::floor(pos);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Quantile autocorrelations: for each (tau, tau') pair and lag l,
///   [ (1/T) sum_{t=1}^{T-l} I(x_t <= q_tau) I(x_{t+l} <= q_tau') - tau tau' ]
///   / sqrt(tau (1-tau) tau' (1-tau')),
/// with empirical quantiles and population centering, summed over T-l terms
/// but divided by T. Entries are ordered lexicographically by (tau, tau', l).
/// Indicators are well defined for constant series, so no degenerate-input
/// error arises here.
inline std::vector<double> qaf(const TimeSeries& series, const std::vector<double>& levels,
                               const std::vector<int>& lags) {
    const std::size_t t_len = series.size();
    if (t_len == 0) throw DataError("qaf: empty series");
    for (const int l : lags) {
        if (l <= 0) throw ConfigError("qaf: lags must be positive");
        if (static_cast<std::size_t>(l) >= t_len) throw ConfigError("qaf: lag must be smaller than the series length");
    }
    // One indicator array per level.
    std::vector<std::vector<unsigned char>> below(levels.size(), std::vector<unsigned char>(t_len));
    for (std::size_t a = 0; a < levels.size(); ++a) {
        const double q = empirical_quantile(series, levels[a]);
        for (std::size_t t = 0; t < t_len; ++t) below[a][t] = series[t] <= q ? 1 : 0;
    }
    std::vector<double> out;
    out.reserve(levels.size() * levels.size() * lags.size());
    for (std::size_t a = 0; a < levels.size(); ++a) {
        for (std::size_t b = 0; b < levels.size(); ++b) {
            const double tau = levels[a];
            const double tau2 = levels[b];
            const double scale = std::sqrt(tau * (1.0 - tau) * tau2 * (1.0 - tau2));
            for (const int l : lags) {
                const auto lag = static_cast<std::size_t>(l);
                std::size_t count = 0;
                for (std::size_t t = 0; t + lag < t_len; ++t) {
                    count += static_cast<std::size_t>(below[a][t] & below[b][t + lag]);
                }
                const double joint = static_cast<double>(count) / static_cast<double>(t_len);
                out.push_back((joint - tau * tau2) / scale);
            }
        }
    }
    return out;
}

inline FeatureVector extract_one(const TimeSeries& series, const FeatureSpec& spec) {
    FeatureVector v;
    v.values = spec.kind == FeatureKind::Acf ? acf(series, spec.lags) : qaf(series, spec.levels, spec.lags);
    return v;
}

/// Per-series extraction over a list of series; order preserved,
/// failures reported with the offending series index.
inline FeatureDataset extract_features(const std::vector<TimeSeries>& series, const FeatureSpec& spec) {
    std::size_t min_len = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        min_len = i == 0 ? series[i].size() : std::min(min_len, series[i].size());
    }
    if (!series.empty()) spec.validate(min_len);
    FeatureDataset out;
    out.spec = spec;
    out.vectors.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        try {
            out.vectors.push_back(extract_one(series[i], spec));
        } catch (const DataError& e) {
            throw DataError("series " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

/// Collection overload: labels are carried through.
inline FeatureDataset extract_features(const LabeledCollection& collection, const FeatureSpec& spec) {
    FeatureDataset out = extract_features(collection.series, spec);
    out.labels = collection.labels;
    return out;
}

}  // namespace ancl
