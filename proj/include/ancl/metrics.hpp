#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <unordered_map>
#include <vector>

#include "ancl/errors.hpp"

namespace ancl {

/// Hubert-Arabie adjusted Rand index between two labelings of the same items:
/// (Index - Expected) / (Max - Expected) over pair counts from the contingency
/// table. Returns 1 when the denominator degenerates (both partitions trivial
/// in the same way, e.g. both single-cluster).
inline double ari(const std::vector<int>& p, const std::vector<int>& q) {
    if (p.size() != q.size()) throw ConfigError("ari: partitions must have equal length");
    if (p.empty()) throw ConfigError("ari: partitions must be nonempty");
    const std::size_t n = p.size();

    std::unordered_map<int, int> pid, qid;
    std::vector<int> pc(n), qc(n);
    for (std::size_t i = 0; i < n; ++i) {
        pc[i] = pid.try_emplace(p[i], static_cast<int>(pid.size())).first->second;
        qc[i] = qid.try_emplace(q[i], static_cast<int>(qid.size())).first->second;
    }
    const std::size_t rows = pid.size(), cols = qid.size();
    std::vector<double> table(rows * cols, 0.0), row_sum(rows, 0.0), col_sum(cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        table[static_cast<std::size_t>(pc[i]) * cols + static_cast<std::size_t>(qc[i])] += 1.0;
        row_sum[static_cast<std::size_t>(pc[i])] += 1.0;
        col_sum[static_cast<std::size_t>(qc[i])] += 1.0;
    }
    const auto comb2 = [](double m) { return 0.5 * m * (m - 1.0); };
    double cells = 0.0, a = 0.0, b = 0.0;
    for (const double c : table) cells += comb2(c);
    for (const double r : row_sum) a += comb2(r);
    for (const double c : col_sum) b += comb2(c);
    const double total = comb2(static_cast<double>(n));
    if (total == 0.0) return 1.0;  // single item
    const double expected = a * b / total;
    const double max_index = 0.5 * (a + b);
    if (max_index == expected) return 1.0;
    return (cells - expected) / (max_index - expected);
}

/// Arithmetic mean and median (midpoint rule for even length).
inline std::pair<double, double> summarize(const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("summarize: empty list");
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    return {mean, median};
}

/// Per-replicate win/tie/loss proportions; p_value is filled by the caller
/// (see wilcoxon_signed_rank) when a significance test accompanies the counts.
struct ComparisonStats {
    double prop_a_wins = 0.0;
    double prop_b_wins = 0.0;
    double prop_ties = 0.0;
    double p_value = 1.0;
};

inline ComparisonStats pairwise_compare(const std::vector<double>& a, const std::vector<double>& b,
                                        double tie_tol = 1e-12) {
    if (a.size() != b.size()) throw ConfigError("pairwise_compare: lists must have equal length");
    if (a.empty()) throw ConfigError("pairwise_compare: lists must be nonempty");
    ComparisonStats stats;
    const double inv = 1.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) <= tie_tol) {
            stats.prop_ties += inv;
        } else if (a[i] > b[i]) {
            stats.prop_a_wins += inv;
        } else {
            stats.prop_b_wins += inv;
        }
    }
    return stats;
}

/// Two-sided Wilcoxon signed-rank p-value via the normal approximation with
/// continuity correction and tie-corrected variance; zero differences are
/// dropped. All-zero differences give p = 1.
inline double wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ConfigError("wilcoxon_signed_rank: lists must have equal length");
    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const std::size_t m = diffs.size();
    if (m == 0) return 1.0;

    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });

    std::vector<double> rank(m, 0.0);
    double tie_correction = 0.0;
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j + 1 < m && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg_rank;
        const auto ties = static_cast<double>(j - i + 1);
        tie_correction += ties * ties * ties - ties;
        i = j + 1;
    }

    double w_plus = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        if (diffs[t] > 0.0) w_plus += rank[t];
    }
    const auto md = static_cast<double>(m);
    const double mu = md * (md + 1.0) / 4.0;
    const double var = md * (md + 1.0) * (2.0 * md + 1.0) / 24.0 - tie_correction / 48.0;
    if (var <= 0.0) return 1.0;
    const double z = std::max(0.0, std::abs(w_plus - mu) - 0.5) / std::sqrt(var);
    const double p = std::erfc(z / std::sqrt(2.0));
    return std::min(1.0, std::max(0.0, p));
}

}  // namespace ancl
