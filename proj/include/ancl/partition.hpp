#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ancl/affinity.hpp"
#include "ancl/errors.hpp"
#include "ancl/rng.hpp"
#include "ancl/scenario_gen.hpp"

namespace ancl {

/// A hard clustering: labels are contiguous ids from 0, K distinct values.
struct Partition {
    std::vector<int> labels;
    int k = 0;
};

inline Partition make_partition(const std::vector<int>& labels) {
    auto [canon, remap] = relabel_first_appearance(labels);
    Partition p;
    p.labels = std::move(canon);
    p.k = static_cast<int>(remap.size());
    return p;
}

using PointSet = std::vector<std::vector<double>>;

namespace detail {

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

struct KmeansRun {
    std::vector<int> labels;
    double wcss = 0.0;
};

/// One seeded K-means run: k-means++ style seeding, Lloyd iterations capped at
/// 300 or a relative WCSS change below 1e-9, empty clusters repaired by
/// reseeding them at the point farthest from its assigned center. Ties break
/// to the lowest index throughout.
inline KmeansRun kmeans_once(const PointSet& points, int k, Rng& rng) {
    const std::size_t n = points.size();
    const auto uk = static_cast<std::size_t>(k);
    std::vector<std::vector<double>> centers;
    centers.reserve(uk);
    centers.push_back(points[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 1)))]);
    std::vector<double> dist2(n);
    for (std::size_t c = 1; c < uk; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& center : centers) best = std::min(best, squared_distance(points[i], center));
            dist2[i] = best;
            total += best;
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double cum = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += dist2[i];
                if (r < cum) {
                    chosen = i;
                    break;
                }
            }
        } else {
            // All points coincide with existing centers; any choice is equivalent.
            chosen = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 1)));
        }
        centers.push_back(points[chosen]);
    }

    std::vector<int> labels(n, 0);
    double prev_wcss = std::numeric_limits<double>::infinity();
    double wcss = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
        wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                const double d = squared_distance(points[i], centers[static_cast<std::size_t>(c)]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            labels[i] = best_c;
            wcss += best;
        }

        std::vector<std::size_t> counts(uk, 0);
        for (const int l : labels) ++counts[static_cast<std::size_t>(l)];
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            // Repair: move the point farthest from its center into the empty cluster.
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = squared_distance(points[i], centers[static_cast<std::size_t>(labels[i])]);
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            labels[worst_i] = c;
            counts[static_cast<std::size_t>(c)] = 1;
        }

        const std::size_t dim = points[0].size();
        for (auto& center : centers) std::fill(center.begin(), center.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& center = centers[static_cast<std::size_t>(labels[i])];
            for (std::size_t d = 0; d < dim; ++d) center[d] += points[i][d];
            ++counts[static_cast<std::size_t>(labels[i])];
        }
        for (std::size_t c = 0; c < uk; ++c) {
            if (counts[c] == 0) continue;
            for (auto& v : centers[c]) v /= static_cast<double>(counts[c]);
        }

        if (prev_wcss - wcss <= 1e-9 * std::max(1.0, prev_wcss) && iter > 0) break;
        prev_wcss = wcss;
    }

    // Final assignment cost against the converged centers.
    wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < k; ++c) {
            const double d = squared_distance(points[i], centers[static_cast<std::size_t>(c)]);
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        labels[i] = best_c;
        wcss += best;
    }
    return {std::move(labels), wcss};
}

inline KmeansRun kmeans_best(const PointSet& points, int k, int restarts, Rng& rng) {
    if (k < 1) throw ConfigError("kmeans: K must be positive");
    if (static_cast<std::size_t>(k) > points.size()) throw ConfigError("kmeans: K must not exceed n");
    if (restarts < 1) throw ConfigError("kmeans: restarts must be positive");
    KmeansRun best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        KmeansRun run = kmeans_once(points, k, rng);
        if (run.wcss < best.wcss) best = std::move(run);
    }
    return best;
}

}  // namespace detail

/// K-means with k-means++ seeding and multiple restarts; the restart with the
/// lowest WCSS wins (earliest restart on ties).
inline Partition kmeans(const PointSet& points, int k, int restarts, Rng& rng) {
    return make_partition(detail::kmeans_best(points, k, restarts, rng).labels);
}

/// WCSS of the best restart; used by the elbow rule and by tests.
inline double kmeans_wcss(const PointSet& points, int k, int restarts, Rng& rng) {
    return detail::kmeans_best(points, k, restarts, rng).wcss;
}

/// PAM K-medoids on Euclidean distances: greedy BUILD, then best-improvement
/// SWAP until no swap lowers the total within-cluster distance.
inline Partition kmedoids(const PointSet& points, int k, Rng& /*rng*/) {
    const std::size_t n = points.size();
    if (k < 1) throw ConfigError("kmedoids: K must be positive");
    if (static_cast<std::size_t>(k) > n) throw ConfigError("kmedoids: K must not exceed n");

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::sqrt(detail::squared_distance(points[i], points[j]));
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    const auto total_cost = [&](const std::vector<std::size_t>& medoids) {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const std::size_t m : medoids) best = std::min(best, dist[i * n + m]);
            cost += best;
        }
        return cost;
    };

    // BUILD
    std::vector<std::size_t> medoids;
    std::vector<bool> is_medoid(n, false);
    {
        double best = std::numeric_limits<double>::infinity();
        std::size_t first = 0;
        for (std::size_t c = 0; c < n; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += dist[i * n + c];
            if (s < best) {
                best = s;
                first = c;
            }
        }
        medoids.push_back(first);
        is_medoid[first] = true;
    }
    while (medoids.size() < static_cast<std::size_t>(k)) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t pick = 0;
        for (std::size_t c = 0; c < n; ++c) {
            if (is_medoid[c]) continue;
            medoids.push_back(c);
            const double cost = total_cost(medoids);
            medoids.pop_back();
            if (cost < best) {
                best = cost;
                pick = c;
            }
        }
        medoids.push_back(pick);
        is_medoid[pick] = true;
    }

    // SWAP
    double current = total_cost(medoids);
    for (;;) {
        double best_delta = -1e-12;
        std::size_t best_m = 0, best_h = 0;
        bool found = false;
        for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
            for (std::size_t h = 0; h < n; ++h) {
                if (is_medoid[h]) continue;
                const std::size_t old = medoids[mi];
                medoids[mi] = h;
                const double delta = total_cost(medoids) - current;
                medoids[mi] = old;
                if (delta < best_delta) {
                    best_delta = delta;
                    best_m = mi;
                    best_h = h;
                    found = true;
                }
            }
        }
        if (!found) break;
        is_medoid[medoids[best_m]] = false;
        medoids[best_m] = best_h;
        is_medoid[best_h] = true;
        current += best_delta;
    }

    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
            const double d = dist[i * n + medoids[mi]];
            if (d < best) {
                best = d;
                best_c = static_cast<int>(mi);
            }
        }
        labels[i] = best_c;
    }
    return make_partition(labels);
}

namespace detail {

struct WardTrace {
    Partition partition;
    std::vector<double> merge_costs;
};

/// Agglomerative Ward linkage via the Lance-Williams update on squared
/// Euclidean inter-cluster distances, merging the cheapest pair until K
/// clusters remain. Merge costs are recorded for monotonicity checks.
inline WardTrace ward_with_costs(const PointSet& points, int k) {
    const std::size_t n = points.size();
    if (k < 1) throw ConfigError("ward: K must be positive");
    if (static_cast<std::size_t>(k) > n) throw ConfigError("ward: K must not exceed n");

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = squared_distance(points[i], points[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    std::vector<double> size(n, 1.0);
    std::vector<bool> active(n, true);
    std::vector<int> labels(n);
    std::iota(labels.begin(), labels.end(), 0);
    WardTrace trace;

    for (std::size_t remaining = n; remaining > static_cast<std::size_t>(k); --remaining) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!active[j]) continue;
                if (dist[i * n + j] < best) {
                    best = dist[i * n + j];
                    bi = i;
                    bj = j;
                }
            }
        }
        trace.merge_costs.push_back(best);
        // Merge bj into bi; update distances to every other active cluster.
        for (std::size_t other = 0; other < n; ++other) {
            if (!active[other] || other == bi || other == bj) continue;
            const double ni = size[bi], nj = size[bj], nk = size[other];
            const double denom = ni + nj + nk;
            const double updated = ((ni + nk) * dist[bi * n + other] + (nj + nk) * dist[bj * n + other] -
                                    nk * dist[bi * n + bj]) /
                                   denom;
            dist[bi * n + other] = updated;
            dist[other * n + bi] = updated;
        }
        size[bi] += size[bj];
        active[bj] = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] == static_cast<int>(bj)) labels[i] = static_cast<int>(bi);
        }
    }
    trace.partition = make_partition(labels);
    return trace;
}

}  // namespace detail

/// Agglomerative hierarchical clustering with Ward's linkage, cut at K groups.
inline Partition ward_hierarchical(const PointSet& points, int k) {
    return detail::ward_with_costs(points, k).partition;
}

/// Spectral clustering in the Ng-Jordan-Weiss form: symmetric normalized
/// Laplacian, eigenvectors of the K smallest eigenvalues, rows normalized to
/// unit length (zero rows left as zero), then seeded K-means on the rows.
inline Partition spectral_cluster(const AffinityMatrix& a, int k, Rng& rng, int kmeans_restarts = 50) {
    const std::size_t n = a.n;
    if (k < 1) throw ConfigError("spectral_cluster: K must be positive");
    if (static_cast<std::size_t>(k) > n) throw ConfigError("spectral_cluster: K must not exceed n");

    Eigen::MatrixXd w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a.at(i, j);
    }
    Eigen::VectorXd inv_sqrt_degree(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = w.row(static_cast<Eigen::Index>(i)).sum();
        inv_sqrt_degree(static_cast<Eigen::Index>(i)) = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    Eigen::MatrixXd laplacian = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) -
                                inv_sqrt_degree.asDiagonal() * w * inv_sqrt_degree.asDiagonal();
    // Enforce exact symmetry before the solver; floating-point products can
    // break it in the last bit.
    laplacian = 0.5 * (laplacian + laplacian.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() != Eigen::Success) throw NumericError("spectral_cluster: eigendecomposition failed");
    const Eigen::MatrixXd embedding = solver.eigenvectors().leftCols(k);  // ascending eigenvalues

    PointSet rows(n, std::vector<double>(static_cast<std::size_t>(k), 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double norm = embedding.row(static_cast<Eigen::Index>(i)).norm();
        for (int c = 0; c < k; ++c) {
            const double v = embedding(static_cast<Eigen::Index>(i), c);
            rows[i][static_cast<std::size_t>(c)] = norm > 0.0 ? v / norm : 0.0;
        }
    }
    return kmeans(rows, k, kmeans_restarts, rng);
}

/// Weighted modularity (resolution 1) of a labeling over the graph whose edge
/// weights are the off-diagonal affinities.
inline double modularity(const AffinityMatrix& a, const std::vector<int>& labels) {
    const std::size_t n = a.n;
    if (labels.size() != n) throw ConfigError("modularity: label count must match matrix size");
    double two_m = 0.0;
    std::vector<double> degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            degree[i] += a.at(i, j);
        }
        two_m += degree[i];
    }
    if (two_m == 0.0) return 0.0;
    std::unordered_map<int, double> tot, internal;
    for (std::size_t i = 0; i < n; ++i) {
        tot[labels[i]] += degree[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && labels[i] == labels[j]) internal[labels[i]] += a.at(i, j);
        }
    }
    double q = 0.0;
    for (const auto& [c, t] : tot) {
        const double in_c = internal.count(c) ? internal.at(c) : 0.0;
        q += in_c / two_m - (t / two_m) * (t / two_m);
    }
    return q;
}

namespace detail {

struct LouvainGraph {
    std::vector<std::vector<std::pair<int, double>>> adjacency;  // neighbor, weight (no self entries)
    std::vector<double> self_loop;                               // aggregated intra-community weight
    std::vector<double> degree;                                  // sum of incident weights, self-loops twice
    double two_m = 0.0;

    explicit LouvainGraph(std::size_t n) : adjacency(n), self_loop(n, 0.0), degree(n, 0.0) {}

    void finalize() {
        two_m = 0.0;
        for (std::size_t i = 0; i < adjacency.size(); ++i) {
            degree[i] = 2.0 * self_loop[i];
            for (const auto& [j, w] : adjacency[i]) degree[i] += w;
            two_m += degree[i];
        }
    }
};

/// One local-move phase: seeded sweep order per pass, moves applied while any
/// strictly positive modularity gain exists; equal gains break to the lowest
/// community id.
inline bool louvain_local_moves(const LouvainGraph& g, std::vector<int>& community, Rng& rng) {
    const std::size_t n = g.adjacency.size();
    std::vector<double> community_total(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) community_total[static_cast<std::size_t>(community[i])] += g.degree[i];

    const double m = 0.5 * g.two_m;
    bool any_move = false;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    bool moved_this_pass = true;
    while (moved_this_pass) {
        moved_this_pass = false;
        rng.shuffle(order);
        for (const int node : order) {
            const auto u = static_cast<std::size_t>(node);
            const int home = community[u];
            std::unordered_map<int, double> weight_to;
            weight_to[home] += 0.0;
            for (const auto& [v, w] : g.adjacency[u]) weight_to[community[static_cast<std::size_t>(v)]] += w;

            community_total[static_cast<std::size_t>(home)] -= g.degree[u];
            double best_gain = weight_to[home] / m -
                               community_total[static_cast<std::size_t>(home)] * g.degree[u] / (2.0 * m * m);
            int best_community = home;
            for (const auto& [c, w] : weight_to) {
                if (c == home) continue;
                const double gain =
                    w / m - community_total[static_cast<std::size_t>(c)] * g.degree[u] / (2.0 * m * m);
                if (gain > best_gain + 1e-12 || (std::abs(gain - best_gain) <= 1e-12 && c < best_community)) {
                    best_gain = gain;
                    best_community = c;
                }
            }
            community_total[static_cast<std::size_t>(best_community)] += g.degree[u];
            if (best_community != home) {
                community[u] = best_community;
                moved_this_pass = true;
                any_move = true;
            }
        }
    }
    return any_move;
}

}  // namespace detail

/// Louvain community detection on the affinity graph (off-diagonal weights,
/// resolution 1): local moves to a modularity local optimum, graph
/// aggregation, repeated until no level improves. The number of communities
/// is inferred, not supplied.
inline Partition louvain(const AffinityMatrix& a, Rng& rng) {
    const std::size_t n = a.n;
    if (n == 0) throw ConfigError("louvain: empty affinity matrix");

    detail::LouvainGraph graph(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double w = a.at(i, j);
            if (w > 0.0) graph.adjacency[i].push_back({static_cast<int>(j), w});
        }
    }
    graph.finalize();

    std::vector<int> assignment(n);
    std::iota(assignment.begin(), assignment.end(), 0);
    if (graph.two_m == 0.0) return make_partition(assignment);

    for (;;) {
        std::vector<int> community(graph.adjacency.size());
        std::iota(community.begin(), community.end(), 0);
        const bool improved = detail::louvain_local_moves(graph, community, rng);
        if (!improved) break;

        auto [compact, remap] = relabel_first_appearance(community);
        const std::size_t groups = remap.size();
        for (auto& c : assignment) c = compact[static_cast<std::size_t>(c)];
        if (groups == graph.adjacency.size()) break;  // nothing was merged

        detail::LouvainGraph next(groups);
        std::vector<std::unordered_map<int, double>> between(groups);
        for (std::size_t i = 0; i < graph.adjacency.size(); ++i) {
            const auto ci = static_cast<std::size_t>(compact[i]);
            next.self_loop[ci] += graph.self_loop[i];
            for (const auto& [j, w] : graph.adjacency[i]) {
                const auto cj = static_cast<std::size_t>(compact[static_cast<std::size_t>(j)]);
                if (ci == cj) {
                    next.self_loop[ci] += 0.5 * w;  // each intra pair visited from both ends
                } else {
                    between[ci][static_cast<int>(cj)] += w;
                }
            }
        }
        for (std::size_t c = 0; c < groups; ++c) {
            // Deterministic adjacency order.
            std::vector<std::pair<int, double>> edges(between[c].begin(), between[c].end());
            std::sort(edges.begin(), edges.end());
            next.adjacency[c] = std::move(edges);
        }
        next.finalize();
        graph = std::move(next);
    }
    return make_partition(assignment);
}

/// WCSS curve over K = 1..K_max plus the elbow suggestion: the K at the end
/// of the largest decrease relative to what follows it, i.e. the K whose
/// incoming drop WCSS(K-1) - WCSS(K) most dwarfs the outgoing drop
/// WCSS(K) - WCSS(K+1). This is how an elbow plot is read visually: the
/// curve falls steeply into the suggested K and flattens after it. A rule
/// on raw drop magnitudes cannot express that: the 1->2 drop exceeds the
/// 2->3 drop for every three-group geometry (variance decomposition over
/// group centers), so it would never suggest 3 even for three ideal blobs.
/// Ties break to the lowest K; the suggestion ranges over 2..K_max-1.
struct ElbowResult {
    std::vector<double> wcss;  // index 0 holds K=1
    int suggested_k = 2;
};

inline ElbowResult elbow_wcss(const PointSet& points, int k_max, Rng& rng, int restarts = 50) {
    if (k_max < 2) throw ConfigError("elbow_wcss: K_max must be at least 2 to compute a drop");
    if (static_cast<std::size_t>(k_max) > points.size()) throw ConfigError("elbow_wcss: K_max must not exceed n");
    ElbowResult result;
    result.wcss.reserve(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) result.wcss.push_back(kmeans_wcss(points, k, restarts, rng));
    const auto drop = [&](int k) {
        return std::max(0.0, result.wcss[static_cast<std::size_t>(k - 2)] -
                                 result.wcss[static_cast<std::size_t>(k - 1)]);
    };
    const double guard = 1e-12 * std::max(1.0, result.wcss.front());
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (int k = 2; k < k_max; ++k) {
        const double ratio = (drop(k) + guard) / (drop(k + 1) + guard);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            result.suggested_k = k;
        }
    }
    return result;
}

}  // namespace ancl
