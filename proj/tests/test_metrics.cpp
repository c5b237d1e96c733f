#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "ancl/metrics.hpp"
#include "ancl/rng.hpp"

using namespace ancl;

TEST_CASE("ari hand cases", "[metrics]") {
    REQUIRE(ari({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    REQUIRE(ari({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);  // relabeling invariance
    REQUIRE(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == Catch::Approx(-0.5));
    REQUIRE(ari({0, 0, 0}, {0, 0, 0}) == 1.0);  // degenerate single-cluster pair
    REQUIRE_THROWS_AS(ari({0, 1}, {0, 1, 2}), ConfigError);
}

TEST_CASE("ari is symmetric and permutation-invariant", "[metrics]") {
    Rng rng(700);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> p(20), q(20);
        for (auto& v : p) v = static_cast<int>(rng.uniform_int(0, 3));
        for (auto& v : q) v = static_cast<int>(rng.uniform_int(0, 2));
        REQUIRE(ari(p, q) == Catch::Approx(ari(q, p)).epsilon(1e-12));

        std::vector<int> q_renamed(q.size());
        const int rename[] = {2, 0, 1};
        for (std::size_t i = 0; i < q.size(); ++i) q_renamed[i] = rename[q[i]];
        REQUIRE(ari(p, q) == Catch::Approx(ari(p, q_renamed)).epsilon(1e-12));
    }
}

TEST_CASE("ari of random labelings is centered at zero", "[metrics][heavy]") {
    Rng rng(701);
    std::vector<int> truth(20);
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = static_cast<int>(i % 3);
    double mean = 0.0;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        std::vector<int> random_labels(20);
        for (auto& v : random_labels) v = static_cast<int>(rng.uniform_int(0, 2));
        mean += ari(truth, random_labels);
    }
    mean /= draws;
    REQUIRE(std::abs(mean) < 0.02);
}

TEST_CASE("summarize mean and median", "[metrics]") {
    REQUIRE(summarize({1, 1, 1}) == std::pair<double, double>{1.0, 1.0});
    REQUIRE(summarize({0, 1}) == std::pair<double, double>{0.5, 0.5});
    REQUIRE_THROWS_AS(summarize({}), ConfigError);

    Rng rng(702);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> values(static_cast<std::size_t>(rng.uniform_int(1, 50)));
        for (auto& v : values) v = rng.normal();
        const auto [mean, median] = summarize(values);
        std::vector<double> sorted(values);
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        const double want = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        REQUIRE(median == want);
        double s = 0.0;
        for (const double v : values) s += v;
        REQUIRE(mean == Catch::Approx(s / static_cast<double>(m)).epsilon(1e-12));
    }
}

TEST_CASE("pairwise_compare proportions", "[metrics]") {
    const auto equal = pairwise_compare({1, 2, 3}, {1, 2, 3});
    REQUIRE(equal.prop_ties == 1.0);
    REQUIRE(equal.prop_a_wins == 0.0);

    const auto stats = pairwise_compare({1, 1, 0}, {0, 0, 0});
    REQUIRE(stats.prop_a_wins == Catch::Approx(2.0 / 3.0));
    REQUIRE(stats.prop_ties == Catch::Approx(1.0 / 3.0));
    REQUIRE(stats.prop_b_wins == 0.0);

    Rng rng(703);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> a(30), b(30);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        const auto s = pairwise_compare(a, b);
        REQUIRE(s.prop_a_wins + s.prop_b_wins + s.prop_ties == Catch::Approx(1.0).margin(1e-12));
    }
    REQUIRE_THROWS_AS(pairwise_compare({1.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("wilcoxon signed-rank basics", "[metrics]") {
    const std::vector<double> same{0.3, 0.5, 0.7, 0.2, 0.9};
    REQUIRE(wilcoxon_signed_rank(same, same) == 1.0);

    std::vector<double> base(30), shifted(30);
    Rng rng(704);
    for (std::size_t i = 0; i < base.size(); ++i) {
        base[i] = rng.normal();
        shifted[i] = base[i] + 0.5;
    }
    REQUIRE(wilcoxon_signed_rank(shifted, base) < 1e-4);

    // Monotone under a magnified uniform shift on the same ranks.
    std::vector<double> small_shift(30), big_shift(30);
    for (std::size_t i = 0; i < base.size(); ++i) {
        small_shift[i] = base[i] + 0.5;
        big_shift[i] = base[i] + 5.0;
    }
    REQUIRE(wilcoxon_signed_rank(big_shift, base) <= wilcoxon_signed_rank(small_shift, base));
}

TEST_CASE("wilcoxon null rejection rate is calibrated", "[metrics][heavy]") {
    Rng rng(705);
    int rejections = 0;
    const int sims = 1000;
    for (int s = 0; s < sims; ++s) {
        std::vector<double> a(50), b(50);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        const double p = wilcoxon_signed_rank(a, b);
        REQUIRE(p >= 0.0);
        REQUIRE(p <= 1.0);
        if (p < 0.05) ++rejections;
    }
    const double rate = rejections / static_cast<double>(sims);
    REQUIRE(rate >= 0.03);
    REQUIRE(rate <= 0.07);
}
