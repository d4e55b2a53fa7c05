#include <random>
#include <stdexcept>

#include "csae/metrics.hpp"
#include "csae/rng.hpp"
#include "doctest.h"

using namespace csae;

TEST_CASE("accuracy") {
    CHECK(accuracy({0, 1, 2}, {0, 1, 2}) == 1.0);
    CHECK(accuracy({0, 0, 1, 1}, {0, 1, 1, 1}) == 0.75);
    CHECK(accuracy({0, 0}, {1, 1}) == 0.0);
    CHECK_THROWS_AS(accuracy({0, 1}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
}

TEST_CASE("weighted f1 on the four-sample example") {
    // true [A,A,B,B], pred [A,B,B,B]: F1_A = 2/3, F1_B = 0.8, weights 1/2 each
    const std::vector<int> t = {0, 0, 1, 1}, p = {0, 1, 1, 1};
    CHECK(weighted_f1(t, p) == doctest::Approx(0.733333).epsilon(1e-4));
    CHECK(accuracy(t, p) == doctest::Approx(0.75));

    const MetricsReport report = metrics_report(t, p);
    REQUIRE(report.per_class.size() == 2);
    CHECK(report.per_class[0].precision == doctest::Approx(1.0));
    CHECK(report.per_class[0].recall == doctest::Approx(0.5));
    CHECK(report.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
    CHECK(report.per_class[1].f1 == doctest::Approx(0.8));
    CHECK(report.per_class[0].support == 2);
}

TEST_CASE("weighted f1 edge conventions") {
    CHECK(weighted_f1({0, 1}, {0, 1}) == 1.0);

    // a class never predicted contributes F1 = 0 at its support weight
    const double f1 = weighted_f1({0, 0, 1, 1}, {1, 1, 1, 1});
    CHECK(f1 == doctest::Approx(0.5 * 0.0 + 0.5 * (2.0 * 0.5 * 1.0 / 1.5)).epsilon(1e-9));

    // both metrics hit 1 only on exact agreement
    CHECK(weighted_f1({0, 1, 1}, {0, 1, 0}) < 1.0);
    CHECK(accuracy({0, 1, 1}, {0, 1, 0}) < 1.0);
}

TEST_CASE("weighted f1 is invariant under consistent relabeling") {
    std::mt19937 rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 20 + static_cast<int>(uniform_index(rng, 50));
        const int k = 3 + static_cast<int>(uniform_index(rng, 4));
        std::vector<int> t(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            t[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(rng, static_cast<std::uint32_t>(k)));
            p[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(rng, static_cast<std::uint32_t>(k)));
        }
        std::vector<int> perm(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c) perm[static_cast<std::size_t>(c)] = c;
        fisher_yates(perm, rng);

        std::vector<int> t2 = t, p2 = p;
        for (auto& v : t2) v = perm[static_cast<std::size_t>(v)];
        for (auto& v : p2) v = perm[static_cast<std::size_t>(v)];

        CHECK(weighted_f1(t, p) == doctest::Approx(weighted_f1(t2, p2)).epsilon(1e-12));
        CHECK(accuracy(t, p) == doctest::Approx(accuracy(t2, p2)).epsilon(1e-12));
    }
}
