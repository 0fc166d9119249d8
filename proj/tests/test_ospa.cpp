#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "glmbim/ospa.hpp"

using namespace glmbim;

namespace {

std::vector<Vector2d> random_set(std::mt19937_64& rng, int max_points) {
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::uniform_int_distribution<int> n(0, max_points);
    std::vector<Vector2d> pts(static_cast<size_t>(n(rng)));
    for (auto& p : pts) p = Vector2d(u(rng), u(rng));
    return pts;
}

double brute_force_assignment_cost(const std::vector<std::vector<double>>& cost) {
    const size_t n = cost.size();
    const size_t m = cost[0].size();
    std::vector<size_t> cols(m);
    std::iota(cols.begin(), cols.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) acc += cost[i][cols[i]];
        best = std::min(best, acc);
    } while (std::next_permutation(cols.begin(), cols.end()));
    return best;
}

}  // namespace

TEST_CASE("assignment solver matches brute force on random instances") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 1 + trial % 4;
        const size_t m = n + trial % 3;
        std::vector<std::vector<double>> cost(n, std::vector<double>(m));
        for (auto& row : cost)
            for (auto& c : row) c = u(rng);
        const auto assignment = min_cost_assignment(cost);
        double got = 0.0;
        std::vector<bool> used(m, false);
        for (size_t i = 0; i < n; ++i) {
            REQUIRE(assignment[i] >= 0);
            REQUIRE(!used[static_cast<size_t>(assignment[i])]);
            used[static_cast<size_t>(assignment[i])] = true;
            got += cost[i][static_cast<size_t>(assignment[i])];
        }
        CHECK(got == doctest::Approx(brute_force_assignment_cost(cost)).epsilon(1e-9));
    }
}

TEST_CASE("identical sets have zero distance") {
    const std::vector<Vector2d> pts = {{1, 2}, {50, 60}, {90, 10}};
    const auto r = ospa(pts, pts, {});
    CHECK(r.total == doctest::Approx(0.0));
    CHECK(r.loc == doctest::Approx(0.0));
    CHECK(r.card == doctest::Approx(0.0));
}

TEST_CASE("both sets empty is zero by convention") {
    const auto r = ospa({}, {}, {});
    CHECK(r.total == 0.0);
}

TEST_CASE("missing the only object costs the full cutoff") {
    const auto r = ospa({}, {Vector2d(10, 10)}, {20.0, 1.0});
    CHECK(r.total == doctest::Approx(20.0));
    CHECK(r.loc == doctest::Approx(0.0));
    CHECK(r.card == doctest::Approx(20.0));
}

TEST_CASE("singletons closer than the cutoff measure plain distance at p = 1") {
    const auto r = ospa({Vector2d(0, 0)}, {Vector2d(3, 4)}, {20.0, 1.0});
    CHECK(r.total == doctest::Approx(5.0));
    CHECK(r.loc == doctest::Approx(5.0));
    CHECK(r.card == doctest::Approx(0.0));
}

TEST_CASE("distances beyond the cutoff saturate") {
    const auto r = ospa({Vector2d(0, 0)}, {Vector2d(90, 90)}, {20.0, 1.0});
    CHECK(r.total == doctest::Approx(20.0));
}

TEST_CASE("decomposition is consistent: total^p = loc^p + card^p") {
    std::mt19937_64 rng(23);
    for (double p : {1.0, 2.0}) {
        for (int trial = 0; trial < 100; ++trial) {
            const auto a = random_set(rng, 5);
            const auto b = random_set(rng, 5);
            const auto r = ospa(a, b, {20.0, p});
            if (a.empty() && b.empty()) continue;
            CHECK(std::pow(r.total, p) ==
                  doctest::Approx(std::pow(r.loc, p) + std::pow(r.card, p)).epsilon(1e-9));
            CHECK(r.total <= 20.0 + 1e-12);
        }
    }
}

TEST_CASE("symmetry and triangle inequality hold on random triples") {
    std::mt19937_64 rng(31);
    const OspaParams params{20.0, 1.0};
    for (int trial = 0; trial < 2000; ++trial) {
        const auto a = random_set(rng, 3);
        const auto b = random_set(rng, 3);
        const auto c = random_set(rng, 3);
        const double ab = ospa(a, b, params).total;
        const double ba = ospa(b, a, params).total;
        const double ac = ospa(a, c, params).total;
        const double cb = ospa(c, b, params).total;
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab <= ac + cb + 1e-9);
    }
}

TEST_CASE("parameters are validated") {
    CHECK_THROWS(ospa({}, {}, {0.0, 1.0}));
    CHECK_THROWS(ospa({}, {}, {20.0, 0.5}));
}
