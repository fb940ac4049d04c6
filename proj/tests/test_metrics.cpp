#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "srcloc/metrics.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>

using namespace srcloc;
using srcloc::testing::thrown_category;

namespace {

Graph path_graph(Index n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i + 1 < n; ++i) w(i, i + 1) = w(i + 1, i) = 1.0;
    return Graph(w);
}

Eigen::VectorXd spikes(Index n, std::initializer_list<Index> at) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (Index i : at) v(i) = 1.0;
    return v;
}

}  // namespace

TEST_CASE("influence zones on a path break ties toward the lower index") {
    const Graph g = path_graph(5);
    const std::vector<Index> active{4, 0};
    const auto z = influence_zones(g, active);
    REQUIRE(z.zones.size() == 2);
    CHECK(z.active == std::vector<Index>{0, 4});
    CHECK(z.zones[0] == std::vector<Index>{0, 1, 2});
    CHECK(z.zones[1] == std::vector<Index>{3, 4});
    CHECK(z.unreachable.empty());
}

TEST_CASE("influence zone extremes") {
    const Graph g = path_graph(6);
    std::vector<Index> all{0, 1, 2, 3, 4, 5};
    const auto singletons = influence_zones(g, all);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(singletons.zones[i] == std::vector<Index>{all[i]});

    const std::vector<Index> one{2};
    CHECK(influence_zones(g, one).zones[0] == all);
    CHECK(thrown_category([&] { influence_zones(g, std::vector<Index>{}); }) == ErrorCategory::InvalidInput);
}

TEST_CASE("unreachable nodes are excluded and their mass reported") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
    w(0, 1) = w(1, 0) = 1.0;
    w(2, 3) = w(3, 2) = 1.0;
    const Graph g(w);
    const std::vector<Index> active{0};
    const auto z = influence_zones(g, active);
    CHECK(z.unreachable == std::vector<Index>{2, 3});
    CHECK(z.owner[2] == -1);

    Eigen::VectorXd y(4);
    y << 1, 0, 3, 0;
    const auto r = hop_error(spikes(4, {0}), y, g);
    CHECK(r.total == 0.0);
    CHECK(r.excluded_mass_fraction == doctest::Approx(0.75));
}

TEST_CASE("hop error examples on a path") {
    const Graph g = path_graph(5);
    const auto x1 = spikes(5, {0});
    CHECK(hop_error(x1, x1, g).total == 0.0);
    CHECK(hop_error(x1, spikes(5, {2}), g).total == 2.0);

    const auto x2 = spikes(5, {0, 4});
    const auto r = hop_error(x2, spikes(5, {1, 3}), g);
    CHECK(r.total == 2.0);
    REQUIRE(r.per_source.size() == 2);
    CHECK(r.per_source[0].center_of_mass == 1.0);
    CHECK(r.per_source[1].center_of_mass == 1.0);
    CHECK(r.active_set == std::vector<Index>{0, 4});

    CHECK(std::isinf(hop_error(x2, Eigen::VectorXd::Zero(5), g).total));
    CHECK(thrown_category([&] { hop_error(Eigen::VectorXd::Zero(5), x1, g); }) == ErrorCategory::InvalidReference);
}

TEST_CASE("zones without y-mass contribute zero and are flagged") {
    const Graph g = path_graph(5);
    const auto r = hop_error(spikes(5, {0, 4}), spikes(5, {1}), g);
    CHECK(r.total == 1.0);
    CHECK_FALSE(r.per_source[0].empty);
    CHECK(r.per_source[1].empty);
    CHECK(r.per_source[1].mass == 0.0);
}

TEST_CASE("spike tolerance selects the active set relative to the peak") {
    const Graph g = path_graph(5);
    Eigen::VectorXd x(5);
    x << 1.0, 0.0, 0.05, 0.0, 0.0;
    CHECK(hop_error(x, spikes(5, {2}), g, 0.0).active_set.size() == 2);
    CHECK(hop_error(x, spikes(5, {2}), g, 0.1).active_set == std::vector<Index>{0});
}

TEST_CASE("hop error matches brute-force zone enumeration") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.3);
    for (int rep = 0; rep < 200; ++rep) {
        const Index n = 2 + rep % 9;
        const Eigen::MatrixXd w = oracle::random_weights(n, 0.35, rng, false);
        const Graph g(w);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (Index i = 0; i < n; ++i)
            if (coin(rng)) x(i) = 1.0;
        if (x.isZero()) x(rep % n) = 1.0;
        Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
        if (rep % 7 != 0)
            for (Index i = 0; i < n; ++i) y(i) = coin(rng) ? u(rng) : 0.0;
        const double expected = oracle::brute_hop_error(x, y, w);
        const double got = hop_error(x, y, g).total;
        CHECK(((std::isinf(expected) && std::isinf(got)) || got == expected));
    }
}

TEST_CASE("hop error is invariant to positive rescaling of y") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Graph g(oracle::random_connected_weights(30, 0.1, rng));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(30);
    x(2) = x(20) = 1.0;
    Eigen::VectorXd y(30);
    for (Index i = 0; i < 30; ++i) y(i) = u(rng);
    const double base = hop_error(x, y, g).total;
    for (double c : {1e-3, 0.5, 7.0, 1e4}) CHECK(hop_error(x, c * y, g).total == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("moving mass one hop farther never decreases the error") {
    const Graph g = path_graph(8);
    const auto x = spikes(8, {0});
    Eigen::VectorXd y = Eigen::VectorXd::Zero(8);
    y(0) = 0.5;
    y(2) = 0.5;
    double prev = hop_error(x, y, g).total;
    for (Index j = 2; j + 1 < 8; ++j) {
        y(j + 1) = y(j);
        y(j) = 0.0;
        const double next = hop_error(x, y, g).total;
        CHECK(next >= prev);
        prev = next;
    }
}
