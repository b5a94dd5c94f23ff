#include "doctest.h"

#include <random>

#include "kausal/path_space.hpp"

using namespace kausal;

namespace {

SpacePtr binary2() {
    return std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({2, 2}));
}

template <class S>
PathMeasure<S> measure(SpacePtr sp, std::vector<S> w) {
    return PathMeasure<S>(std::move(sp), std::move(w));
}

PathMeasure<double> random_measure(SpacePtr sp, std::mt19937_64& gen, bool allow_zeros = true) {
    std::uniform_int_distribution<int> coin(0, 8);
    std::vector<double> w(sp->path_count());
    double total = 0;
    for (auto& v : w) {
        int r = coin(gen);
        if (!allow_zeros && r == 0) r = 1;
        v = r;
        total += v;
    }
    if (total == 0) {
        w[0] = 1;
        total = 1;
    }
    for (auto& v : w) v /= total;
    return PathMeasure<double>(std::move(sp), std::move(w));
}

}  // namespace

TEST_CASE("coordinate filtration groups paths by prefix") {
    auto sp = FilteredPathSpace::coordinate({2, 3});
    CHECK(sp.path_count() == 6);
    CHECK(sp.atom_count(1) == 2);
    CHECK(sp.atom_count(2) == 6);
    CHECK(sp.partition(1)[0] == std::vector<int>{0, 1, 2});
    CHECK(sp.partition(1)[1] == std::vector<int>{3, 4, 5});
    CHECK(sp.is_discrete_at(2));
    CHECK(sp.path_symbols(4) == std::vector<int>{1, 1});
    CHECK(sp.path_index({1, 1}) == 4);
}

TEST_CASE("filtration must refine in time") {
    Partition coarse{{0, 1, 2, 3}};
    // non-coordinate information is fine as long as later partitions refine it
    Partition odd_even{{0, 2}, {1, 3}};
    CHECK_NOTHROW(FilteredPathSpace::with_filtration(
        {2, 2}, {odd_even, Partition{{0}, {1}, {2}, {3}}}));
    // crossing atoms at t=2 against a split at t=1 is rejected
    Partition t1{{0, 1}, {2, 3}};
    Partition t2{{0, 2}, {1}, {3}};
    CHECK_THROWS_AS(FilteredPathSpace::with_filtration({2, 2}, {t1, t2}), ValidationError);
    CHECK_NOTHROW(FilteredPathSpace::with_filtration({2, 2}, {coarse, t1}));
    // partitions must cover and not overlap
    CHECK_THROWS_AS(FilteredPathSpace::with_filtration({2, 2}, {t1, Partition{{0}, {1}, {2}}}),
                    ValidationError);
    CHECK_THROWS_AS(FilteredPathSpace::with_filtration(
                        {2, 2}, {t1, Partition{{0, 1}, {1, 2}, {3}}}),
                    ValidationError);
}

TEST_CASE("measure validation") {
    auto sp = binary2();
    CHECK_THROWS_AS(measure<double>(sp, {0.5, 0.5, 0.5, -0.5}), ValidationError);
    CHECK_THROWS_AS(measure<double>(sp, {0.5, 0.5, 0.5, 0.5}), ValidationError);
    CHECK_NOTHROW(measure<double>(sp, {0.25, 0.25, 0.25, 0.25}));
    CHECK_NOTHROW(measure<Rational>(sp, {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)}));
    CHECK_THROWS_AS(measure<Rational>(sp, {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 3)}),
                    ValidationError);
}

TEST_CASE("marginals: product, identity, and a frozen asymmetric case") {
    auto one = std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({2}));
    auto u = PathMeasure<double>::uniform(one);

    auto prod = product_coupling(u, u);
    auto [pm1, pm2] = marginals(prod);
    for (int i = 0; i < 2; ++i) {
        CHECK(pm1[i] == doctest::Approx(0.5));
        CHECK(pm2[i] == doctest::Approx(0.5));
    }

    auto ident = graph_coupling(PathMap{0, 1}, u, one);
    auto [im1, im2] = marginals(ident);
    CHECK(im1[0] == doctest::Approx(0.5));
    CHECK(im2[1] == doctest::Approx(0.5));

    // rows (0.5, 0), (0.25, 0.25) -> first (0.5, 0.5), second (0.75, 0.25)
    Coupling<double> g(one, one, {0.5, 0.0, 0.25, 0.25});
    auto [m1, m2] = marginals(g);
    CHECK(m1[0] == doctest::Approx(0.5));
    CHECK(m1[1] == doctest::Approx(0.5));
    CHECK(m2[0] == doctest::Approx(0.75));
    CHECK(m2[1] == doctest::Approx(0.25));
}

TEST_CASE("conditional kernel rows") {
    auto one = std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({2}));
    auto u = PathMeasure<double>::uniform(one);

    // product coupling: every row equals nu
    PathMeasure<double> nu(one, {0.75, 0.25});
    auto kernel = conditional_kernel(product_coupling(u, nu));
    for (int i = 0; i < 2; ++i) {
        CHECK(kernel.row(i)[0] == doctest::Approx(0.75));
        CHECK(kernel.row(i)[1] == doctest::Approx(0.25));
    }

    // graph coupling of the identity: Dirac rows
    auto ident = conditional_kernel(graph_coupling(PathMap{0, 1}, u, one));
    CHECK(ident.row(0)[0] == doctest::Approx(1.0));
    CHECK(ident.row(0)[1] == doctest::Approx(0.0));
    CHECK(ident.row(1)[1] == doctest::Approx(1.0));

    // frozen: [[0.5, 0], [0.25, 0.25]] with eta = (0.5, 0.5)
    Coupling<double> g(one, one, {0.5, 0.0, 0.25, 0.25});
    auto k = conditional_kernel(g);
    CHECK(k.row(0)[0] == doctest::Approx(1.0));
    CHECK(k.row(0)[1] == doctest::Approx(0.0));
    CHECK(k.row(1)[0] == doctest::Approx(0.5));
    CHECK(k.row(1)[1] == doctest::Approx(0.5));
}

TEST_CASE("kernel rows are only defined on positive-mass paths") {
    auto one = std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({2}));
    Coupling<double> g(one, one, {0.5, 0.5, 0.0, 0.0});
    auto k = conditional_kernel(g);
    CHECK(k.has_row(0));
    CHECK(!k.has_row(1));
    CHECK_THROWS_WITH_AS(k.row(1), "kernel undefined on null atom", ValidationError);
}

TEST_CASE("product coupling is the outer product") {
    auto one = std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({2}));
    PathMeasure<double> eta(one, {0.75, 0.25});
    PathMeasure<double> nu(one, {0.5, 0.5});
    auto g = product_coupling(eta, nu);
    CHECK(g.at(0, 0) == doctest::Approx(0.375));
    CHECK(g.at(0, 1) == doctest::Approx(0.375));
    CHECK(g.at(1, 0) == doctest::Approx(0.125));
    CHECK(g.at(1, 1) == doctest::Approx(0.125));

    // point mass source: a single nonzero row equal to nu
    auto d = product_coupling(PathMeasure<double>::dirac(one, 1), nu);
    CHECK(d.at(0, 0) == 0.0);
    CHECK(d.at(1, 0) == doctest::Approx(0.5));
    CHECK(d.at(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("graph coupling pushes the first marginal through the map") {
    auto sp = binary2();
    auto u = PathMeasure<double>::uniform(sp);

    // swap of the two coordinates on 2-step binary paths
    PathMap swap(4);
    auto space = *sp;
    for (int i = 0; i < 4; ++i) {
        auto s = space.path_symbols(i);
        swap[i] = space.path_index({s[1], s[0]});
    }
    auto g = graph_coupling(swap, u, sp);
    auto [m1, m2] = marginals(g);
    for (int i = 0; i < 4; ++i) CHECK(m2[i] == doctest::Approx(0.25));
    auto push = pushforward(swap, u, sp);
    for (int i = 0; i < 4; ++i) CHECK(m2[i] == doctest::Approx(push[i]));

    // constant map: one nonzero column carrying eta's profile
    PathMeasure<double> eta(sp, {0.4, 0.3, 0.2, 0.1});
    auto c = graph_coupling(PathMap{2, 2, 2, 2}, eta, sp);
    auto [cm1, cm2] = marginals(c);
    CHECK(cm2[2] == doctest::Approx(1.0));
    for (int i = 0; i < 4; ++i) CHECK(c.at(i, 2) == doctest::Approx(eta[i]));

    // out-of-range target
    CHECK_THROWS_AS(graph_coupling(PathMap{0, 1, 2, 9}, u, sp), ValidationError);
}

TEST_CASE("adaptedness of maps") {
    auto sp = binary2();
    auto u = PathMeasure<double>::uniform(sp);
    auto space = *sp;

    PathMap ident{0, 1, 2, 3};
    CHECK(is_adapted_map(ident, space, u));

    PathMap swap(4);
    for (int i = 0; i < 4; ++i) {
        auto s = space.path_symbols(i);
        swap[i] = space.path_index({s[1], s[0]});
    }
    CHECK(!is_adapted_map(swap, space, u));

    // a target filtration that is trivial before T constrains nothing early
    auto trivial = FilteredPathSpace::with_filtration(
        {2, 2}, {Partition{{0, 1, 2, 3}}, Partition{{0}, {1}, {2}, {3}}});
    CHECK(is_adapted_map(swap, trivial, u));

    // null paths are ignored: restrict to paths whose second coordinate is
    // constant and the swap becomes adapted
    PathMeasure<double> conc(sp, {0.5, 0.0, 0.5, 0.0});
    CHECK(is_adapted_map(swap, space, conc));
}

TEST_CASE("kernel round-trip reproduces the coupling") {
    std::mt19937_64 gen(21);
    auto sp = binary2();
    SUBCASE("float mode within 1e-14") {
        for (int iter = 0; iter < 50; ++iter) {
            auto eta = random_measure(sp, gen);
            auto nu = random_measure(sp, gen);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::vector<double> w(16);
            double total = 0;
            for (auto& v : w) {
                v = unif(gen);
                total += v;
            }
            for (auto& v : w) v /= total;
            Coupling<double> g(sp, sp, w);
            auto [m1, m2] = marginals(g);
            auto rebuilt = from_kernel(m1, conditional_kernel(g), sp);
            for (int k = 0; k < 16; ++k)
                CHECK(std::fabs(rebuilt.weights()[k] - g.weights()[k]) <= 1e-14);
        }
    }
    SUBCASE("rational mode exactly") {
        std::uniform_int_distribution<int> coin(0, 6);
        for (int iter = 0; iter < 20; ++iter) {
            std::vector<Rational> w(16);
            long total = 0;
            std::vector<int> raw(16);
            for (auto& r : raw) {
                r = coin(gen);
                total += r;
            }
            if (total == 0) raw[3] = total = 1;
            for (int k = 0; k < 16; ++k) w[k] = Rational(raw[k], total);
            Coupling<Rational> g(sp, sp, w);
            auto [m1, m2] = marginals(g);
            auto rebuilt = from_kernel(m1, conditional_kernel(g), sp);
            for (int k = 0; k < 16; ++k) CHECK(rebuilt.weights()[k] == g.weights()[k]);
        }
    }
}

TEST_CASE("marginals are linear under mixtures") {
    std::mt19937_64 gen(31);
    auto sp = binary2();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int iter = 0; iter < 20; ++iter) {
        auto mk = [&] {
            std::vector<double> w(16);
            double total = 0;
            for (auto& v : w) {
                v = unif(gen);
                total += v;
            }
            for (auto& v : w) v /= total;
            return Coupling<double>(sp, sp, w);
        };
        auto g1 = mk(), g2 = mk();
        double lambda = unif(gen);
        auto mixed = mix(lambda, g1, g2);
        auto [a1, a2] = marginals(mixed);
        auto [b1, b2] = marginals(g1);
        auto [c1, c2] = marginals(g2);
        for (int i = 0; i < 4; ++i) {
            CHECK(a1[i] == doctest::Approx(lambda * b1[i] + (1 - lambda) * c1[i]));
            CHECK(a2[i] == doctest::Approx(lambda * b2[i] + (1 - lambda) * c2[i]));
        }
    }
}
