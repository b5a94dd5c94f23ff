#include "doctest.h"

#include <random>

#include "kausal/transport.hpp"

using namespace kausal;

namespace {

// E = two paths (0,+), (0,-); S = full 2-step sign paths; the cost asks the
// target's first symbol to match the source's second symbol, which only a
// clairvoyant plan can do.
struct Anticipation {
    SpacePtr e = std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({1, 2}));
    SpacePtr s = std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({2, 2}));
    PathMeasure<double> eta{e, {0.5, 0.5}};
    PathMeasure<double> nu{s, {0.5, 0.0, 0.0, 0.5}};
    CostMatrix cost{2, 4, {0, 0, 1, 1, 1, 1, 0, 0}};

    PathMeasure<Rational> eta_exact{e, {Rational(1, 2), Rational(1, 2)}};
    PathMeasure<Rational> nu_exact{s, {Rational(1, 2), Rational(), Rational(), Rational(1, 2)}};
};

SpacePtr coord(std::vector<int> alphabets) {
    return std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate(std::move(alphabets)));
}

PathMeasure<double> random_measure(SpacePtr sp, std::mt19937_64& gen, bool positive = false) {
    std::uniform_int_distribution<int> coin(positive ? 1 : 0, 8);
    std::vector<double> w(sp->path_count());
    double total = 0;
    for (auto& v : w) total += (v = coin(gen));
    if (total == 0) w[0] = total = 1;
    for (auto& v : w) v /= total;
    return PathMeasure<double>(std::move(sp), std::move(w));
}

CostMatrix random_cost(int rows, int cols, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    std::vector<double> c(static_cast<std::size_t>(rows) * cols);
    for (auto& v : c) v = unif(gen);
    return CostMatrix(rows, cols, std::move(c));
}

CostMatrix mismatch_cost(const FilteredPathSpace& sp) {
    const int n = sp.path_count();
    std::vector<double> c(static_cast<std::size_t>(n) * n, 1.0);
    for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i) * n + i] = 0.0;
    return CostMatrix(n, n, std::move(c));
}

}  // namespace

TEST_CASE("classic transport: identity, forced move, anticipation relaxed") {
    auto sp = coord({2, 2});
    auto u = PathMeasure<double>::uniform(sp);
    auto sol = solve_classic_mk(u, u, mismatch_cost(*sp));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(0.0));
    CHECK(sol.dual_feasible);

    auto two = coord({2});
    PathMeasure<double> src(two, {1.0, 0.0});
    PathMeasure<double> dst(two, {0.0, 1.0});
    auto forced = solve_classic_mk(src, dst, CostMatrix(2, 2, {0, 1, 1, 0}));
    REQUIRE(forced.status == LpStatus::optimal);
    CHECK(forced.value == doctest::Approx(1.0));

    Anticipation inst;
    auto classic = solve_classic_mk(inst.eta, inst.nu, inst.cost);
    REQUIRE(classic.status == LpStatus::optimal);
    CHECK(classic.value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("the anticipation instance: causal value 1/2, classical value 0") {
    Anticipation inst;
    auto causal = solve_causal_mk(inst.eta, inst.nu, inst.cost);
    REQUIRE(causal.status == LpStatus::optimal);
    CHECK(std::fabs(causal.value - 0.5) <= 1e-9);
    CHECK(causal.dual_feasible);
    CHECK(std::fabs(causal.gap) <= 1e-8 * std::max(1.0, std::fabs(causal.value)));
    REQUIRE(causal.plan.has_value());
    CHECK(is_causal(*causal.plan).causal);

    // the returned plan meets both marginals
    auto [m1, m2] = marginals(*causal.plan);
    for (int i = 0; i < 2; ++i) CHECK(std::fabs(m1[i] - inst.eta[i]) <= 1e-10);
    for (int j = 0; j < 4; ++j) CHECK(std::fabs(m2[j] - inst.nu[j]) <= 1e-10);

    // exact mode returns the fractions themselves
    auto exact_causal = solve_causal_mk(inst.eta_exact, inst.nu_exact,
                                        inst.cost);
    REQUIRE(exact_causal.status == LpStatus::optimal);
    CHECK(exact_causal.value == Rational(1, 2));
    CHECK(exact_causal.gap == Rational());
    auto exact_classic = solve_classic_mk(inst.eta_exact, inst.nu_exact, inst.cost);
    CHECK(exact_classic.value == Rational());
    CHECK(is_causal(*exact_causal.plan).causal);
}

TEST_CASE("adapted transport reaches zero cost through the graph plan") {
    // U shifts the first coordinate (depends only on symbols seen so far)
    auto sp = coord({2, 2});
    auto u = PathMeasure<double>::uniform(sp);
    PathMap map(4);
    for (int i = 0; i < 4; ++i) {
        auto s = sp->path_symbols(i);
        map[i] = sp->path_index({1 - s[0], s[1]});
    }
    REQUIRE(is_adapted_map(map, *sp, u));
    auto nu = pushforward(map, u, sp);
    std::vector<double> c(16, 1.0);
    for (int i = 0; i < 4; ++i) c[static_cast<std::size_t>(i) * 4 + map[i]] = 0.0;
    auto sol = solve_causal_mk(u, nu, CostMatrix(4, 4, std::move(c)));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("degenerate filtrations collapse causal to classical") {
    std::mt19937_64 gen(7);
    for (int iter = 0; iter < 50; ++iter) {
        std::uniform_int_distribution<int> alpha(1, 3);
        auto e = std::make_shared<FilteredPathSpace>(
            FilteredPathSpace::degenerate({alpha(gen), alpha(gen)}));
        auto s = std::make_shared<FilteredPathSpace>(
            FilteredPathSpace::degenerate({alpha(gen), alpha(gen)}));
        auto eta = random_measure(e, gen);
        auto nu = random_measure(s, gen);
        auto cost = random_cost(e->path_count(), s->path_count(), gen);
        double vS = value_S(eta, nu, cost);
        double vT = value_T(eta, nu, cost);
        CHECK(std::fabs(vS - vT) <= 1e-9);
    }
}

TEST_CASE("causal value dominates the classical value") {
    std::mt19937_64 gen(11);
    for (int iter = 0; iter < 40; ++iter) {
        std::uniform_int_distribution<int> alpha(1, 3), steps(1, 2);
        int T = steps(gen);
        std::vector<int> ae(T), as(T);
        for (auto& a : ae) a = alpha(gen);
        for (auto& a : as) a = alpha(gen);
        auto e = coord(ae);
        auto s = coord(as);
        auto eta = random_measure(e, gen);
        auto nu = random_measure(s, gen);
        auto cost = random_cost(e->path_count(), s->path_count(), gen);
        CHECK(value_S(eta, nu, cost) >= value_T(eta, nu, cost) - 1e-9);
    }
}

TEST_CASE("S(. | eta) is convex in the target measure") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int iter = 0; iter < 30; ++iter) {
        auto e = coord({2, 2});
        auto s = coord({2, 2});
        auto eta = random_measure(e, gen);
        auto nu1 = random_measure(s, gen);
        auto nu2 = random_measure(s, gen);
        auto cost = random_cost(4, 4, gen);
        double lambda = unif(gen);
        std::vector<double> wm(4);
        for (int j = 0; j < 4; ++j) wm[j] = lambda * nu1[j] + (1 - lambda) * nu2[j];
        PathMeasure<double> num(s, std::move(wm));
        double lhs = value_S(eta, num, cost);
        double rhs = lambda * value_S(eta, nu1, cost) + (1 - lambda) * value_S(eta, nu2, cost);
        CHECK(lhs <= rhs + 1e-9);
    }
}

TEST_CASE("infinite costs: elimination and honest infeasibility") {
    auto two = coord({2});
    auto u = PathMeasure<double>::uniform(two);
    const double inf = std::numeric_limits<double>::infinity();

    // diagonal forbidden: antidiagonal plan remains
    auto sol = solve_classic_mk(u, u, CostMatrix(2, 2, {inf, 1, 1, inf}));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(1.0));

    // a positive row with no finite entry is infeasible
    auto bad = solve_classic_mk(u, u, CostMatrix(2, 2, {0, inf, inf, inf}));
    CHECK(bad.status == LpStatus::infeasible);

    // feasible rows can still clash with column needs
    auto clash = solve_classic_mk(u, u, CostMatrix(2, 2, {0, inf, 0, inf}));
    CHECK(clash.status == LpStatus::infeasible);

    CHECK_THROWS_AS(CostMatrix(1, 1, {-inf}), ValidationError);
    CHECK_THROWS_AS(CostMatrix(1, 1, {std::nan("")}), ValidationError);
}

TEST_CASE("null source rows are dropped from the program") {
    auto two = coord({2});
    PathMeasure<double> eta(two, {1.0, 0.0});
    PathMeasure<double> nu(two, {0.5, 0.5});
    auto sol = solve_classic_mk(eta, nu, CostMatrix(2, 2, {1, 2, 100, 100}));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(1.5));
    CHECK(sol.plan->at(1, 0) == 0.0);
    CHECK(sol.plan->at(1, 1) == 0.0);
}

TEST_CASE("brute-force causal Monge") {
    Anticipation inst;
    auto none = solve_causal_monge_bruteforce(inst.eta, inst.nu, inst.cost);
    auto lp = solve_causal_mk(inst.eta, inst.nu, inst.cost);
    if (none.found) CHECK(none.value >= lp.value - 1e-12);
    else CHECK(!none.found);  // no adapted map pushes eta to nu here

    // adapted bijection with matching indicator cost: value 0, map recovered
    auto sp = coord({2, 2});
    auto u = PathMeasure<double>::uniform(sp);
    PathMap map(4);
    for (int i = 0; i < 4; ++i) {
        auto s = sp->path_symbols(i);
        map[i] = sp->path_index({1 - s[0], s[1]});
    }
    auto nu = pushforward(map, u, sp);
    std::vector<double> c(16, 1.0);
    for (int i = 0; i < 4; ++i) c[static_cast<std::size_t>(i) * 4 + map[i]] = 0.0;
    auto res = solve_causal_monge_bruteforce(u, nu, CostMatrix(4, 4, std::move(c)));
    REQUIRE(res.found);
    CHECK(res.value == doctest::Approx(0.0));
    CHECK(res.map == map);

    // T=1: every map is adapted, brute force is the classic Monge search
    auto three = coord({3});
    auto u3 = PathMeasure<double>::uniform(three);
    PathMeasure<double> nu3(three, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    auto m3 = solve_causal_monge_bruteforce(u3, nu3, mismatch_cost(*three));
    REQUIRE(m3.found);
    CHECK(m3.value == doctest::Approx(0.0));

    // Monge dominates Kantorovich whenever a map exists
    std::mt19937_64 gen(17);
    for (int iter = 0; iter < 10; ++iter) {
        auto e2 = coord({2, 2});
        auto u2 = PathMeasure<double>::uniform(e2);
        auto cost = random_cost(4, 4, gen);
        auto mb = solve_causal_monge_bruteforce(u2, u2, cost);
        auto kant = solve_causal_mk(u2, u2, cost);
        if (mb.found) CHECK(mb.value >= kant.value - 1e-9);
    }

    auto big = coord({3, 3});
    auto ub = PathMeasure<double>::uniform(big);
    CHECK_THROWS_AS(solve_causal_monge_bruteforce(ub, ub, mismatch_cost(*big)),
                    ValidationError);
}

TEST_CASE("chain-equality Bregman projection satisfies the KL first-order condition") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    for (int iter = 0; iter < 20; ++iter) {
        // one equality over a 2x4 block pair
        ChainEquality<double> eq;
        eq.t = 1;
        eq.e_atom = 0;
        eq.s_atom = 0;
        eq.row_a = 0;
        eq.row_b = 1;
        eq.cols = {0, 1};
        eq.eta_a = unif(gen);
        eq.eta_b = unif(gen);
        std::vector<double> w(8);
        for (auto& v : w) v = unif(gen);
        std::vector<double> proj = w;
        project_chain_equality(proj, 4, eq);

        auto mass = [&](const std::vector<double>& m, int row) {
            return m[row * 4 + 0] + m[row * 4 + 1];
        };
        // constraint holds after projection
        CHECK(mass(proj, 0) * eq.eta_b == doctest::Approx(mass(proj, 1) * eq.eta_a).epsilon(1e-12));

        auto kl = [&](const std::vector<double>& x) {
            double s = 0;
            for (int k = 0; k < 8; ++k) s += x[k] * std::log(x[k] / w[k]) - x[k] + w[k];
            return s;
        };
        // feasible one-parameter family around the projection: block masses
        // (a*k, b*k) with each block scaled uniformly
        auto feasible = [&](double k) {
            std::vector<double> x = proj;
            double p = mass(proj, 0), q = mass(proj, 1);
            for (int j : eq.cols) {
                x[0 * 4 + j] *= eq.eta_a * k / p;
                x[1 * 4 + j] *= eq.eta_b * k / q;
            }
            return x;
        };
        double k0 = mass(proj, 0) / eq.eta_a;
        double base = kl(proj);
        // central difference of KL along the feasible direction vanishes at
        // the projection, and the value grows on both sides
        double h = 1e-5 * k0;
        double up = kl(feasible(k0 + h)), down = kl(feasible(k0 - h));
        CHECK(std::fabs(up - down) / (2 * h) <= 1e-6);
        CHECK(up >= base);
        CHECK(down >= base);
        CHECK(kl(feasible(k0 * 1.25)) > base);
        CHECK(kl(feasible(k0 * 0.8)) > base);
    }
}

TEST_CASE("entropic solver tracks the causal LP as epsilon shrinks") {
    Anticipation inst;
    double previous = 1e100;
    for (double eps : {1.0, 0.1, 0.01, 0.001}) {
        EntropicOptions opt;
        opt.epsilon = eps;
        auto sol = solve_causal_entropic(inst.eta, inst.nu, inst.cost, opt);
        CHECK(sol.converged);
        CHECK(sol.value <= previous + 1e-9);
        previous = sol.value;
        CHECK(sol.marginal_residual <= 1e-8);
        CHECK(sol.causality_residual <= 1e-8);
        if (eps == 0.001) CHECK(std::fabs(sol.value - 0.5) <= 5e-3);
    }
}

TEST_CASE("entropic solver at huge epsilon returns the product anchor") {
    Anticipation inst;
    EntropicOptions opt;
    opt.epsilon = 1e6;
    auto sol = solve_causal_entropic(inst.eta, inst.nu, inst.cost, opt);
    REQUIRE(sol.plan.has_value());
    auto prod = product_coupling(inst.eta, inst.nu);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(sol.plan->at(i, j) == doctest::Approx(prod.at(i, j)).epsilon(1e-4));
}

TEST_CASE("entropic plans respect causality on random instances") {
    std::mt19937_64 gen(31);
    for (int iter = 0; iter < 10; ++iter) {
        auto e = coord({2, 2});
        auto s = coord({2, 2});
        auto eta = random_measure(e, gen, true);
        auto nu = random_measure(s, gen, true);
        auto cost = random_cost(4, 4, gen);
        EntropicOptions opt;
        opt.epsilon = 0.01;
        auto sol = solve_causal_entropic(eta, nu, cost, opt);
        CHECK(sol.causality_residual <= 1e-8);
        CHECK(sol.marginal_residual <= 1e-8);
        // value within 5e-3 of the LP at eps = 1e-3
        opt.epsilon = 1e-3;
        auto tight = solve_causal_entropic(eta, nu, cost, opt);
        auto lp = solve_causal_mk(eta, nu, cost);
        REQUIRE(lp.status == LpStatus::optimal);
        CHECK(std::fabs(tight.value - lp.value) <= 5e-3);
    }
}
