#include "doctest.h"

#include <functional>
#include <optional>
#include <random>

#include "kausal/simplex.hpp"

using namespace kausal;

namespace {

// Independent oracle: enumerate all basis subsets, solve the square system by
// exact Gaussian elimination, keep feasible ones, take the best value.
std::optional<Rational> enumerate_lp_optimum(const LpProblem<Rational>& p) {
    const int m = p.rows, n = p.cols;
    std::vector<int> rows_kept;
    // drop dependent rows first via exact row reduction of [A | b]
    std::vector<std::vector<Rational>> mat(m, std::vector<Rational>(n + 1));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) mat[i][j] = p.at(i, j);
        mat[i][n] = p.b[i];
    }
    int rank = 0;
    std::vector<int> pivot_row_of;
    for (int col = 0; col <= n && rank < m; ++col) {
        int piv = -1;
        for (int i = rank; i < m; ++i)
            if (!mat[i][col].is_zero()) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        if (col == n) return std::nullopt;  // 0 = nonzero: infeasible
        std::swap(mat[piv], mat[rank]);
        for (int i = 0; i < m; ++i) {
            if (i == rank || mat[i][col].is_zero()) continue;
            Rational f = mat[i][col] / mat[rank][col];
            for (int j = col; j <= n; ++j) mat[i][j] -= f * mat[rank][j];
        }
        ++rank;
    }

    // brute-force bases over the reduced system
    std::vector<std::vector<Rational>> red(rank, std::vector<Rational>(n + 1));
    for (int i = 0; i < rank; ++i) red[i] = mat[i];

    std::optional<Rational> best;
    std::vector<int> pick(rank);
    std::function<void(int, int)> rec = [&](int start, int k) {
        if (k == rank) {
            // solve red restricted to picked columns
            std::vector<std::vector<Rational>> sys(rank, std::vector<Rational>(rank + 1));
            for (int i = 0; i < rank; ++i) {
                for (int k2 = 0; k2 < rank; ++k2) sys[i][k2] = red[i][pick[k2]];
                sys[i][rank] = red[i][n];
            }
            for (int col = 0; col < rank; ++col) {
                int piv = -1;
                for (int i = col; i < rank; ++i)
                    if (!sys[i][col].is_zero()) {
                        piv = i;
                        break;
                    }
                if (piv < 0) return;  // singular basis
                std::swap(sys[piv], sys[col]);
                for (int i = 0; i < rank; ++i) {
                    if (i == col || sys[i][col].is_zero()) continue;
                    Rational f = sys[i][col] / sys[col][col];
                    for (int j = col; j <= rank; ++j) sys[i][j] -= f * sys[col][j];
                }
            }
            Rational value;
            for (int i = 0; i < rank; ++i) {
                Rational xi = sys[i][rank] / sys[i][i];
                if (xi < Rational()) return;  // infeasible vertex
                value += p.c[pick[i]] * xi;
            }
            if (!best || value < *best) best = value;
            return;
        }
        for (int j = start; j <= n - (rank - k); ++j) {
            pick[k] = j;
            rec(j + 1, k + 1);
        }
    };
    if (rank == 0) return Rational();
    rec(0, 0);
    return best;
}

}  // namespace

TEST_CASE("hand-checked micro LPs") {
    // min x1 + 2 x2  s.t.  x1 + x2 = 1
    LpProblem<double> p;
    p.rows = 1;
    p.cols = 2;
    p.a = {1, 1};
    p.b = {1};
    p.c = {1, 2};
    auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(dual_feasible(p, r));
    CHECK(std::fabs(r.gap) <= 1e-10);

    // redundant duplicated row is tolerated
    LpProblem<double> dup;
    dup.rows = 2;
    dup.cols = 2;
    dup.a = {1, 1, 1, 1};
    dup.b = {1, 1};
    dup.c = {3, 1};
    auto r2 = solve_lp(dup);
    REQUIRE(r2.status == LpStatus::optimal);
    CHECK(r2.value == doctest::Approx(1.0));

    // infeasible: x1 = 1 and x1 = 2
    LpProblem<double> bad;
    bad.rows = 2;
    bad.cols = 1;
    bad.a = {1, 1};
    bad.b = {1, 2};
    bad.c = {1};
    CHECK(solve_lp(bad).status == LpStatus::infeasible);

    // unbounded: min -x with a free direction x - y = 0
    LpProblem<double> unb;
    unb.rows = 1;
    unb.cols = 2;
    unb.a = {1, -1};
    unb.b = {0};
    unb.c = {-1, 0};
    CHECK(solve_lp(unb).status == LpStatus::unbounded);
}

TEST_CASE("negative right-hand sides are handled by row flipping") {
    // -x1 - x2 = -1 is x1 + x2 = 1
    LpProblem<double> p;
    p.rows = 1;
    p.cols = 2;
    p.a = {-1, -1};
    p.b = {-1};
    p.c = {5, 7};
    auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(5.0));
    CHECK(dual_feasible(p, r));
}

TEST_CASE("rational simplex agrees with exhaustive vertex enumeration") {
    std::mt19937_64 gen(97);
    std::uniform_int_distribution<int> ab(1, 6), cost(0, 9);
    for (int iter = 0; iter < 40; ++iter) {
        // random 3x3 transport instance with integer masses
        std::vector<int> eta(3), nu(3);
        int se = 0;
        for (auto& v : eta) se += (v = ab(gen));
        int sn = se;
        nu[0] = ab(gen) % sn;
        nu[1] = (sn - nu[0]) > 0 ? ab(gen) % (sn - nu[0]) : 0;
        nu[2] = sn - nu[0] - nu[1];

        LpProblem<Rational> p;
        p.rows = 6;
        p.cols = 9;
        p.a.assign(54, Rational());
        p.b.resize(6);
        p.c.resize(9);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                int v = i * 3 + j;
                p.at(i, v) = Rational(1);
                p.at(3 + j, v) = Rational(1);
                p.c[v] = Rational(cost(gen));
            }
        for (int i = 0; i < 3; ++i) p.b[i] = Rational(eta[i], se);
        for (int j = 0; j < 3; ++j) p.b[3 + j] = Rational(nu[j], sn);

        auto lp = solve_lp(p);
        auto oracle = enumerate_lp_optimum(p);
        REQUIRE(lp.status == LpStatus::optimal);
        REQUIRE(oracle.has_value());
        CHECK(lp.value == *oracle);
        CHECK(lp.gap == Rational());
        CHECK(dual_feasible(p, lp));

        // float solve of the same instance lands within LP tolerance
        LpProblem<double> pd;
        pd.rows = 6;
        pd.cols = 9;
        pd.a.resize(54);
        pd.b.resize(6);
        pd.c.resize(9);
        for (int k = 0; k < 54; ++k) pd.a[k] = p.a[k].to_double();
        for (int k = 0; k < 6; ++k) pd.b[k] = p.b[k].to_double();
        for (int k = 0; k < 9; ++k) pd.c[k] = p.c[k].to_double();
        auto lpd = solve_lp(pd);
        REQUIRE(lpd.status == LpStatus::optimal);
        CHECK(lpd.value == doctest::Approx(oracle->to_double()).epsilon(1e-9));
        CHECK(dual_feasible(pd, lpd));
        CHECK(std::fabs(lpd.gap) <= 1e-8 * std::max(1.0, std::fabs(lpd.value)));
    }
}

TEST_CASE("rational simplex with equality side constraints matches enumeration") {
    std::mt19937_64 gen(101);
    std::uniform_int_distribution<int> cost(0, 9), pickc(0, 3);
    for (int iter = 0; iter < 25; ++iter) {
        // 2x2 transport plus one extra homogeneous equality x00 - x11 = 0;
        // symmetric marginals keep the intersection nonempty
        LpProblem<Rational> p;
        p.rows = 5;
        p.cols = 4;
        p.a.assign(20, Rational());
        p.b.resize(5);
        p.c.resize(4);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                int v = i * 2 + j;
                p.at(i, v) = Rational(1);
                p.at(2 + j, v) = Rational(1);
                p.c[v] = Rational(cost(gen));
            }
        p.b[0] = Rational(1, 2);
        p.b[1] = Rational(1, 2);
        p.b[2] = Rational(1, 2);
        p.b[3] = Rational(1, 2);
        p.at(4, 0) = Rational(1);
        p.at(4, 3) = Rational(-1);
        p.b[4] = Rational();

        auto lp = solve_lp(p);
        auto oracle = enumerate_lp_optimum(p);
        REQUIRE(oracle.has_value());
        REQUIRE(lp.status == LpStatus::optimal);
        CHECK(lp.value == *oracle);
        CHECK(dual_feasible(p, lp));
    }
}
