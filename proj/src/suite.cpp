#include "kausal/suite.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "kausal/bridge.hpp"
#include "kausal/gaussian.hpp"
#include "kausal/parallel.hpp"
#include "kausal/transport.hpp"
#include "kausal/version.hpp"

namespace kausal::suite {

namespace {

using gauss::Drift;
using gauss::GaussianPathModel;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Deterministic instance source; avoids std::uniform_* whose streams are
// implementation defined.
struct Gen {
    CounterRng rng;
    std::uint64_t ctr = 0;
    explicit Gen(std::uint64_t seed) : rng(seed) {}
    std::uint64_t bits() { return rng.bits(ctr++, 0, 0); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(bits() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    double uniform() { return (static_cast<double>(bits() >> 11) + 0.5) * 0x1p-53; }
};

SpacePtr gen_space(Gen& g, int steps, int max_alpha, bool degenerate = false) {
    std::vector<int> alphabets(steps);
    for (auto& a : alphabets) a = g.uniform_int(1, max_alpha);
    if (degenerate)
        return std::make_shared<FilteredPathSpace>(FilteredPathSpace::degenerate(alphabets));
    return std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate(alphabets));
}

PathMeasure<double> gen_measure(Gen& g, SpacePtr sp, bool positive) {
    std::vector<double> w(sp->path_count());
    double total = 0;
    for (auto& v : w) total += (v = g.uniform_int(positive ? 1 : 0, 8));
    if (total == 0) w[0] = total = 1;
    for (auto& v : w) v /= total;
    return PathMeasure<double>(std::move(sp), std::move(w));
}

Coupling<double> gen_coupling(Gen& g, SpacePtr e, SpacePtr s) {
    std::vector<double> w(static_cast<std::size_t>(e->path_count()) * s->path_count());
    double total = 0;
    for (auto& v : w) total += (v = g.uniform_int(0, 8));
    if (total == 0) w[0] = total = 1;
    for (auto& v : w) v /= total;
    return Coupling<double>(std::move(e), std::move(s), std::move(w));
}

// Causal by construction: the step-t conditional table reads only the source
// atom at time t, so kernels agree within every source atom.
Coupling<double> gen_causal_coupling(Gen& g, SpacePtr e, SpacePtr s,
                                     const PathMeasure<double>& eta) {
    const int T = s->steps();
    const int cols = s->path_count();
    const std::uint64_t batch = g.bits();
    CounterRng table_rng(batch);
    std::vector<double> w(static_cast<std::size_t>(e->path_count()) * cols, 0.0);
    for (int i = 0; i < e->path_count(); ++i) {
        if (!eta.is_positive(i)) continue;
        std::vector<double> kernel(cols, 1.0);
        for (int t = 1; t <= T; ++t) {
            const auto& part = s->partition(t);
            std::vector<double> table(part.size());
            for (std::size_t a = 0; a < part.size(); ++a)
                table[a] = 0.1 + 0.9 * (static_cast<double>(
                                            table_rng.bits(e->atom_of(t, i), t, a) >> 11) +
                                        0.5) *
                                     0x1p-53;
            std::vector<double> denom(t == 1 ? 1 : s->partition(t - 1).size(), 0.0);
            for (std::size_t a = 0; a < part.size(); ++a)
                denom[t == 1 ? 0 : s->atom_of(t - 1, part[a].front())] += table[a];
            for (int j = 0; j < cols; ++j)
                kernel[j] *= table[s->atom_of(t, j)] /
                             denom[t == 1 ? 0 : s->atom_of(t - 1, j)];
        }
        for (int j = 0; j < cols; ++j)
            kernel[j] /= static_cast<double>(s->partition(T)[s->atom_of(T, j)].size());
        for (int j = 0; j < cols; ++j)
            w[static_cast<std::size_t>(i) * cols + j] = eta[i] * kernel[j];
    }
    return Coupling<double>(eta.space(), std::move(s), std::move(w));
}

CostMatrix gen_cost(Gen& g, int rows, int cols) {
    std::vector<double> c(static_cast<std::size_t>(rows) * cols);
    for (auto& v : c) v = 2.0 * g.uniform();
    return CostMatrix(rows, cols, std::move(c));
}

struct Anticipation {
    SpacePtr e = std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({1, 2}));
    SpacePtr s = std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate({2, 2}));
    PathMeasure<double> eta{e, {0.5, 0.5}};
    PathMeasure<double> nu{s, {0.5, 0.0, 0.0, 0.5}};
    CostMatrix cost{2, 4, {0, 0, 1, 1, 1, 1, 0, 0}};
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// ---- criteria ----------------------------------------------------------------

CriterionResult criterion_causality_equivalence(std::uint64_t seed) {
    CriterionResult r;
    r.id = 1;
    r.name = "causality equivalence (definition vs conditional laws)";
    const double t0 = now_seconds();
    Gen g(seed * 1001 + 1);
    int agree = 0, causal_seen = 0;
    const int total = 1000;
    for (int i = 0; i < total; ++i) {
        int T = g.uniform_int(1, 3);
        auto e = gen_space(g, T, 3);
        auto s = gen_space(g, T, 3);
        Coupling<double> gamma = [&]() -> Coupling<double> {
            switch (i % 3) {
                case 0: return gen_coupling(g, e, s);
                case 1: return gen_causal_coupling(g, e, s, gen_measure(g, e, false));
                default:
                    return product_coupling(gen_measure(g, e, false), gen_measure(g, s, false));
            }
        }();
        bool a = is_causal(gamma).causal;
        bool b = is_causal_via_conditional_laws(gamma);
        if (a == b) ++agree;
        if (a) ++causal_seen;
    }
    const double elapsed = now_seconds() - t0;
    r.seconds = elapsed;
    r.pass = agree == total && elapsed < 10.0;
    r.data = {{"instances", total},
              {"agree", agree},
              {"causal_seen", causal_seen},
              {"within_time_budget", elapsed < 10.0}};
    r.details = "agree " + std::to_string(agree) + "/" + std::to_string(total) +
                (elapsed < 10.0 ? ", within the 10s budget" : ", over the 10s budget");
    return r;
}

CriterionResult criterion_feasibility_ordering(std::uint64_t seed) {
    CriterionResult r;
    r.id = 2;
    r.name = "product-plan feasibility and S >= T ordering";
    const double t0 = now_seconds();
    Gen g(seed * 1001 + 2);
    bool product_ok = true, order_ok = true, degen_ok = true;
    double worst_order = 0, worst_degen = 0;
    for (int i = 0; i < 60; ++i) {
        int T = g.uniform_int(1, 2);
        auto e = gen_space(g, T, 3);
        auto s = gen_space(g, T, 3);
        auto eta = gen_measure(g, e, false);
        auto nu = gen_measure(g, s, false);
        product_ok = product_ok && is_causal(product_coupling(eta, nu)).causal;
        auto cost = gen_cost(g, e->path_count(), s->path_count());
        double vS = value_S(eta, nu, cost);
        double vT = value_T(eta, nu, cost);
        worst_order = std::max(worst_order, vT - vS);
        order_ok = order_ok && vS >= vT - 1e-9;
    }
    for (int i = 0; i < 50; ++i) {
        int T = g.uniform_int(1, 2);
        auto e = gen_space(g, T, 3, true);
        auto s = gen_space(g, T, 3, true);
        auto eta = gen_measure(g, e, false);
        auto nu = gen_measure(g, s, false);
        auto cost = gen_cost(g, e->path_count(), s->path_count());
        double diff = std::fabs(value_S(eta, nu, cost) - value_T(eta, nu, cost));
        worst_degen = std::max(worst_degen, diff);
        degen_ok = degen_ok && diff <= 1e-9;
    }
    r.seconds = now_seconds() - t0;
    r.pass = product_ok && order_ok && degen_ok;
    r.data = {{"product_plan_causal", product_ok},
              {"worst_T_minus_S", worst_order},
              {"worst_degenerate_gap", worst_degen}};
    r.details = std::string("product causal: ") + (product_ok ? "yes" : "NO") +
                ", worst T-S " + fmt(worst_order) + ", worst degenerate gap " + fmt(worst_degen);
    return r;
}

CriterionResult criterion_anticipation() {
    CriterionResult r;
    r.id = 3;
    r.name = "anticipation instance: causal 1/2, classical 0";
    const double t0 = now_seconds();
    Anticipation inst;
    auto causal = solve_causal_mk(inst.eta, inst.nu, inst.cost);
    auto classic = solve_classic_mk(inst.eta, inst.nu, inst.cost);
    bool float_ok = causal.status == LpStatus::optimal && classic.status == LpStatus::optimal &&
                    std::fabs(causal.value - 0.5) <= 1e-9 && std::fabs(classic.value) <= 1e-9 &&
                    causal.plan && is_causal(*causal.plan).causal;

    PathMeasure<Rational> eta(inst.e, {Rational(1, 2), Rational(1, 2)});
    PathMeasure<Rational> nu(inst.s, {Rational(1, 2), Rational(), Rational(), Rational(1, 2)});
    auto exact_causal = solve_causal_mk(eta, nu, inst.cost);
    auto exact_classic = solve_classic_mk(eta, nu, inst.cost);
    bool exact_ok = exact_causal.value == Rational(1, 2) && exact_classic.value == Rational();

    r.seconds = now_seconds() - t0;
    r.pass = float_ok && exact_ok;
    r.data = {{"causal_value", causal.value},
              {"classic_value", classic.value},
              {"exact_causal", exact_causal.value.to_string()},
              {"exact_classic", exact_classic.value.to_string()}};
    r.details = "causal " + fmt(causal.value) + ", classic " + fmt(classic.value) + ", exact " +
                exact_causal.value.to_string() + " / " + exact_classic.value.to_string();
    return r;
}

CriterionResult criterion_lp_certificates(std::uint64_t seed) {
    CriterionResult r;
    r.id = 4;
    r.name = "LP certificates and entropic agreement";
    const double t0 = now_seconds();
    Gen g(seed * 1001 + 4);
    bool certificates_ok = true;
    double worst_gap = 0;
    int solved = 0;
    auto audit = [&](const TransportSolution<double>& sol) {
        if (sol.status != LpStatus::optimal) return;
        ++solved;
        double rel = std::fabs(sol.gap) / std::max(1.0, std::fabs(sol.value));
        worst_gap = std::max(worst_gap, rel);
        certificates_ok = certificates_ok && rel <= 1e-8 && sol.dual_feasible;
    };
    bool entropic_ok = true;
    double worst_entropic = 0;
    for (int i = 0; i < 20; ++i) {
        int T = g.uniform_int(1, 2);
        auto e = gen_space(g, T, 2);
        auto s = gen_space(g, T, 2);
        auto eta = gen_measure(g, e, true);
        auto nu = gen_measure(g, s, true);
        auto cost = gen_cost(g, e->path_count(), s->path_count());
        auto lp = solve_causal_mk(eta, nu, cost);
        audit(lp);
        audit(solve_classic_mk(eta, nu, cost));
        EntropicOptions opt;
        opt.epsilon = 1e-3;
        auto ent = solve_causal_entropic(eta, nu, cost, opt);
        double diff = std::fabs(ent.value - lp.value);
        worst_entropic = std::max(worst_entropic, diff);
        entropic_ok = entropic_ok && diff <= 5e-3 && ent.causality_residual <= 1e-8;
    }
    r.seconds = now_seconds() - t0;
    r.pass = certificates_ok && entropic_ok;
    r.data = {{"lp_solved", solved},
              {"worst_relative_gap", worst_gap},
              {"worst_entropic_diff", worst_entropic}};
    r.details = "worst gap " + fmt(worst_gap) + ", worst entropic diff " + fmt(worst_entropic);
    return r;
}

CriterionResult criterion_convexity(std::uint64_t seed) {
    CriterionResult r;
    r.id = 5;
    r.name = "convexity of the causal value in the target";
    const double t0 = now_seconds();
    Gen g(seed * 1001 + 5);
    bool ok = true;
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        int T = g.uniform_int(1, 2);
        auto e = gen_space(g, T, 2);
        auto s = gen_space(g, T, 2);
        auto eta = gen_measure(g, e, false);
        auto nu1 = gen_measure(g, s, false);
        auto nu2 = gen_measure(g, s, false);
        auto cost = gen_cost(g, e->path_count(), s->path_count());
        double lambda = g.uniform();
        std::vector<double> wm(s->path_count());
        for (int j = 0; j < s->path_count(); ++j) wm[j] = lambda * nu1[j] + (1 - lambda) * nu2[j];
        PathMeasure<double> num(s, std::move(wm));
        double slack = value_S(eta, num, cost) -
                       (lambda * value_S(eta, nu1, cost) + (1 - lambda) * value_S(eta, nu2, cost));
        worst = std::max(worst, slack);
        ok = ok && slack <= 1e-9;
    }
    r.seconds = now_seconds() - t0;
    r.pass = ok;
    r.data = {{"triples", 100}, {"worst_convexity_slack", worst}};
    r.details = "worst slack " + fmt(worst);
    return r;
}

CriterionResult criterion_follmer_battery(std::uint64_t seed, long long n) {
    CriterionResult r;
    r.id = 6;
    r.name = "entropy = causal quadratic cost battery";
    const double t0 = now_seconds();
    auto model = GaussianPathModel::unit_horizon(200);
    bool ok = true;
    io::json data;

    {
        auto drift = Drift::constant(1.0);
        auto h = gauss::relative_entropy(model, drift, seed, n);
        auto f = gauss::follmer_energy(model, drift, seed, n);
        auto plan = gauss::optimal_plan_cost(model, drift, seed, n);
        auto dual = gauss::dual_certificate(model, drift, seed, n);
        double twoH = 2 * h.log_density.value;
        auto near1 = [&](double v, double se) { return std::fabs(v - 1.0) <= 3 * se + 1e-9; };
        bool this_ok = near1(twoH, 2 * h.log_density.standard_error) &&
                       near1(f.value, f.standard_error) &&
                       near1(plan.cost.value, plan.cost.standard_error) && plan.normality_ok &&
                       near1(dual.certificate.value, dual.certificate.standard_error) &&
                       dual.jensen_slack_mean >= -3 * dual.jensen_slack_se - 1e-9;
        ok = ok && this_ok;
        data["constant"] = {{"two_entropy", twoH},
                            {"two_entropy_se", 2 * h.log_density.standard_error},
                            {"follmer_energy", f.value},
                            {"optimal_plan_cost", plan.cost.value},
                            {"normality_worst_z", plan.worst_z},
                            {"dual_certificate", dual.certificate.value},
                            {"pass", this_ok}};
    }
    {
        auto drift = Drift::ou(1.0);
        const double oracle = 0.5 + (std::exp(-2.0) - 1.0) / 4.0;  // 0.283834
        auto h = gauss::relative_entropy(model, drift, seed + 1, n);
        auto f = gauss::follmer_energy(model, drift, seed + 1, n);
        auto plan = gauss::optimal_plan_cost(model, drift, seed + 1, n);
        auto dual = gauss::dual_certificate(model, drift, seed + 1, n);
        auto near = [&](double v) { return std::fabs(v - oracle) <= 0.02 * oracle; };
        bool this_ok = near(2 * h.log_density.value) && near(f.value) && near(plan.cost.value) &&
                       plan.normality_ok && near(dual.certificate.value);
        ok = ok && this_ok;
        data["ou"] = {{"oracle", oracle},
                      {"two_entropy", 2 * h.log_density.value},
                      {"follmer_energy", f.value},
                      {"optimal_plan_cost", plan.cost.value},
                      {"dual_certificate", dual.certificate.value},
                      {"pass", this_ok}};
    }
    {
        auto drift = Drift::constant(1.0);
        io::json hybrid = io::json::array();
        double previous = 1e300;
        bool hybrid_ok = true;
        for (int m : {0, 50, 100, 150, 200}) {
            auto c = gauss::hybrid_coupling_cost(model, drift, m, seed + 2, n);
            double closed = 1.0 + 2.0 * (200 - m);
            bool match = std::fabs(c.value - closed) <= 3 * c.standard_error + 1e-9;
            hybrid_ok = hybrid_ok && match && c.value < previous + 1e-9;
            previous = c.value;
            hybrid.push_back({{"m", m},
                              {"cost", c.value},
                              {"closed_form", closed},
                              {"se", c.standard_error},
                              {"pass", match}});
        }
        ok = ok && hybrid_ok;
        data["hybrid"] = std::move(hybrid);
        data["hybrid_monotone"] = hybrid_ok;
    }
    r.seconds = now_seconds() - t0;
    r.pass = ok;
    r.data = std::move(data);
    r.details = std::string(ok ? "all sub-checks pass" : "sub-check failed") + " (n=" +
                std::to_string(n) + ")";
    return r;
}

CriterionResult criterion_strong_gap(std::uint64_t seed, long long n) {
    CriterionResult r;
    r.id = 7;
    r.name = "strong-solution energy gap";
    const double t0 = now_seconds();
    auto model = GaussianPathModel::unit_horizon(200);
    bool ok = true;
    io::json data = io::json::array();
    struct Case { const char* name; Drift drift; bool two_sided; };
    for (const auto& c : {Case{"constant", Drift::constant(1.0), true},
                          Case{"ou", Drift::ou(1.0), true},
                          Case{"tanh", Drift::tanh_bounded(1.0), false}}) {
        auto rep = gauss::strong_solution_gap(model, c.drift, seed, n);
        bool lower_ok = rep.gap >= -3 * rep.gap_se - 1e-9;
        bool both_ok = std::fabs(rep.gap) <= 3 * rep.gap_se + 1e-9;
        bool this_ok = c.two_sided ? both_ok : lower_ok;
        ok = ok && this_ok;
        data.push_back({{"drift", c.name},
                        {"gap", rep.gap},
                        {"gap_se", rep.gap_se},
                        {"pass", this_ok}});
    }
    r.seconds = now_seconds() - t0;
    r.pass = ok;
    r.data = {{"cases", std::move(data)}};
    r.details = ok ? "gaps inside the band" : "gap outside the band";
    return r;
}

CriterionResult criterion_clark_ocone() {
    CriterionResult r;
    r.id = 8;
    r.name = "martingale representation on the sign walk";
    const double t0 = now_seconds();
    auto model = GaussianPathModel::unit_horizon(10, 1, gauss::IncrementKind::rademacher);
    gauss::PathFunctional linear = [](const std::vector<double>& inc) {
        double s = 0;
        for (std::size_t k = 0; k < inc.size(); ++k) s += (k + 1.0) * inc[k];
        return s;
    };
    gauss::PathFunctional square = [](const std::vector<double>& inc) {
        double s = 0;
        for (double v : inc) s += v;
        return s * s;
    };
    gauss::PathFunctional expsum = [](const std::vector<double>& inc) {
        double s = 0;
        for (double v : inc) s += v;
        return std::exp(s);
    };
    double worst = 0;
    worst = std::max(worst, gauss::clark_ocone_residual(model, linear));
    worst = std::max(worst, gauss::clark_ocone_residual(model, square));
    worst = std::max(worst, gauss::clark_ocone_residual(model, expsum));
    const double elapsed = now_seconds() - t0;
    r.seconds = elapsed;
    r.pass = worst <= 1e-12 && elapsed < 5.0;
    r.data = {{"worst_residual", worst}, {"within_time_budget", elapsed < 5.0}};
    r.details = "worst residual " + fmt(worst) +
                (elapsed < 5.0 ? ", within the 5s budget" : ", over the 5s budget");
    return r;
}

CriterionResult criterion_drift_recovery(std::uint64_t seed, long long n) {
    CriterionResult r;
    r.id = 9;
    r.name = "drift recovery from the density derivative";
    const double t0 = now_seconds();
    auto model100 = GaussianPathModel::unit_horizon(100);
    auto det = gauss::drift_from_density(model100, Drift::constant(1.0),
                                         seed, std::min<long long>(n, 20000));
    auto ou = gauss::drift_from_density(model100, Drift::ou(1.0), seed, n);
    r.seconds = now_seconds() - t0;
    bool det_ok = det.max_abs_error <= 1e-6;
    bool ou_ok = ou.rel_l2_error <= 0.05;
    r.pass = det_ok && ou_ok;
    r.data = {{"constant_max_abs_error", det.max_abs_error},
              {"ou_rel_l2_error", ou.rel_l2_error},
              {"regression_condition", ou.worst_condition}};
    r.details = "constant err " + fmt(det.max_abs_error) + ", ou rel L2 " + fmt(ou.rel_l2_error);
    return r;
}

CriterionResult criterion_talagrand(std::uint64_t seed, long long n) {
    CriterionResult r;
    r.id = 10;
    r.name = "transport-entropy-information chain";
    const double t0 = now_seconds();
    auto model = GaussianPathModel::unit_horizon(100);
    bool ok = true;
    io::json data = io::json::array();
    const long long jn = std::max<long long>(2000, n / 10);
    struct Case { const char* name; Drift drift; bool equality; };
    for (const auto& c : {Case{"constant", Drift::constant(1.0), true},
                          Case{"ou", Drift::ou(1.0), false},
                          Case{"tanh", Drift::tanh_bounded(1.0), false}}) {
        auto rep = gauss::talagrand_log_sobolev(model, c.drift, seed, n, 64, jn);
        bool this_ok = rep.chain_ok;
        if (c.equality) {
            this_ok = this_ok && std::fabs(rep.d2_lower - 1.0) <= 1e-6 &&
                      std::fabs(rep.two_entropy - 1.0) <= 3 * rep.two_entropy_se + 1e-9 &&
                      std::fabs(rep.j_value - 1.0) <= 3 * rep.j_se + 1e-6;
        }
        ok = ok && this_ok;
        data.push_back({{"drift", c.name},
                        {"d2_lower", rep.d2_lower},
                        {"d2_upper", rep.d2_upper},
                        {"two_entropy", rep.two_entropy},
                        {"j", rep.j_value},
                        {"pass", this_ok}});
    }
    r.seconds = now_seconds() - t0;
    r.pass = ok;
    r.data = {{"cases", std::move(data)}};
    r.details = ok ? "chain holds for all drifts" : "chain violated";
    return r;
}

CriterionResult criterion_bridge(std::uint64_t seed, long long n) {
    CriterionResult r;
    r.id = 11;
    r.name = "endpoint bridge and control cost";
    const double t0 = now_seconds();
    auto model = GaussianPathModel::unit_horizon(200);
    bool ok = true;
    io::json data;

    using bridge::EndpointMarginals;
    using bridge::GridMeasure;

    EndpointMarginals pinned;
    pinned.q1 = GridMeasure::from_points({{1.0}}, {1.0});
    EndpointMarginals normal33;
    {
        std::vector<std::vector<double>> pts;
        std::vector<double> w;
        double total = 0;
        for (int i = 0; i < 33; ++i) {
            double y = -4.0 + 0.25 * i;
            pts.push_back({y});
            total += (w.emplace_back(std::exp(-0.5 * y * y)), w.back());
        }
        for (auto& v : w) v /= total;
        normal33.q1 = GridMeasure::from_points(std::move(pts), std::move(w));
    }
    EndpointMarginals twoatom;
    twoatom.q1 = GridMeasure::from_points({{-1.0}, {1.0}}, {0.5, 0.5});

    struct Case { const char* name; EndpointMarginals* m; };
    for (const auto& c : {Case{"pinned", &pinned}, Case{"normal33", &normal33},
                          Case{"two_atom", &twoatom}}) {
        auto sol = bridge::solve_schrodinger_bridge(model, *c.m, 1e-9);
        auto rep = bridge::mikami_value_check(model, *c.m, sol, seed, n);
        bool this_ok = sol.converged && sol.marginal_error <= 1e-9 && rep.cost_matches &&
                       rep.clipping_rate < 1e-3;
        if (std::string(c.name) == "pinned")
            this_ok = this_ok && std::fabs(sol.entropy - 0.5) <= 1e-3;
        ok = ok && this_ok;
        data[c.name] = {{"entropy", sol.entropy},
                        {"marginal_error", sol.marginal_error},
                        {"control_cost", rep.control_cost},
                        {"control_cost_se", rep.control_cost_se},
                        {"terminal_tv", rep.terminal_tv},
                        {"clipping_rate", rep.clipping_rate},
                        {"pass", this_ok}};
    }
    r.seconds = now_seconds() - t0;
    r.pass = ok;
    r.data = std::move(data);
    r.details = ok ? "bridge entropy matches the simulated control cost"
                   : "bridge/control mismatch";
    return r;
}

CriterionResult criterion_reproducibility(std::uint64_t seed, long long n) {
    CriterionResult r;
    r.id = 12;
    r.name = "bitwise reproducibility across runs and thread counts";
    const double t0 = now_seconds();
    auto model = GaussianPathModel::unit_horizon(200);
    const long long nn = std::min<long long>(n, 30000);

    auto fingerprint = [&]() {
        auto h = gauss::relative_entropy(model, Drift::ou(1.0), seed, nn);
        auto hy = gauss::hybrid_coupling_cost(model, Drift::constant(1.0), 100, seed, nn);
        Anticipation inst;
        EntropicOptions opt;
        opt.epsilon = 1e-2;
        auto ent = solve_causal_entropic(inst.eta, inst.nu, inst.cost, opt);
        io::json j = {{"h", h.log_density.value},
                      {"h_se", h.log_density.standard_error},
                      {"hybrid", hy.value},
                      {"entropic", ent.value}};
        return j.dump();
    };
    setenv("KAUSAL_THREADS", "1", 1);
    auto a = fingerprint();
    setenv("KAUSAL_THREADS", "2", 1);
    auto b = fingerprint();
    setenv("KAUSAL_THREADS", "7", 1);
    auto c = fingerprint();
    unsetenv("KAUSAL_THREADS");
    auto d = fingerprint();

    r.seconds = now_seconds() - t0;
    r.pass = a == b && a == c && a == d;
    r.data = {{"fingerprint", a}, {"matches", r.pass}};
    r.details = r.pass ? "byte-identical across 1, 2, 7 and default threads"
                       : "fingerprint drift across thread counts";
    return r;
}

}  // namespace

SuiteResult run_acceptance(std::uint64_t seed, int scale, bool verbose) {
    if (scale < 1) scale = 1;
    SuiteResult out;
    out.seed = seed;
    out.samples = 100000 / scale;
    const long long n = out.samples;

    auto push = [&](CriterionResult c) {
        if (verbose) {
            std::fprintf(stderr, "[%s] criterion %2d: %s (%s)\n", c.pass ? "PASS" : "FAIL", c.id,
                         c.name.c_str(), c.details.c_str());
        }
        out.criteria.push_back(std::move(c));
    };

    push(criterion_causality_equivalence(seed));
    push(criterion_feasibility_ordering(seed));
    push(criterion_anticipation());
    push(criterion_lp_certificates(seed));
    push(criterion_convexity(seed));
    push(criterion_follmer_battery(seed, n));
    push(criterion_strong_gap(seed, n));
    push(criterion_clark_ocone());
    push(criterion_drift_recovery(seed, n));
    push(criterion_talagrand(seed, std::max<long long>(n / 5, 2000)));
    push(criterion_bridge(seed, n));
    push(criterion_reproducibility(seed, n));
    return out;
}

io::json report_json(const SuiteResult& result) {
    io::json j;
    j["version"] = kVersion;
    j["config"] = {{"seed", result.seed}, {"samples", result.samples}};
    io::json arr = io::json::array();
    for (const auto& c : result.criteria)
        arr.push_back({{"id", c.id},
                       {"name", c.name},
                       {"pass", c.pass},
                       {"details", c.details},
                       {"data", c.data}});
    j["criteria"] = std::move(arr);
    j["all_pass"] = result.all_pass();
    return j;
}

std::string report_csv(const SuiteResult& result) {
    std::ostringstream os;
    os << "id,name,pass,details\n";
    for (const auto& c : result.criteria) {
        std::string det = c.details;
        for (auto& ch : det)
            if (ch == ',') ch = ';';
        os << c.id << ",\"" << c.name << "\"," << (c.pass ? "true" : "false") << ",\"" << det
           << "\"\n";
    }
    return os.str();
}

io::json timings_json(const SuiteResult& result) {
    io::json arr = io::json::array();
    for (const auto& c : result.criteria)
        arr.push_back({{"id", c.id}, {"seconds", c.seconds}});
    return {{"timings", std::move(arr)}};
}

}  // namespace kausal::suite
