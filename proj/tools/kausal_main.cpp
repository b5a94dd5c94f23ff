// Command-line front end: solve | check | gaussian | bridge | suite.
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kausal/bridge.hpp"
#include "kausal/gaussian.hpp"
#include "kausal/io.hpp"
#include "kausal/suite.hpp"
#include "kausal/transport.hpp"
#include "kausal/version.hpp"

namespace {

using kausal::io::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerification = 4;

std::string dirname_of(const std::string& path) {
    auto slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

void emit(const json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::printf("%s\n", report.dump(2).c_str());
    } else {
        kausal::io::save_json(report, out_path);
        std::fprintf(stderr, "wrote %s\n", out_path.c_str());
    }
}

json envelope(const json& config) {
    json j;
    j["version"] = kausal::kVersion;
    j["config"] = config;
    return j;
}

kausal::gauss::Drift parse_drift(const std::string& args) {
    std::string kind;
    double a = 0, lambda = 0, scale = 0;
    bool have_a = false, have_lambda = false, have_scale = false;
    std::size_t pos = 0;
    while (pos < args.size()) {
        auto comma = args.find(',', pos);
        std::string tok = args.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw kausal::ValidationError("drift tokens must look like key=value: " + tok);
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "kind") kind = val;
        else if (key == "a") { a = std::stod(val); have_a = true; }
        else if (key == "lambda") { lambda = std::stod(val); have_lambda = true; }
        else if (key == "scale") { scale = std::stod(val); have_scale = true; }
        else throw kausal::ValidationError("unknown drift parameter: " + key);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    using kausal::gauss::Drift;
    if (kind == "zero") return Drift::zero();
    if (kind == "constant") return Drift::constant(have_a ? a : 1.0);
    if (kind == "ou") return Drift::ou(have_lambda ? lambda : 1.0);
    if (kind == "tanh") return Drift::tanh_bounded(have_scale ? scale : 1.0);
    throw kausal::ValidationError("unknown drift kind: " + kind);
}

kausal::gauss::GaussianPathModel parse_model(const std::string& path) {
    using kausal::gauss::GaussianPathModel;
    using kausal::gauss::IncrementKind;
    if (path.empty()) return GaussianPathModel::unit_horizon(200, 1);
    json j = kausal::io::load_json(path);
    int n = j.value("N", 200);
    double dt = j.value("dt", 1.0 / n);
    int d = j.value("d", 1);
    std::string inc = j.value("increment_model", "gaussian");
    IncrementKind kind = inc == "rademacher" ? IncrementKind::rademacher : IncrementKind::gaussian;
    return GaussianPathModel(n, dt, d, kind);
}

kausal::bridge::GridMeasure grid_from_file(const std::string& path) {
    json j = kausal::io::load_json(path);
    if (!j.contains("points") || !j.contains("weights"))
        throw kausal::ValidationError("grid measure file needs 'points' and 'weights'");
    return kausal::bridge::GridMeasure::from_points(
        j.at("points").get<std::vector<std::vector<double>>>(),
        j.at("weights").get<std::vector<double>>());
}

int run_solve(const std::string& eta_path, const std::string& nu_path,
              const std::string& cost_path, const std::string& mode, double epsilon, bool exact,
              const std::string& out) {
    json config = {{"subcommand", "solve"}, {"eta", eta_path},     {"nu", nu_path},
                   {"cost", cost_path},     {"mode", mode},        {"epsilon", epsilon},
                   {"exact", exact}};
    auto cost = kausal::io::cost_from_json(kausal::io::load_json(cost_path));
    json report = envelope(config);

    if (exact) {
        auto eta = kausal::io::exact_measure_from_json(kausal::io::load_json(eta_path));
        auto nu = kausal::io::exact_measure_from_json(kausal::io::load_json(nu_path));
        kausal::TransportSolution<kausal::Rational> sol;
        if (mode == "classic") sol = kausal::solve_classic_mk(eta, nu, cost);
        else if (mode == "causal") sol = kausal::solve_causal_mk(eta, nu, cost);
        else throw kausal::ValidationError("--exact supports modes classic and causal");
        report["solution"] = kausal::io::transport_solution_to_json(sol);
        emit(report, out);
        return sol.status == kausal::LpStatus::optimal ? kExitOk : kExitSolver;
    }
    auto eta = kausal::io::measure_from_json(kausal::io::load_json(eta_path));
    auto nu = kausal::io::measure_from_json(kausal::io::load_json(nu_path));
    kausal::TransportSolution<double> sol;
    if (mode == "classic") {
        sol = kausal::solve_classic_mk(eta, nu, cost);
    } else if (mode == "causal") {
        sol = kausal::solve_causal_mk(eta, nu, cost);
    } else if (mode == "causal-entropic") {
        kausal::EntropicOptions opt;
        opt.epsilon = epsilon;
        sol = kausal::solve_causal_entropic(eta, nu, cost, opt);
    } else {
        throw kausal::ValidationError("unknown mode: " + mode);
    }
    report["solution"] = kausal::io::transport_solution_to_json(sol);
    emit(report, out);
    if (sol.status == kausal::LpStatus::optimal) return kExitOk;
    if (sol.status == kausal::LpStatus::infeasible) return kExitOk;  // honest outcome, reported
    return kExitSolver;
}

int run_check(const std::string& coupling_path, const std::string& out) {
    json j = kausal::io::load_json(coupling_path);
    auto gamma = kausal::io::coupling_from_json(j, dirname_of(coupling_path));
    auto verdict = kausal::is_causal(gamma);
    bool laws = kausal::is_causal_via_conditional_laws(gamma);

    json report = envelope({{"subcommand", "check"}, {"coupling", coupling_path}});
    report["causal"] = verdict.causal;
    report["conditional_law_route"] = laws;
    if (verdict.witness) {
        report["witness"] = {{"t", verdict.witness->t},
                             {"path_a", verdict.witness->path_a},
                             {"path_b", verdict.witness->path_b},
                             {"s_atom", verdict.witness->s_atom}};
    } else {
        report["witness"] = nullptr;
    }
    json filt = json::array();
    for (int t = 1; t <= gamma.first_space()->steps(); ++t)
        filt.push_back(kausal::generated_filtration(gamma, t));
    report["generated_filtration"] = std::move(filt);
    emit(report, out);
    return kExitOk;
}

int run_gaussian(const std::string& model_path, const std::string& drift_arg,
                 const std::string& checks_csv, std::uint64_t seed, long long samples,
                 const std::string& out) {
    auto model = parse_model(model_path);
    auto drift = parse_drift(drift_arg);
    json config = {{"subcommand", "gaussian verify"},
                   {"model", {{"N", model.steps}, {"dt", model.dt}, {"d", model.dim},
                              {"increment_model", model.increments ==
                                                      kausal::gauss::IncrementKind::rademacher
                                                  ? "rademacher"
                                                  : "gaussian"}}},
                   {"drift", drift_arg},
                   {"checks", checks_csv},
                   {"seed", seed},
                   {"samples", samples}};
    json report = envelope(config);
    json results;
    bool all_pass = true;
    using namespace kausal::gauss;

    auto want = [&](const std::string& name) {
        return checks_csv.empty() || checks_csv.find(name) != std::string::npos;
    };
    EntropyEstimate h{};
    bool have_h = false;
    auto entropy = [&]() -> EntropyEstimate& {
        if (!have_h) {
            h = relative_entropy(model, drift, seed, samples);
            have_h = true;
        }
        return h;
    };

    if (want("follmer")) {
        auto& he = entropy();
        auto f = follmer_energy(model, drift, seed, samples);
        double diff = std::fabs(2 * he.log_density.value - f.value);
        bool pass = diff <= 6 * he.diff_se + 1e-9;
        all_pass = all_pass && pass;
        results["follmer"] = {{"estimate", f.value},
                              {"oracle", 2 * he.log_density.value},
                              {"standard_error", f.standard_error},
                              {"pass", pass}};
    }
    if (want("optimal")) {
        auto& he = entropy();
        auto plan = optimal_plan_cost(model, drift, seed, samples);
        double tol = 3 * std::sqrt(plan.cost.standard_error * plan.cost.standard_error +
                                   4 * he.log_density.standard_error *
                                       he.log_density.standard_error) +
                     1e-9;
        bool pass = plan.normality_ok &&
                    std::fabs(plan.cost.value - 2 * he.log_density.value) <= tol;
        all_pass = all_pass && pass;
        results["optimal"] = {{"estimate", plan.cost.value},
                              {"oracle", 2 * he.log_density.value},
                              {"standard_error", plan.cost.standard_error},
                              {"normality_worst_z", plan.worst_z},
                              {"pass", pass}};
    }
    if (want("hybrid")) {
        auto c0 = hybrid_coupling_cost(model, drift, 0, seed, samples);
        auto ch = hybrid_coupling_cost(model, drift, model.steps / 2, seed, samples);
        auto cn = hybrid_coupling_cost(model, drift, model.steps, seed, samples);
        auto f = follmer_energy(model, drift, seed, samples);
        bool pass = c0.value >= ch.value - 1e-9 && ch.value >= cn.value - 1e-9 &&
                    std::fabs(cn.value - f.value) <= 3 * (cn.standard_error +
                                                          f.standard_error) +
                                                        1e-9;
        all_pass = all_pass && pass;
        results["hybrid"] = {{"estimate", {c0.value, ch.value, cn.value}},
                             {"cutoffs", {0, model.steps / 2, model.steps}},
                             {"oracle", f.value},
                             {"standard_error", {c0.standard_error, ch.standard_error,
                                                 cn.standard_error}},
                             {"pass", pass}};
    }
    if (want("strong")) {
        auto rep = strong_solution_gap(model, drift, seed, samples);
        bool pass = std::fabs(rep.gap) <= 3 * rep.gap_se + 1e-9;
        all_pass = all_pass && pass;
        results["strong"] = {{"estimate", rep.gap},
                             {"oracle", 0.0},
                             {"standard_error", rep.gap_se},
                             {"pass", pass}};
    }
    if (want("dual")) {
        auto rep = dual_certificate(model, drift, seed, samples);
        bool pass = std::fabs(rep.certificate.value - rep.two_entropy.value) <=
                        3 * rep.pair_diff_se + 1e-9 &&
                    rep.jensen_slack_mean >= -3 * rep.jensen_slack_se - 1e-9;
        all_pass = all_pass && pass;
        results["dual"] = {{"estimate", rep.certificate.value},
                           {"oracle", rep.two_entropy.value},
                           {"standard_error", rep.certificate.standard_error},
                           {"jensen_slack", rep.jensen_slack_mean},
                           {"pass", pass}};
    }
    if (want("talagrand")) {
        auto rep = talagrand_log_sobolev(model, drift, seed, samples, 64,
                                         std::max<long long>(samples / 10, 2000));
        all_pass = all_pass && rep.chain_ok;
        results["talagrand"] = {{"estimate", {rep.d2_lower, rep.two_entropy, rep.j_value}},
                                {"oracle", "d2 <= 2H <= J"},
                                {"standard_error",
                                 {rep.d2_lower_se, rep.two_entropy_se, rep.j_se}},
                                {"pass", rep.chain_ok}};
    }
    if (want("clark-ocone")) {
        auto rmodel = GaussianPathModel::unit_horizon(std::min(model.steps, 10), 1,
                                                      IncrementKind::rademacher);
        PathFunctional square = [](const std::vector<double>& inc) {
            double s = 0;
            for (double v : inc) s += v;
            return s * s;
        };
        double res = clark_ocone_residual(rmodel, square);
        bool pass = res <= 1e-12;
        all_pass = all_pass && pass;
        results["clark-ocone"] = {{"estimate", res}, {"oracle", 0.0},
                                  {"standard_error", 0.0}, {"pass", pass}};
    }
    if (want("drift-recovery")) {
        auto rep = drift_from_density(model, drift, seed, samples);
        double tol = drift.name() == "constant" || drift.name() == "zero" ? 1e-6 : 5e-2;
        bool pass = (drift.name() == "constant" || drift.name() == "zero"
                         ? rep.max_abs_error
                         : rep.rel_l2_error) <= tol;
        all_pass = all_pass && pass;
        results["drift-recovery"] = {{"estimate", rep.rel_l2_error},
                                     {"max_abs_error", rep.max_abs_error},
                                     {"oracle", 0.0},
                                     {"standard_error", 0.0},
                                     {"pass", pass}};
    }
    report["results"] = std::move(results);
    report["all_pass"] = all_pass;
    emit(report, out);
    return all_pass ? kExitOk : kExitVerification;
}

int run_bridge(const std::string& q1_path, const std::string& q0_path, double tol, bool verify,
               std::uint64_t seed, long long samples, const std::string& out) {
    kausal::bridge::EndpointMarginals m;
    m.q1 = grid_from_file(q1_path);
    if (!q0_path.empty()) m.q0 = grid_from_file(q0_path);
    else m.q0 = kausal::bridge::GridMeasure::dirac_origin(m.q1.dim);
    auto model = kausal::gauss::GaussianPathModel::unit_horizon(200, m.q1.dim);

    json config = {{"subcommand", "bridge"}, {"q1", q1_path},
                   {"q0", q0_path.empty() ? "dirac0" : q0_path},
                   {"tol", tol},             {"verify", verify},
                   {"seed", seed},           {"samples", samples}};
    json report = envelope(config);

    auto sol = kausal::bridge::solve_schrodinger_bridge(model, m, tol);
    report["entropy"] = sol.entropy;
    report["marginal_error"] = sol.marginal_error;
    report["sweeps"] = sol.sweeps;
    report["f_potential"] = sol.f_potential;
    report["g_potential"] = sol.g_potential;
    report["coupling"] = sol.coupling;

    bool pass = true;
    if (verify) {
        auto rep = kausal::bridge::mikami_value_check(model, m, sol, seed, samples);
        report["verify"] = {{"control_cost", rep.control_cost},
                            {"control_cost_se", rep.control_cost_se},
                            {"terminal_tv", rep.terminal_tv},
                            {"clipping_rate", rep.clipping_rate},
                            {"cost_matches", rep.cost_matches}};
        pass = rep.cost_matches && rep.clipping_rate < 1e-3;
    }
    emit(report, out);
    return pass ? kExitOk : kExitVerification;
}

int run_suite(std::uint64_t seed, int scale, const std::string& out, const std::string& csv) {
    auto result = kausal::suite::run_acceptance(seed, scale, /*verbose=*/true);
    json report = kausal::suite::report_json(result);
    emit(report, out);
    if (!csv.empty()) {
        std::ofstream f(csv);
        if (!f) throw kausal::ValidationError("cannot write file: " + csv);
        f << kausal::suite::report_csv(result);
        std::fprintf(stderr, "wrote %s\n", csv.c_str());
    }
    if (!out.empty()) {
        kausal::io::save_json(kausal::suite::timings_json(result), out + ".timings.json");
    }
    return result.all_pass() ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal transport toolkit"};
    app.set_version_flag("--version", kausal::kVersion);
    app.require_subcommand(1);

    std::string eta_path, nu_path, cost_path, mode = "classic", out_path;
    double epsilon = 1e-2;
    bool exact = false;
    auto* solve = app.add_subcommand("solve", "solve a transport problem");
    solve->add_option("--eta", eta_path, "source measure file")->required();
    solve->add_option("--nu", nu_path, "target measure file")->required();
    solve->add_option("--cost", cost_path, "cost matrix file")->required();
    solve->add_option("--mode", mode, "classic | causal | causal-entropic");
    solve->add_option("--epsilon", epsilon, "entropic regularization weight");
    solve->add_flag("--exact", exact, "exact rational arithmetic (classic/causal)");
    solve->add_option("--out", out_path, "report file (stdout when omitted)");

    std::string coupling_path, check_out;
    auto* check = app.add_subcommand("check", "causality-check a coupling");
    check->add_option("--coupling", coupling_path, "coupling file")->required();
    check->add_option("--out", check_out, "report file");

    std::string model_path, drift_arg = "kind=constant,a=1";
    std::string checks = "follmer,optimal,hybrid,strong,dual,talagrand,clark-ocone,drift-recovery";
    std::uint64_t gseed = 42;
    long long gsamples = 100000;
    std::string gout;
    auto* gaussian = app.add_subcommand("gaussian", "Wiener-model verification");
    auto* verify = gaussian->add_subcommand("verify", "run the verification checks");
    verify->add_option("--model", model_path, "model JSON (N, dt, d, increment_model)");
    verify->add_option("--drift", drift_arg, "kind=constant,a=1 | kind=ou,lambda=1 | kind=tanh,scale=1");
    verify->add_option("--checks", checks, "comma list of checks");
    verify->add_option("--seed", gseed, "rng seed");
    verify->add_option("--samples", gsamples, "Monte Carlo sample count");
    verify->add_option("--out", gout, "report file");

    std::string q1_path, q0_path, bout;
    double btol = 1e-9;
    bool bverify = false;
    std::uint64_t bseed = 42;
    long long bsamples = 100000;
    auto* bridge_cmd = app.add_subcommand("bridge", "endpoint bridge solver");
    bridge_cmd->add_option("--q1", q1_path, "terminal grid measure file")->required();
    bridge_cmd->add_option("--q0", q0_path, "initial grid measure file (default point mass at 0)");
    bridge_cmd->add_option("--tol", btol, "IPF marginal tolerance");
    bridge_cmd->add_flag("--verify", bverify, "simulate the control and compare costs");
    bridge_cmd->add_option("--seed", bseed, "rng seed");
    bridge_cmd->add_option("--samples", bsamples, "verification sample count");
    bridge_cmd->add_option("--out", bout, "report file");

    std::uint64_t sseed = 42;
    int sscale = 1;
    std::string sout, scsv;
    auto* suite_cmd = app.add_subcommand("suite", "run the acceptance battery");
    suite_cmd->add_option("--seed", sseed, "rng seed");
    suite_cmd->add_option("--scale", sscale, "divide Monte Carlo sample counts (quick runs)");
    suite_cmd->add_option("--out", sout, "JSON report file");
    suite_cmd->add_option("--csv", scsv, "CSV table file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        // --help/--version land here with code 0; anything else is bad usage
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (solve->parsed())
            return run_solve(eta_path, nu_path, cost_path, mode, epsilon, exact, out_path);
        if (check->parsed()) return run_check(coupling_path, check_out);
        if (gaussian->parsed()) {
            if (!verify->parsed())
                throw kausal::ValidationError("gaussian needs the 'verify' subcommand");
            return run_gaussian(model_path, drift_arg, checks, gseed, gsamples, gout);
        }
        if (bridge_cmd->parsed())
            return run_bridge(q1_path, q0_path, btol, bverify, bseed, bsamples, bout);
        if (suite_cmd->parsed()) return run_suite(sseed, sscale, sout, scsv);
    } catch (const kausal::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const kausal::SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kExitSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitValidation;
}
