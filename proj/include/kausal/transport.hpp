#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "kausal/causality.hpp"
#include "kausal/path_space.hpp"
#include "kausal/simplex.hpp"

namespace kausal {

// Cost entries live in R + {+inf}; +inf marks forbidden cells. NaN and -inf
// are rejected up front.
class CostMatrix {
public:
    CostMatrix(int rows, int cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (static_cast<int>(entries_.size()) != rows_ * cols_)
            throw ValidationError("cost matrix has wrong shape");
        for (double v : entries_) {
            if (std::isnan(v)) throw ValidationError("cost matrix contains NaN");
            if (v == -std::numeric_limits<double>::infinity())
                throw ValidationError("cost matrix contains -inf");
        }
    }

    static CostMatrix constant(int rows, int cols, double v) {
        return CostMatrix(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, v));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double at(int i, int j) const { return entries_[static_cast<std::size_t>(i) * cols_ + j]; }
    bool finite_at(int i, int j) const { return std::isfinite(at(i, j)); }
    const std::vector<double>& entries() const { return entries_; }

private:
    int rows_;
    int cols_;
    std::vector<double> entries_;
};

enum class TransportMode { classic, causal };

template <class S>
struct DualCertificate {
    std::vector<S> row_potentials;      // one per eta-positive row kept in the LP
    std::vector<int> row_paths;
    std::vector<S> col_potentials;      // one per column kept in the LP
    std::vector<int> col_paths;
    std::vector<S> causality_multipliers;  // one per chain equality kept
    std::vector<int> causality_ids;
};

template <class S>
struct TransportSolution {
    LpStatus status = LpStatus::infeasible;
    S value = scalar_traits<S>::zero();
    std::optional<Coupling<S>> plan;
    DualCertificate<S> dual;
    S gap = scalar_traits<S>::zero();
    bool dual_feasible = false;
    int lp_iterations = 0;
    // entropic diagnostics
    double marginal_residual = 0.0;
    double causality_residual = 0.0;
    long sweeps = 0;
    bool converged = true;
};

namespace detail {

template <class S>
S exact_cost(double v) {
    if constexpr (scalar_traits<S>::exact) return Rational::from_double(v);
    else return v;
}

// Variables: coupling cells (i, j) with eta_i > 0, nu_j > 0 and finite cost.
// Rows: one mass equation per positive eta row, one per positive nu column,
// plus optional causality chain equalities.
template <class S>
struct TransportLp {
    LpProblem<S> lp;
    std::vector<std::pair<int, int>> cells;  // variable -> (path_i, path_j)
    std::vector<int> row_paths;
    std::vector<int> col_paths;
    int n_row_constraints = 0;
    int n_col_constraints = 0;
    int n_chain_constraints = 0;
};

template <class S>
TransportLp<S> build_transport_lp(const PathMeasure<S>& eta, const PathMeasure<S>& nu,
                                  const CostMatrix& cost,
                                  const CausalityConstraintSet<S>* chains) {
    if (cost.rows() != eta.size() || cost.cols() != nu.size())
        throw ValidationError("cost matrix shape does not match the marginals");
    TransportLp<S> out;
    std::vector<int> row_of(eta.size(), -1), col_of(nu.size(), -1);
    for (int i = 0; i < eta.size(); ++i)
        if (eta.is_positive(i)) {
            row_of[i] = static_cast<int>(out.row_paths.size());
            out.row_paths.push_back(i);
        }
    for (int j = 0; j < nu.size(); ++j)
        if (nu.is_positive(j)) {
            col_of[j] = static_cast<int>(out.col_paths.size());
            out.col_paths.push_back(j);
        }
    std::vector<std::vector<int>> var_at(eta.size(), std::vector<int>(nu.size(), -1));
    for (int i : out.row_paths)
        for (int j : out.col_paths)
            if (cost.finite_at(i, j)) {
                var_at[i][j] = static_cast<int>(out.cells.size());
                out.cells.emplace_back(i, j);
            }

    const int n = static_cast<int>(out.cells.size());
    out.n_row_constraints = static_cast<int>(out.row_paths.size());
    out.n_col_constraints = static_cast<int>(out.col_paths.size());
    int m = out.n_row_constraints + out.n_col_constraints;
    std::vector<const ChainEquality<S>*> kept;
    if (chains) {
        for (const auto& eq : chains->equalities) kept.push_back(&eq);
        m += static_cast<int>(kept.size());
        out.n_chain_constraints = static_cast<int>(kept.size());
    }

    out.lp.rows = m;
    out.lp.cols = n;
    out.lp.a.assign(static_cast<std::size_t>(m) * n, scalar_traits<S>::zero());
    out.lp.b.assign(m, scalar_traits<S>::zero());
    out.lp.c.resize(n);
    for (int v = 0; v < n; ++v) {
        auto [i, j] = out.cells[v];
        out.lp.c[v] = exact_cost<S>(cost.at(i, j));
        out.lp.at(row_of[i], v) = scalar_traits<S>::one();
        out.lp.at(out.n_row_constraints + col_of[j], v) = scalar_traits<S>::one();
    }
    for (int r = 0; r < out.n_row_constraints; ++r) out.lp.b[r] = eta[out.row_paths[r]];
    for (int c = 0; c < out.n_col_constraints; ++c)
        out.lp.b[out.n_row_constraints + c] = nu[out.col_paths[c]];
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const auto& eq = *kept[k];
        const int row = out.n_row_constraints + out.n_col_constraints + static_cast<int>(k);
        for (int j : eq.cols) {
            if (var_at[eq.row_a][j] >= 0) out.lp.at(row, var_at[eq.row_a][j]) += eq.eta_b;
            if (var_at[eq.row_b][j] >= 0) out.lp.at(row, var_at[eq.row_b][j]) -= eq.eta_a;
        }
    }
    return out;
}

template <class S>
TransportSolution<S> run_transport_lp(const PathMeasure<S>& eta, const PathMeasure<S>& nu,
                                      const CostMatrix& cost,
                                      const CausalityConstraintSet<S>* chains) {
    auto built = build_transport_lp(eta, nu, cost, chains);
    // rows with positive mass but no finite cost cell are honest infeasibility
    for (int i : built.row_paths) {
        bool any = false;
        for (int j : built.col_paths) any = any || cost.finite_at(i, j);
        if (!any) {
            TransportSolution<S> out;
            out.status = LpStatus::infeasible;
            return out;
        }
    }
    LpResult<S> res = solve_lp(built.lp);
    TransportSolution<S> out;
    out.status = res.status;
    out.lp_iterations = res.iterations;
    if (res.status != LpStatus::optimal) return out;
    out.value = res.value;
    out.gap = res.gap;
    out.dual_feasible = kausal::dual_feasible(built.lp, res);

    std::vector<S> w(static_cast<std::size_t>(eta.size()) * nu.size(), scalar_traits<S>::zero());
    for (std::size_t v = 0; v < built.cells.size(); ++v) {
        auto [i, j] = built.cells[v];
        S x = res.x[v];
        if constexpr (!scalar_traits<S>::exact) {
            if (x < 0 && x > -1e-12) x = 0;
        }
        w[static_cast<std::size_t>(i) * nu.size() + j] = x;
    }
    out.plan.emplace(eta.space(), nu.space(), std::move(w));

    // split the multipliers back into potentials per constraint group
    auto& dual = out.dual;
    dual.row_paths = built.row_paths;
    dual.col_paths = built.col_paths;
    dual.row_potentials.assign(built.row_paths.size(), scalar_traits<S>::zero());
    dual.col_potentials.assign(built.col_paths.size(), scalar_traits<S>::zero());
    for (std::size_t k = 0; k < res.row_ids.size(); ++k) {
        int r = res.row_ids[k];
        if (r < built.n_row_constraints) {
            dual.row_potentials[r] = res.y[k];
        } else if (r < built.n_row_constraints + built.n_col_constraints) {
            dual.col_potentials[r - built.n_row_constraints] = res.y[k];
        } else {
            dual.causality_ids.push_back(r - built.n_row_constraints - built.n_col_constraints);
            dual.causality_multipliers.push_back(res.y[k]);
        }
    }
    return out;
}

}  // namespace detail

template <class S>
TransportSolution<S> solve_classic_mk(const PathMeasure<S>& eta, const PathMeasure<S>& nu,
                                      const CostMatrix& cost) {
    return detail::run_transport_lp<S>(eta, nu, cost, nullptr);
}

template <class S>
TransportSolution<S> solve_causal_mk(const PathMeasure<S>& eta, const PathMeasure<S>& nu,
                                     const CostMatrix& cost) {
    auto chains = causality_constraints(*eta.space(), *nu.space(), eta);
    return detail::run_transport_lp<S>(eta, nu, cost, &chains);
}

template <class S>
S value_S(const PathMeasure<S>& eta, const PathMeasure<S>& nu, const CostMatrix& cost) {
    auto sol = solve_causal_mk(eta, nu, cost);
    if (sol.status != LpStatus::optimal) throw SolverError("value_S: no optimum");
    return sol.value;
}

template <class S>
S value_T(const PathMeasure<S>& eta, const PathMeasure<S>& nu, const CostMatrix& cost) {
    auto sol = solve_classic_mk(eta, nu, cost);
    if (sol.status != LpStatus::optimal) throw SolverError("value_T: no optimum");
    return sol.value;
}

// ---- entropic solver --------------------------------------------------------

struct EntropicOptions {
    double epsilon = 1e-2;
    double kl_stop = 1e-12;       // successive-iterate KL change per sweep
    double residual_stop = 1e-9;  // marginal + chain feasibility at the iterate
    long max_sweeps = 50000;
    bool anneal = true;           // epsilon-scaling warm start
};

// min <c, gamma> + eps * KL(gamma | eta (x) nu) over both marginals plus the
// causality chain equalities, by cyclic Bregman projections in log space.
// Every constraint set is affine, so plain cycling converges to the KL
// projection; each chain equality has the closed-form projection that moves
// the two blocks to their eta-weighted geometric-mean kernel value.
TransportSolution<double> inline solve_causal_entropic(const PathMeasure<double>& eta,
                                                       const PathMeasure<double>& nu,
                                                       const CostMatrix& cost,
                                                       const EntropicOptions& opt) {
    for (int i = 0; i < eta.size(); ++i)
        for (int j = 0; j < nu.size(); ++j)
            if (!cost.finite_at(i, j)) throw ValidationError("entropic solver needs finite costs");
    if (!(opt.epsilon > 0)) throw ValidationError("entropic solver needs epsilon > 0");

    const auto rows = eta.support();
    const auto cols = nu.support();
    const int nr = static_cast<int>(rows.size());
    const int nc = static_cast<int>(cols.size());
    auto chains = causality_constraints(*eta.space(), *nu.space(), eta);

    std::vector<int> row_pos(eta.size(), -1), col_pos(nu.size(), -1);
    for (int r = 0; r < nr; ++r) row_pos[rows[r]] = r;
    for (int c = 0; c < nc; ++c) col_pos[cols[c]] = c;

    std::vector<double> log_eta(nr), log_nu(nc);
    for (int r = 0; r < nr; ++r) log_eta[r] = std::log(eta[rows[r]]);
    for (int c = 0; c < nc; ++c) log_nu[c] = std::log(nu[cols[c]]);

    auto lse = [](const std::vector<double>& v) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double x : v) mx = std::max(mx, x);
        if (!std::isfinite(mx)) return mx;
        double s = 0;
        for (double x : v) s += std::exp(x - mx);
        return mx + std::log(s);
    };

    std::vector<double> L(static_cast<std::size_t>(nr) * nc);
    auto lat = [&](int r, int c) -> double& { return L[static_cast<std::size_t>(r) * nc + c]; };

    std::vector<double> eps_ladder;
    if (opt.anneal) {
        double e = std::max(opt.epsilon, 1.0);
        while (e > opt.epsilon * 1.5) {
            eps_ladder.push_back(e);
            e /= 2;
        }
    }
    eps_ladder.push_back(opt.epsilon);

    // row/col potentials carried across the ladder
    std::vector<double> fpot(nr, 0.0), gpot(nc, 0.0);

    TransportSolution<double> out;
    long total_sweeps = 0;
    std::vector<double> prev;
    std::vector<double> buf;

    // feasibility of the current iterate, exponentiated on the fly
    auto iterate_residual = [&]() {
        double res = 0;
        std::vector<double> rowm(nr, 0.0), colm(nc, 0.0);
        for (int r = 0; r < nr; ++r)
            for (int c = 0; c < nc; ++c) {
                double v = std::exp(lat(r, c));
                rowm[r] += v;
                colm[c] += v;
            }
        for (int r = 0; r < nr; ++r) res = std::max(res, std::fabs(rowm[r] - eta[rows[r]]));
        for (int c = 0; c < nc; ++c) res = std::max(res, std::fabs(colm[c] - nu[cols[c]]));
        for (const auto& eq : chains.equalities) {
            double p = 0, q = 0;
            for (int j : eq.cols) {
                if (col_pos[j] < 0) continue;
                p += std::exp(lat(row_pos[eq.row_a], col_pos[j]));
                q += std::exp(lat(row_pos[eq.row_b], col_pos[j]));
            }
            res = std::max(res, std::fabs(p * eta[eq.row_b] - q * eta[eq.row_a]));
        }
        return res;
    };

    for (double eps : eps_ladder) {
        // rebuild iterate from the anchor and carried potentials
        for (int r = 0; r < nr; ++r)
            for (int c = 0; c < nc; ++c)
                lat(r, c) = log_eta[r] + log_nu[c] - cost.at(rows[r], cols[c]) / eps + fpot[r] + gpot[c];
        const bool last_rung = eps == eps_ladder.back();
        const long budget = last_rung ? opt.max_sweeps : std::min<long>(opt.max_sweeps, 8000);
        bool converged = false;
        for (long sweep = 0; sweep < budget; ++sweep) {
            ++total_sweeps;
            prev = L;
            // rows to eta
            for (int r = 0; r < nr; ++r) {
                buf.assign(L.begin() + static_cast<std::size_t>(r) * nc,
                           L.begin() + static_cast<std::size_t>(r + 1) * nc);
                double shift = log_eta[r] - lse(buf);
                fpot[r] += shift;
                for (int c = 0; c < nc; ++c) lat(r, c) += shift;
            }
            // columns to nu
            for (int c = 0; c < nc; ++c) {
                buf.resize(nr);
                for (int r = 0; r < nr; ++r) buf[r] = lat(r, c);
                double shift = log_nu[c] - lse(buf);
                gpot[c] += shift;
                for (int r = 0; r < nr; ++r) lat(r, c) += shift;
            }
            // chain equalities
            for (std::size_t q = 0; q < chains.equalities.size(); ++q) {
                const auto& eq = chains.equalities[q];
                int ra = row_pos[eq.row_a], rb = row_pos[eq.row_b];
                if (ra < 0 || rb < 0) continue;
                buf.clear();
                for (int j : eq.cols)
                    if (col_pos[j] >= 0) buf.push_back(lat(ra, col_pos[j]));
                double lp = lse(buf);
                buf.clear();
                for (int j : eq.cols)
                    if (col_pos[j] >= 0) buf.push_back(lat(rb, col_pos[j]));
                double lq = lse(buf);
                if (!std::isfinite(lp) || !std::isfinite(lq)) continue;
                const double a = eta[eq.row_a], b = eta[eq.row_b];
                const double lk1 = lp - std::log(a), lk2 = lq - std::log(b);
                const double lg = (a * lk1 + b * lk2) / (a + b);
                const double da = lg - lk1, db = lg - lk2;
                for (int j : eq.cols) {
                    if (col_pos[j] < 0) continue;
                    lat(ra, col_pos[j]) += da;
                    lat(rb, col_pos[j]) += db;
                }
            }
            // KL(new | old) per sweep
            double kl = 0;
            for (std::size_t k = 0; k < L.size(); ++k) {
                double pnew = std::exp(L[k]);
                kl += pnew * (L[k] - prev[k]) - pnew + std::exp(prev[k]);
            }
            if (kl <= opt.kl_stop) {
                if (iterate_residual() <= opt.residual_stop) {
                    converged = true;
                    break;
                }
                // pseudo-fixed point: the sweep's shifts cancel to the last
                // bit while the iterate is still infeasible. A damped
                // half-step breaks the cycle deterministically.
                for (std::size_t k = 0; k < L.size(); ++k) L[k] = 0.5 * (L[k] + prev[k]);
            }
        }
        if (last_rung) out.converged = converged;
    }
    out.sweeps = total_sweeps;

    std::vector<double> w(static_cast<std::size_t>(eta.size()) * nu.size(), 0.0);
    double mass = 0;
    for (int r = 0; r < nr; ++r)
        for (int c = 0; c < nc; ++c) {
            double v = std::exp(lat(r, c));
            w[static_cast<std::size_t>(rows[r]) * nu.size() + cols[c]] = v;
            mass += v;
        }
    for (auto& v : w) v /= mass;
    Coupling<double> plan(eta.space(), nu.space(), std::move(w));

    double value = 0;
    for (int i = 0; i < eta.size(); ++i)
        for (int j = 0; j < nu.size(); ++j) value += plan.at(i, j) * cost.at(i, j);
    out.value = value;
    double mres = 0;
    for (int i = 0; i < eta.size(); ++i) mres = std::max(mres, std::fabs(plan.row_sum(i) - eta[i]));
    for (int j = 0; j < nu.size(); ++j) mres = std::max(mres, std::fabs(plan.col_sum(j) - nu[j]));
    out.marginal_residual = mres;
    out.causality_residual = chains.residual_linf(plan);
    out.plan.emplace(std::move(plan));
    out.status = out.converged ? LpStatus::optimal : LpStatus::iteration_limit;
    return out;
}

// Single Bregman projection onto one chain equality, exposed for the
// first-order-condition check in the tests.
inline void project_chain_equality(std::vector<double>& w, int cols,
                                   const ChainEquality<double>& eq) {
    double p = 0, q = 0;
    for (int j : eq.cols) {
        p += w[static_cast<std::size_t>(eq.row_a) * cols + j];
        q += w[static_cast<std::size_t>(eq.row_b) * cols + j];
    }
    const double a = eq.eta_a, b = eq.eta_b;
    if (p <= 0 || q <= 0) {
        for (int j : eq.cols) {
            w[static_cast<std::size_t>(eq.row_a) * cols + j] = 0;
            w[static_cast<std::size_t>(eq.row_b) * cols + j] = 0;
        }
        return;
    }
    const double k1 = p / a, k2 = q / b;
    const double g = std::pow(k1, a / (a + b)) * std::pow(k2, b / (a + b));
    const double sa = g / k1, sb = g / k2;
    for (int j : eq.cols) {
        w[static_cast<std::size_t>(eq.row_a) * cols + j] *= sa;
        w[static_cast<std::size_t>(eq.row_b) * cols + j] *= sb;
    }
}

// ---- brute-force causal Monge ----------------------------------------------

template <class S>
struct MongeResult {
    bool found = false;
    S value = scalar_traits<S>::zero();
    PathMap map;
};

// Enumerates adapted maps with the right pushforward; backtracking prunes on
// remaining target mass. Guarded to tiny spaces.
template <class S>
MongeResult<S> solve_causal_monge_bruteforce(const PathMeasure<S>& eta, const PathMeasure<S>& nu,
                                             const CostMatrix& cost) {
    if (eta.size() > 8 || nu.size() > 8)
        throw ValidationError("causal Monge brute force is limited to 8 paths per side");
    const auto sources = eta.support();
    MongeResult<S> best;
    PathMap map(eta.size(), 0);
    std::vector<S> used(nu.size(), scalar_traits<S>::zero());

    auto exceeds = [&](const S& a, const S& b) {
        if constexpr (scalar_traits<S>::exact) return a > b;
        else return a > b + 1e-12;
    };

    std::function<void(std::size_t, S)> rec = [&](std::size_t k, S acc) {
        if (best.found && !(acc < best.value)) return;
        if (k == sources.size()) {
            for (int j = 0; j < nu.size(); ++j)
                if (used[j] != nu[j]) {
                    if constexpr (scalar_traits<S>::exact) return;
                    else if (std::fabs(used[j] - nu[j]) > 1e-10) return;
                }
            if (!is_adapted_map(map, *nu.space(), eta)) return;
            if (!best.found || acc < best.value) {
                best.found = true;
                best.value = acc;
                best.map = map;
            }
            return;
        }
        const int i = sources[k];
        for (int j = 0; j < nu.size(); ++j) {
            if (!cost.finite_at(i, j)) continue;
            S next = used[j] + eta[i];
            if (exceeds(next, nu[j])) continue;
            used[j] = next;
            map[i] = j;
            rec(k + 1, acc + eta[i] * detail::exact_cost<S>(cost.at(i, j)));
            used[j] = used[j] - eta[i];
        }
    };
    rec(0, scalar_traits<S>::zero());
    return best;
}

}  // namespace kausal
