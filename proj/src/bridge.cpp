#include "kausal/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kausal/parallel.hpp"
#include "kausal/simplex.hpp"

namespace kausal::bridge {

namespace {

double sq(double v) { return v * v; }

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t l = 0; l < a.size(); ++l) s += sq(a[l] - b[l]);
    return s;
}

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

GridMeasure GridMeasure::from_points(std::vector<std::vector<double>> pts,
                                     std::vector<double> w) {
    GridMeasure m;
    if (pts.empty()) throw ValidationError("grid measure needs at least one point");
    m.dim = static_cast<int>(pts.front().size());
    m.points = std::move(pts);
    m.weights = std::move(w);
    m.validate();
    return m;
}

void GridMeasure::validate() const {
    if (points.size() != weights.size())
        throw ValidationError("grid measure: points and weights disagree");
    if (points.empty()) throw ValidationError("grid measure must not be empty");
    double total = 0;
    for (double v : weights) {
        if (v < 0) throw ValidationError("grid measure weights must be nonnegative");
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw ValidationError("grid measure weights must sum to 1");
    for (const auto& p : points)
        if (static_cast<int>(p.size()) != dim)
            throw ValidationError("grid measure points disagree on dimension");
}

BridgeSolution solve_schrodinger_bridge(const gauss::GaussianPathModel& model,
                                        const EndpointMarginals& marginals, double tol,
                                        long max_sweeps) {
    model.validate();
    marginals.q0.validate();
    marginals.q1.validate();
    if (marginals.q0.dim != model.dim || marginals.q1.dim != model.dim)
        throw ValidationError("endpoint marginals disagree with the model dimension");

    const int n0 = static_cast<int>(marginals.q0.points.size());
    const int n1 = static_cast<int>(marginals.q1.points.size());
    // reference kernel over the single transition of the horizon
    std::vector<double> kernel(static_cast<std::size_t>(n0) * n1);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j)
            kernel[static_cast<std::size_t>(i) * n1 + j] =
                std::exp(-0.5 * sq_dist(marginals.q0.points[i], marginals.q1.points[j]));

    std::vector<double> u(n0, 1.0), v(n1, 1.0);
    BridgeSolution out;
    out.converged = false;
    auto marginal_l1 = [&] {
        double err = 0;
        for (int i = 0; i < n0; ++i) {
            double rs = 0;
            for (int j = 0; j < n1; ++j)
                rs += u[i] * kernel[static_cast<std::size_t>(i) * n1 + j] * v[j] *
                      marginals.q0.weights[i];
            err += std::fabs(rs - marginals.q0.weights[i]);
        }
        for (int j = 0; j < n1; ++j) {
            double cs = 0;
            for (int i = 0; i < n0; ++i)
                cs += u[i] * kernel[static_cast<std::size_t>(i) * n1 + j] * v[j] *
                      marginals.q0.weights[i];
            err += std::fabs(cs - marginals.q1.weights[j]);
        }
        return err;
    };
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        ++out.sweeps;
        for (int i = 0; i < n0; ++i) {
            double rs = 0;
            for (int j = 0; j < n1; ++j)
                rs += kernel[static_cast<std::size_t>(i) * n1 + j] * v[j];
            if (rs <= 0) throw SolverError("bridge IPF: empty row, targets unreachable");
            u[i] = 1.0 / rs;
        }
        for (int j = 0; j < n1; ++j) {
            double cs = 0;
            for (int i = 0; i < n0; ++i)
                cs += marginals.q0.weights[i] * u[i] * kernel[static_cast<std::size_t>(i) * n1 + j];
            if (cs <= 0) throw SolverError("bridge IPF: empty column, target atom unreachable");
            v[j] = marginals.q1.weights[j] / cs;
        }
        double err = marginal_l1();
        out.sweep_errors.push_back(err);
        if (err <= tol) {
            out.converged = true;
            break;
        }
    }
    out.marginal_error = out.sweep_errors.empty() ? 1.0 : out.sweep_errors.back();
    if (!out.converged) throw SolverError("bridge IPF did not reach the marginal tolerance");

    out.coupling.assign(static_cast<std::size_t>(n0) * n1, 0.0);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j)
            out.coupling[static_cast<std::size_t>(i) * n1 + j] =
                marginals.q0.weights[i] * u[i] * kernel[static_cast<std::size_t>(i) * n1 + j] *
                v[j];
    out.f_potential = std::move(u);
    out.g_potential = std::move(v);
    out.entropy = mixture_terminal_entropy(marginals, out.coupling);
    return out;
}

double static_bridge_objective(const EndpointMarginals& marginals,
                               const std::vector<double>& coupling) {
    const int n0 = static_cast<int>(marginals.q0.points.size());
    const int n1 = static_cast<int>(marginals.q1.points.size());
    double obj = 0;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            double p = coupling[static_cast<std::size_t>(i) * n1 + j];
            if (p <= 0) continue;
            obj += p * (std::log(p / marginals.q0.weights[i]) +
                        0.5 * sq_dist(marginals.q0.points[i], marginals.q1.points[j]));
        }
    return obj;
}

double mixture_terminal_entropy(const EndpointMarginals& marginals,
                                const std::vector<double>& coupling, std::uint64_t mc_seed,
                                long long mc_samples) {
    const int n0 = static_cast<int>(marginals.q0.points.size());
    const int n1 = static_cast<int>(marginals.q1.points.size());
    const int d = marginals.q0.dim;

    double total = 0;
    for (int i = 0; i < n0; ++i) {
        const double q0w = marginals.q0.weights[i];
        if (q0w <= 0) continue;
        std::vector<double> cond(n1);
        double mass = 0;
        for (int j = 0; j < n1; ++j) mass += (cond[j] = coupling[static_cast<std::size_t>(i) * n1 + j]);
        if (mass <= 0) continue;
        for (auto& c : cond) c /= mass;

        if (d == 1) {
            // Simpson quadrature of m log(m / phi(. - x)) on a covering window
            const double x = marginals.q0.points[i][0];
            double lo = x, hi = x;
            for (int j = 0; j < n1; ++j) {
                lo = std::min(lo, marginals.q1.points[j][0]);
                hi = std::max(hi, marginals.q1.points[j][0]);
            }
            lo -= 10.0;
            hi += 10.0;
            const int cells = 4096;
            const double h = (hi - lo) / cells;
            const double norm = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
            auto integrand = [&](double w) {
                double m = 0;
                for (int j = 0; j < n1; ++j)
                    m += cond[j] * norm * std::exp(-0.5 * sq(w - marginals.q1.points[j][0]));
                if (m < 1e-300) return 0.0;
                double ref = norm * std::exp(-0.5 * sq(w - x));
                return m * std::log(m / ref);
            };
            double acc = integrand(lo) + integrand(hi);
            for (int c = 1; c < cells; ++c) acc += integrand(lo + c * h) * (c % 2 ? 4.0 : 2.0);
            total += q0w * acc * h / 3.0;
        } else {
            // Monte Carlo from the mixture
            CounterRng rng(mc_seed + static_cast<std::uint64_t>(i));
            double acc = 0;
            const double logn = -0.5 * d * std::log(2.0 * 3.14159265358979323846);
            for (long long s = 0; s < mc_samples; ++s) {
                double pick = rng.uniform(s, 0, 1000);
                int j = 0;
                double cum = 0;
                for (; j < n1 - 1; ++j) {
                    cum += cond[j];
                    if (pick <= cum) break;
                }
                std::vector<double> w(d);
                for (int l = 0; l < d; ++l)
                    w[l] = marginals.q1.points[j][l] + rng.normal(s, 1, l);
                double m = 0;
                for (int jj = 0; jj < n1; ++jj)
                    m += cond[jj] * std::exp(logn - 0.5 * sq_dist(w, marginals.q1.points[jj]));
                double ref = std::exp(logn - 0.5 * sq_dist(w, marginals.q0.points[i]));
                acc += std::log(m / ref);
            }
            total += q0w * acc / static_cast<double>(mc_samples);
        }
    }
    return total;
}

MikamiReport mikami_value_check(const gauss::GaussianPathModel& model,
                                const EndpointMarginals& marginals, const BridgeSolution& bridge,
                                std::uint64_t seed, long long n) {
    model.validate();
    const int d = model.dim;
    const int n0 = static_cast<int>(marginals.q0.points.size());
    const int n1 = static_cast<int>(marginals.q1.points.size());
    const int N = model.steps;
    CounterRng rng(seed);

    // window for the clipping diagnostic
    std::vector<double> wlo(d, 1e300), whi(d, -1e300);
    for (const auto& p : marginals.q1.points)
        for (int l = 0; l < d; ++l) {
            wlo[l] = std::min(wlo[l], p[l] - 4.0);
            whi[l] = std::max(whi[l], p[l] + 4.0);
        }

    ChunkedMoments cost(n);
    std::vector<std::vector<double>> hits((n + kMcChunk - 1) / kMcChunk,
                                          std::vector<double>(n1, 0.0));
    std::vector<long long> clipped((n + kMcChunk - 1) / kMcChunk, 0);

    // conditional targets per source atom, with log weights
    std::vector<std::vector<double>> cond_logw(n0, std::vector<double>(n1));
    for (int i = 0; i < n0; ++i) {
        double mass = 0;
        for (int j = 0; j < n1; ++j) mass += bridge.at(i, j, n1);
        for (int j = 0; j < n1; ++j) {
            double p = bridge.at(i, j, n1) / mass;
            cond_logw[i][j] = p > 0 ? std::log(p) : -1e300;
        }
    }
    // source sampling by cumulative weights
    std::vector<double> q0cum(n0);
    std::partial_sum(marginals.q0.weights.begin(), marginals.q0.weights.end(), q0cum.begin());

    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        std::vector<double> x(d), lw(n1), a(static_cast<std::size_t>(n1) * d), udot(d);
        for (std::int64_t s = lo; s < hi; ++s) {
            double pick = rng.uniform(s, 0, 999);
            int i0 = static_cast<int>(std::lower_bound(q0cum.begin(), q0cum.end(), pick) -
                                      q0cum.begin());
            if (i0 >= n0) i0 = n0 - 1;
            const auto& x0 = marginals.q0.points[i0];
            for (int l = 0; l < d; ++l) x[l] = x0[l];
            for (int j = 0; j < n1; ++j) {
                lw[j] = cond_logw[i0][j];
                for (int l = 0; l < d; ++l)
                    a[static_cast<std::size_t>(j) * d + l] = marginals.q1.points[j][l] - x0[l];
            }
            double c = 0;
            for (int k = 0; k < N; ++k) {
                // posterior-mean control from the current log weights
                double mx = -1e300;
                for (int j = 0; j < n1; ++j) mx = std::max(mx, lw[j]);
                double z = 0;
                std::fill(udot.begin(), udot.end(), 0.0);
                for (int j = 0; j < n1; ++j) {
                    double w = std::exp(lw[j] - mx);
                    z += w;
                    for (int l = 0; l < d; ++l)
                        udot[l] += w * a[static_cast<std::size_t>(j) * d + l];
                }
                for (int l = 0; l < d; ++l) udot[l] /= z;
                for (int l = 0; l < d; ++l) {
                    double db = std::sqrt(model.dt) * rng.normal(s, k, l);
                    double dxl = udot[l] * model.dt + db;
                    x[l] += dxl;
                    c += 0.5 * sq(udot[l]) * model.dt;
                    for (int j = 0; j < n1; ++j)
                        lw[j] += a[static_cast<std::size_t>(j) * d + l] * dxl;
                }
                for (int j = 0; j < n1; ++j) {
                    double a2 = 0;
                    for (int l = 0; l < d; ++l) a2 += sq(a[static_cast<std::size_t>(j) * d + l]);
                    lw[j] -= 0.5 * a2 * model.dt;
                }
            }
            cost.add(chunk, c);
            // terminal projection to the nearest target atom
            int best = 0;
            double bestd = 1e300;
            for (int j = 0; j < n1; ++j) {
                double dist = sq_dist(x, marginals.q1.points[j]);
                if (dist < bestd) {
                    bestd = dist;
                    best = j;
                }
            }
            hits[chunk][best] += 1.0;
            for (int l = 0; l < d; ++l)
                if (x[l] < wlo[l] || x[l] > whi[l]) {
                    ++clipped[chunk];
                    break;
                }
        }
    });

    MikamiReport out;
    out.control_cost = cost.mean();
    out.control_cost_se = cost.standard_error();
    out.entropy = bridge.entropy;
    std::vector<double> emp(n1, 0.0);
    for (const auto& h : hits)
        for (int j = 0; j < n1; ++j) emp[j] += h[j];
    double total = std::accumulate(emp.begin(), emp.end(), 0.0);
    double tv = 0;
    for (int j = 0; j < n1; ++j) tv += std::fabs(emp[j] / total - marginals.q1.weights[j]);
    out.terminal_tv = 0.5 * tv;
    long long nclip = 0;
    for (long long c : clipped) nclip += c;
    out.clipping_rate = static_cast<double>(nclip) / static_cast<double>(total);
    const double tol = 3.0 * out.control_cost_se + 0.02 * std::fabs(out.entropy) + 1e-9;
    out.cost_matches = std::fabs(out.control_cost - out.entropy) <= tol;
    return out;
}

double pinned_mixture_entropy_gap(int steps, const std::vector<double>& endpoint_weights) {
    if (steps < 1 || steps > 20) throw ValidationError("pinned mixture check: steps out of range");
    if (static_cast<int>(endpoint_weights.size()) != steps + 1)
        throw ValidationError("pinned mixture check needs one weight per endpoint level");
    double wsum = 0;
    for (double w : endpoint_weights) {
        if (w < 0) throw ValidationError("endpoint weights must be nonnegative");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-12)
        throw ValidationError("endpoint weights must sum to 1");

    const long paths = 1L << steps;
    const double log_uniform = -steps * std::log(2.0);
    // path KL of the mixture of pinned walks
    double path_kl = 0;
    for (long w = 0; w < paths; ++w) {
        int ups = 0;
        for (int k = 0; k < steps; ++k) ups += (w >> k) & 1;
        double nu = endpoint_weights[ups] / std::exp(log_binomial(steps, ups));  // per-path mass
        if (nu <= 0) continue;
        path_kl += nu * (std::log(nu) - log_uniform);
    }
    // endpoint KL against the binomial law
    double end_kl = 0;
    for (int k = 0; k <= steps; ++k) {
        double q = endpoint_weights[k];
        if (q <= 0) continue;
        double p = std::exp(log_binomial(steps, k) + log_uniform);
        end_kl += q * std::log(q / p);
    }
    return std::fabs(path_kl - end_kl);
}

}  // namespace kausal::bridge
