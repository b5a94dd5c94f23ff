#include "kausal/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "kausal/parallel.hpp"
#include "kausal/simplex.hpp"

namespace kausal::gauss {

namespace {

constexpr double kOverflowGuard = 1e12;
constexpr double kNormalityZ = 3.8906;  // two-sided significance 1e-4

struct Work {
    std::vector<double> db;   // driving increments, N x d
    std::vector<double> xs;   // states X_0..X_N, (N+1) x d
    std::vector<double> bk;   // drift value at the current step
    std::vector<double> tmp;

    void resize(const GaussianPathModel& m) {
        db.assign(static_cast<std::size_t>(m.steps) * m.dim, 0.0);
        xs.assign(static_cast<std::size_t>(m.steps + 1) * m.dim, 0.0);
        bk.assign(m.dim, 0.0);
        tmp.assign(m.dim, 0.0);
    }
};

double draw_increment(const GaussianPathModel& m, const CounterRng& rng, std::uint64_t sample,
                      int step, int lane) {
    const double sq = std::sqrt(m.dt);
    if (m.increments == IncrementKind::rademacher)
        return sq * rng.sign(sample, step, lane);
    return sq * rng.normal(sample, step, lane);
}

// Forward recursion; returns false when the overflow guard trips.
bool run_recursion(const GaussianPathModel& m, const Drift& drift, const CounterRng& rng,
                   std::uint64_t sample, Work& w, int lane_base = 0) {
    const int d = m.dim;
    std::fill(w.xs.begin(), w.xs.end(), 0.0);
    for (int k = 0; k < m.steps; ++k) {
        drift.eval(k, w.xs.data(), d, w.bk.data());
        for (int l = 0; l < d; ++l) {
            if (std::fabs(w.bk[l]) > kOverflowGuard) return false;
            double db = draw_increment(m, rng, sample, k, lane_base + l);
            w.db[static_cast<std::size_t>(k) * d + l] = db;
            w.xs[(static_cast<std::size_t>(k) + 1) * d + l] =
                w.xs[static_cast<std::size_t>(k) * d + l] + db - w.bk[l] * m.dt;
        }
    }
    return true;
}

double sq(double v) { return v * v; }

// log-density of the tilted measure evaluated at the path with these states
// and increments (the path's own increments, not the driving noise).
double log_density_states(const GaussianPathModel& m, const Drift& drift,
                          const std::vector<double>& xs, Work& w) {
    const int d = m.dim;
    double acc = 0.0;
    for (int k = 0; k < m.steps; ++k) {
        drift.eval(k, xs.data(), d, w.bk.data());
        for (int l = 0; l < d; ++l) {
            double dw = xs[(static_cast<std::size_t>(k) + 1) * d + l] -
                        xs[static_cast<std::size_t>(k) * d + l];
            acc += -w.bk[l] * dw - 0.5 * sq(w.bk[l]) * m.dt;
        }
    }
    return acc;
}

// ---- per-step feature regressions -------------------------------------------

int feature_count(int d, bool with_tanh = false) { return 1 + (with_tanh ? 5 : 4) * d; }

// {1, X_k, X_k^2, running max, running integral} componentwise; the saturated
// state tanh(X_k) joins the basis when the drift itself saturates, so its
// conditional mean stays inside the regression span.
void fill_features(const GaussianPathModel& m, const std::vector<double>& xs, int k,
                   std::vector<double>& runmax, std::vector<double>& runint, double* out,
                   bool with_tanh = false) {
    const int d = m.dim;
    out[0] = 1.0;
    for (int l = 0; l < d; ++l) {
        double x = xs[static_cast<std::size_t>(k) * d + l];
        runmax[l] = k == 0 ? x : std::max(runmax[l], x);
        runint[l] += x * m.dt;
        out[1 + l] = x;
        out[1 + d + l] = x * x;
        out[1 + 2 * d + l] = runmax[l];
        out[1 + 3 * d + l] = runint[l];
        if (with_tanh) out[1 + 4 * d + l] = std::tanh(x);
    }
}

// Solve (A + ridge I) theta = rhs for a small symmetric system; returns a
// pivot-ratio condition estimate.
double solve_normal_equations(std::vector<double> a, int p, std::vector<double> rhs, int nrhs,
                              std::vector<double>& theta) {
    double trace = 0;
    for (int i = 0; i < p; ++i) trace += a[static_cast<std::size_t>(i) * p + i];
    const double ridge = 1e-12 * std::max(trace, 1.0);
    for (int i = 0; i < p; ++i) a[static_cast<std::size_t>(i) * p + i] += ridge;

    theta = rhs;
    double piv_max = 0, piv_min = 1e300;
    for (int col = 0; col < p; ++col) {
        int piv = col;
        for (int i = col + 1; i < p; ++i)
            if (std::fabs(a[static_cast<std::size_t>(i) * p + col]) >
                std::fabs(a[static_cast<std::size_t>(piv) * p + col]))
                piv = i;
        if (piv != col) {
            for (int j = 0; j < p; ++j)
                std::swap(a[static_cast<std::size_t>(piv) * p + j],
                          a[static_cast<std::size_t>(col) * p + j]);
            for (int r = 0; r < nrhs; ++r)
                std::swap(theta[static_cast<std::size_t>(piv) * nrhs + r],
                          theta[static_cast<std::size_t>(col) * nrhs + r]);
        }
        double pv = a[static_cast<std::size_t>(col) * p + col];
        piv_max = std::max(piv_max, std::fabs(pv));
        piv_min = std::min(piv_min, std::fabs(pv));
        for (int i = col + 1; i < p; ++i) {
            double f = a[static_cast<std::size_t>(i) * p + col] / pv;
            if (f == 0.0) continue;
            for (int j = col; j < p; ++j)
                a[static_cast<std::size_t>(i) * p + j] -= f * a[static_cast<std::size_t>(col) * p + j];
            for (int r = 0; r < nrhs; ++r)
                theta[static_cast<std::size_t>(i) * nrhs + r] -=
                    f * theta[static_cast<std::size_t>(col) * nrhs + r];
        }
    }
    for (int col = p - 1; col >= 0; --col) {
        for (int r = 0; r < nrhs; ++r) {
            double v = theta[static_cast<std::size_t>(col) * nrhs + r];
            for (int j = col + 1; j < p; ++j)
                v -= a[static_cast<std::size_t>(col) * p + j] *
                     theta[static_cast<std::size_t>(j) * nrhs + r];
            theta[static_cast<std::size_t>(col) * nrhs + r] =
                v / a[static_cast<std::size_t>(col) * p + col];
        }
    }
    return piv_min > 0 ? piv_max / piv_min : 1e300;
}

// Deterministic per-chunk accumulation of fixed-width vectors.
class ChunkedVectors {
public:
    ChunkedVectors(std::int64_t n, std::size_t width, std::int64_t chunk_size = kMcChunk)
        : width_(width),
          data_(static_cast<std::size_t>((n + chunk_size - 1) / chunk_size) * width, 0.0) {}

    double* chunk(std::int64_t c) { return data_.data() + static_cast<std::size_t>(c) * width_; }

    std::vector<double> reduce() const {
        std::vector<double> out(width_, 0.0);
        for (std::size_t c = 0; c < data_.size() / width_; ++c)
            for (std::size_t j = 0; j < width_; ++j) out[j] += data_[c * width_ + j];
        return out;
    }

private:
    std::size_t width_;
    std::vector<double> data_;
};

McEstimate finish(const ChunkedMoments& acc, std::uint64_t seed) {
    McEstimate e;
    e.value = acc.mean();
    e.standard_error = acc.standard_error();
    e.n = acc.count();
    e.seed = seed;
    return e;
}

// phi-tail evaluator: contribution of steps j >= k to the log-density when
// increment k is moved to `new_dwk` in lane `lane`. States after k shift by
// the same amount. Used by the finite-difference Malliavin machinery.
double log_density_tail(const GaussianPathModel& m, const Drift& drift,
                        const std::vector<double>& xs, int k, int lane, double new_dwk,
                        std::vector<double>& shifted_states, std::vector<double>& bk) {
    const int d = m.dim;
    const double old_dwk = xs[(static_cast<std::size_t>(k) + 1) * d + lane] -
                           xs[static_cast<std::size_t>(k) * d + lane];
    const double shift = new_dwk - old_dwk;
    // states with the tail shifted; prefix shared with xs
    shifted_states.assign(xs.begin(), xs.end());
    for (int j = k + 1; j <= m.steps; ++j)
        shifted_states[static_cast<std::size_t>(j) * d + lane] += shift;
    double acc = 0.0;
    for (int j = k; j < m.steps; ++j) {
        drift.eval(j, shifted_states.data(), d, bk.data());
        for (int l = 0; l < d; ++l) {
            double dw = shifted_states[(static_cast<std::size_t>(j) + 1) * d + l] -
                        shifted_states[static_cast<std::size_t>(j) * d + l];
            acc += -bk[l] * dw - 0.5 * sq(bk[l]) * m.dt;
        }
    }
    return acc;
}

// D_k of the log-density at the path xs, all lanes, via central differences
// (or the exact two-point quotient in the Rademacher model).
void dk_log_density(const GaussianPathModel& m, const Drift& drift, const std::vector<double>& xs,
                    int k, std::vector<double>& out, std::vector<double>& scratch,
                    std::vector<double>& bk) {
    const int d = m.dim;
    out.resize(d);
    for (int l = 0; l < d; ++l) {
        double dwk = xs[(static_cast<std::size_t>(k) + 1) * d + l] -
                     xs[static_cast<std::size_t>(k) * d + l];
        if (m.increments == IncrementKind::rademacher) {
            const double s = std::sqrt(m.dt);
            double up = log_density_tail(m, drift, xs, k, l, s, scratch, bk);
            double dn = log_density_tail(m, drift, xs, k, l, -s, scratch, bk);
            out[l] = (up - dn) / (2.0 * s);
        } else {
            const double h = 1e-5 * std::sqrt(m.dt);
            double up = log_density_tail(m, drift, xs, k, l, dwk + h, scratch, bk);
            double dn = log_density_tail(m, drift, xs, k, l, dwk - h, scratch, bk);
            out[l] = (up - dn) / (2.0 * h);
        }
    }
}

}  // namespace

void GaussianPathModel::validate() const {
    if (steps < 1) throw ValidationError("model needs at least one step");
    if (dim < 1) throw ValidationError("model dimension must be positive");
    if (!(dt > 0)) throw ValidationError("model step size must be positive");
    if (std::fabs(steps * dt - 1.0) > 1e-12)
        throw ValidationError("model horizon must be 1 (steps * dt = 1)");
}

Drift Drift::zero() { return Drift(); }

Drift Drift::constant(double a) {
    Drift d;
    d.kind_ = Kind::constant;
    d.param_ = a;
    d.bound_ = std::fabs(a);
    d.name_ = "constant";
    return d;
}

Drift Drift::ou(double lambda) {
    Drift d;
    d.kind_ = Kind::ou;
    d.param_ = lambda;
    d.bound_ = 0.0;  // linear growth, unbounded but Lipschitz
    d.name_ = "ou";
    return d;
}

Drift Drift::tanh_bounded(double scale) {
    Drift d;
    d.kind_ = Kind::tanh_bounded;
    d.param_ = scale;
    d.bound_ = std::fabs(scale);
    d.name_ = "tanh";
    return d;
}

Drift Drift::custom(Fn fn, double bound) {
    Drift d;
    d.kind_ = Kind::custom;
    d.fn_ = std::move(fn);
    d.bound_ = bound;
    d.name_ = "custom";
    return d;
}

void Drift::eval(int k, const double* states, int dim, double* out) const {
    const double* xk = states + static_cast<std::size_t>(k) * dim;
    switch (kind_) {
        case Kind::zero:
            std::fill(out, out + dim, 0.0);
            return;
        case Kind::constant:
            std::fill(out, out + dim, param_);
            return;
        case Kind::ou:
            for (int l = 0; l < dim; ++l) out[l] = param_ * xk[l];
            return;
        case Kind::tanh_bounded:
            for (int l = 0; l < dim; ++l) out[l] = param_ * std::tanh(xk[l]);
            return;
        case Kind::custom:
            fn_(k, states, dim, out);
            return;
    }
}

double TiltedMeasure::log_density(const std::vector<double>& increments) const {
    return girsanov_log_density(model, drift, increments);
}

SamplePaths simulate_sde(const GaussianPathModel& model, const Drift& drift, std::uint64_t seed,
                         int n) {
    model.validate();
    const std::size_t cells =
        static_cast<std::size_t>(n) * (model.steps + 1) * model.dim;
    if (cells > (1u << 26)) throw ValidationError("simulate_sde: path array too large");
    SamplePaths out;
    out.n = n;
    out.steps = model.steps;
    out.dim = model.dim;
    out.x.assign(cells, 0.0);
    out.b.assign(cells, 0.0);
    CounterRng rng(seed);
    Work w;
    w.resize(model);
    for (int s = 0; s < n; ++s) {
        if (!run_recursion(model, drift, rng, s, w)) {
            ++out.aborted;
            continue;
        }
        double* xrow = out.x.data() + static_cast<std::size_t>(s) * (model.steps + 1) * model.dim;
        double* brow = out.b.data() + static_cast<std::size_t>(s) * (model.steps + 1) * model.dim;
        std::memcpy(xrow, w.xs.data(), w.xs.size() * sizeof(double));
        for (int k = 0; k < model.steps; ++k)
            for (int l = 0; l < model.dim; ++l)
                brow[(static_cast<std::size_t>(k) + 1) * model.dim + l] =
                    brow[static_cast<std::size_t>(k) * model.dim + l] +
                    w.db[static_cast<std::size_t>(k) * model.dim + l];
    }
    return out;
}

double girsanov_log_density(const GaussianPathModel& model, const Drift& drift,
                            const std::vector<double>& increments) {
    model.validate();
    const int d = model.dim;
    if (static_cast<int>(increments.size()) != model.steps * d)
        throw ValidationError("girsanov_log_density: wrong increment count");
    std::vector<double> xs(static_cast<std::size_t>(model.steps + 1) * d, 0.0);
    for (int k = 0; k < model.steps; ++k)
        for (int l = 0; l < d; ++l)
            xs[(static_cast<std::size_t>(k) + 1) * d + l] =
                xs[static_cast<std::size_t>(k) * d + l] +
                increments[static_cast<std::size_t>(k) * d + l];
    Work w;
    w.resize(model);
    return log_density_states(model, drift, xs, w);
}

EntropyEstimate relative_entropy(const GaussianPathModel& model, const Drift& drift,
                                 std::uint64_t seed, long long n) {
    model.validate();
    CounterRng rng(seed);
    ChunkedMoments logd(n), half(n), diff(n);
    std::vector<long long> aborted((n + kMcChunk - 1) / kMcChunk, 0);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) {
                ++aborted[chunk];
                continue;
            }
            double ld = log_density_states(model, drift, w.xs, w);
            double energy = 0.0;
            for (int k = 0; k < model.steps; ++k) {
                drift.eval(k, w.xs.data(), model.dim, w.bk.data());
                for (int l = 0; l < model.dim; ++l) energy += sq(w.bk[l]) * model.dt;
            }
            logd.add(chunk, ld);
            half.add(chunk, 0.5 * energy);
            diff.add(chunk, ld - 0.5 * energy);
        }
    });
    EntropyEstimate out;
    out.log_density = finish(logd, seed);
    out.half_energy = finish(half, seed);
    out.diff_se = diff.standard_error();
    for (long long a : aborted) out.aborted += a;
    return out;
}

McEstimate follmer_energy(const GaussianPathModel& model, const Drift& drift, std::uint64_t seed,
                          long long n) {
    model.validate();
    CounterRng rng(seed);
    ChunkedMoments acc(n);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) continue;
            double energy = 0.0;
            for (int k = 0; k < model.steps; ++k) {
                drift.eval(k, w.xs.data(), model.dim, w.bk.data());
                for (int l = 0; l < model.dim; ++l) energy += sq(w.bk[l]) * model.dt;
            }
            acc.add(chunk, energy);
        }
    });
    return finish(acc, seed);
}

PlanCostReport optimal_plan_cost(const GaussianPathModel& model, const Drift& drift,
                                 std::uint64_t seed, long long n) {
    model.validate();
    CounterRng rng(seed);
    const int d = model.dim;
    ChunkedMoments cost(n);
    // moment sums of the reconstructed standardized increments
    ChunkedVectors moments(n, 4);
    const double isq = 1.0 / std::sqrt(model.dt);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        double* mm = moments.chunk(chunk);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) continue;
            double c = 0.0;
            for (int k = 0; k < model.steps; ++k) {
                drift.eval(k, w.xs.data(), d, w.bk.data());
                for (int l = 0; l < d; ++l) {
                    double dx = w.xs[(static_cast<std::size_t>(k) + 1) * d + l] -
                                w.xs[static_cast<std::size_t>(k) * d + l];
                    double recon = dx + w.bk[l] * model.dt;  // shift image increment
                    c += sq(recon - dx) / model.dt;
                    double z = recon * isq;
                    mm[0] += z;
                    mm[1] += z * z;
                    mm[2] += z * z * z;
                    mm[3] += z * z * z * z;
                }
            }
            cost.add(chunk, c);
        }
    });
    PlanCostReport out;
    out.cost = finish(cost, seed);
    auto m = moments.reduce();
    const double cnt = static_cast<double>(out.cost.n) * model.steps * d;
    double mean = m[0] / cnt;
    double var = m[1] / cnt - mean * mean;
    double skew = m[2] / cnt - 3 * mean * var - mean * mean * mean;
    double kurt = m[3] / cnt;
    double z_mean = mean * std::sqrt(cnt);
    double z_var = (var - 1.0) * std::sqrt(cnt / 2.0);
    double z_skew = skew * std::sqrt(cnt / 6.0);
    double z_kurt = (kurt - 3.0 - 6 * mean * mean) * std::sqrt(cnt / 24.0);
    out.worst_z = std::max({std::fabs(z_mean), std::fabs(z_var), std::fabs(z_skew),
                            std::fabs(z_kurt)});
    out.normality_ok = out.worst_z <= kNormalityZ;
    return out;
}

McEstimate hybrid_coupling_cost(const GaussianPathModel& model, const Drift& drift, int m,
                                std::uint64_t seed, long long n) {
    model.validate();
    if (m < 0 || m > model.steps) throw ValidationError("hybrid cutoff must lie in [0, steps]");
    CounterRng rng(seed);
    const int d = model.dim;
    ChunkedMoments acc(n);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) continue;
            double c = 0.0;
            for (int k = 0; k < model.steps; ++k) {
                for (int l = 0; l < d; ++l) {
                    double dx = w.xs[(static_cast<std::size_t>(k) + 1) * d + l] -
                                w.xs[static_cast<std::size_t>(k) * d + l];
                    double dbhat = k < m
                                       ? w.db[static_cast<std::size_t>(k) * d + l]
                                       : draw_increment(model, rng, s, k, d + l);  // fresh lane
                    c += sq(dx - dbhat) / model.dt;
                }
            }
            acc.add(chunk, c);
        }
    });
    return finish(acc, seed);
}

OrthogonalityReport orthogonality_residual(const GaussianPathModel& model, const Drift& drift,
                                           CouplingKind kind, int hybrid_m, std::uint64_t seed,
                                           long long n) {
    model.validate();
    CounterRng rng(seed);
    const int d = model.dim;
    const int p = feature_count(d);
    const int N = model.steps;
    // per (step, feature, lane): sum and sum of squares of y * phi
    const std::size_t width = static_cast<std::size_t>(N) * p * d * 2;
    ChunkedVectors acc(n, width);
    std::vector<long long> counts((n + kMcChunk - 1) / kMcChunk, 0);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        std::vector<double> runmax(d), runint(d), feats(p), y(d);
        double* a = acc.chunk(chunk);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) continue;
            ++counts[chunk];
            std::fill(runint.begin(), runint.end(), 0.0);
            for (int k = 0; k < N; ++k) {
                fill_features(model, w.xs, k, runmax, runint, feats.data());
                drift.eval(k, w.xs.data(), d, w.bk.data());
                for (int l = 0; l < d; ++l) {
                    double dx = w.xs[(static_cast<std::size_t>(k) + 1) * d + l] -
                                w.xs[static_cast<std::size_t>(k) * d + l];
                    double dbhat;
                    switch (kind) {
                        case CouplingKind::optimal:
                            dbhat = w.db[static_cast<std::size_t>(k) * d + l];
                            break;
                        case CouplingKind::hybrid:
                            dbhat = k < hybrid_m ? w.db[static_cast<std::size_t>(k) * d + l]
                                                 : draw_increment(model, rng, s, k, d + l);
                            break;
                        case CouplingKind::product:
                        default:
                            // independent Wiener first coordinate
                            dbhat = draw_increment(model, rng, s, k, d + l);
                            break;
                    }
                    // du/dt + b(X); at the shift-image coupling this vanishes
                    y[l] = (dx - dbhat) / model.dt + w.bk[l];
                }
                for (int j = 0; j < p; ++j)
                    for (int l = 0; l < d; ++l) {
                        double v = y[l] * feats[j];
                        std::size_t base =
                            ((static_cast<std::size_t>(k) * p + j) * d + l) * 2;
                        a[base] += v;
                        a[base + 1] += v * v;
                    }
            }
        }
    });
    auto sums = acc.reduce();
    long long cnt = 0;
    for (long long c : counts) cnt += c;
    OrthogonalityReport out;
    out.n = cnt;
    out.step_worst_z.assign(N, 0.0);
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < p; ++j)
            for (int l = 0; l < d; ++l) {
                std::size_t base = ((static_cast<std::size_t>(k) * p + j) * d + l) * 2;
                double mean = sums[base] / cnt;
                double var = sums[base + 1] / cnt - mean * mean;
                double se = std::sqrt(std::max(var, 0.0) / cnt);
                // the floor keeps rounding dust from registering as signal
                double z = std::fabs(mean) / std::max(se, 1e-12);
                out.step_worst_z[k] = std::max(out.step_worst_z[k], z);
            }
    for (double z : out.step_worst_z) out.worst_z = std::max(out.worst_z, z);
    return out;
}

std::vector<double> malliavin_fd(const GaussianPathModel& model, const PathFunctional& f,
                                 const std::vector<double>& increments, int k) {
    model.validate();
    const int d = model.dim;
    if (static_cast<int>(increments.size()) != model.steps * d)
        throw ValidationError("malliavin_fd: wrong increment count");
    if (k < 0 || k >= model.steps) throw ValidationError("malliavin_fd: step out of range");
    std::vector<double> out(d);
    std::vector<double> pert = increments;
    for (int l = 0; l < d; ++l) {
        const std::size_t idx = static_cast<std::size_t>(k) * d + l;
        if (model.increments == IncrementKind::rademacher) {
            const double s = std::sqrt(model.dt);
            pert[idx] = s;
            double up = f(pert);
            pert[idx] = -s;
            double dn = f(pert);
            out[l] = (up - dn) / (2.0 * s);
        } else {
            const double h = 1e-5 * std::sqrt(model.dt);
            pert[idx] = increments[idx] + h;
            double up = f(pert);
            pert[idx] = increments[idx] - h;
            double dn = f(pert);
            out[l] = (up - dn) / (2.0 * h);
        }
        pert[idx] = increments[idx];
    }
    return out;
}

double clark_ocone_residual(const GaussianPathModel& model, const PathFunctional& f) {
    model.validate();
    if (model.increments != IncrementKind::rademacher)
        throw ValidationError("clark_ocone_residual needs the rademacher model");
    if (model.dim != 1) throw ValidationError("clark_ocone_residual is implemented for d = 1");
    if (model.steps > 12) throw ValidationError("clark_ocone_residual: steps > 12");
    const int N = model.steps;
    const long paths = 1L << N;
    const double s = std::sqrt(model.dt);

    std::vector<double> fval(paths);
    std::vector<double> inc(N);
    for (long w = 0; w < paths; ++w) {
        for (int k = 0; k < N; ++k) inc[k] = (w >> k) & 1 ? s : -s;
        fval[w] = f(inc);
    }
    double mean = std::accumulate(fval.begin(), fval.end(), 0.0) / static_cast<double>(paths);

    // z_k on a prefix = average of the flip quotient over everything after it
    double worst = 0.0;
    std::vector<double> zk(static_cast<std::size_t>(N) << N, 0.0);
    for (int k = 0; k < N; ++k) {
        const long prefix_mask = (1L << k) - 1;
        std::vector<double> sums(1L << k, 0.0);
        for (long w = 0; w < paths; ++w) {
            double dkf = (fval[w | (1L << k)] - fval[w & ~(1L << k)]) / (2.0 * s);
            sums[w & prefix_mask] += dkf;
        }
        const double scale = 1.0 / static_cast<double>(paths >> k);
        for (long w = 0; w < paths; ++w)
            zk[(static_cast<std::size_t>(k) << N) + w] = sums[w & prefix_mask] * scale;
    }
    for (long w = 0; w < paths; ++w) {
        double rep = mean;
        for (int k = 0; k < N; ++k) {
            double eta = (w >> k) & 1 ? s : -s;
            rep += zk[(static_cast<std::size_t>(k) << N) + w] * eta;
        }
        worst = std::max(worst, std::fabs(fval[w] - rep));
    }
    return worst;
}

DriftRecoveryReport drift_from_density(const GaussianPathModel& model, const Drift& drift,
                                       std::uint64_t seed, long long n) {
    model.validate();
    CounterRng rng(seed);
    const int d = model.dim;
    const bool with_tanh = drift.name() == "tanh";
    const int p = feature_count(d, with_tanh);
    const int N = model.steps;

    // pass 1: per-step normal equations for the regression of -D_k phi
    const std::size_t width = static_cast<std::size_t>(N) * (p * p + p * d);
    ChunkedVectors acc(n, width);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        std::vector<double> runmax(d), runint(d), feats(p), dk(d), scratch, bk(d);
        double* a = acc.chunk(chunk);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) continue;
            std::fill(runint.begin(), runint.end(), 0.0);
            for (int k = 0; k < N; ++k) {
                fill_features(model, w.xs, k, runmax, runint, feats.data(), with_tanh);
                dk_log_density(model, drift, w.xs, k, dk, scratch, bk);
                double* ATA = a + static_cast<std::size_t>(k) * (p * p + p * d);
                double* ATy = ATA + p * p;
                for (int i = 0; i < p; ++i) {
                    for (int j = 0; j < p; ++j) ATA[i * p + j] += feats[i] * feats[j];
                    for (int l = 0; l < d; ++l) ATy[i * d + l] += feats[i] * (-dk[l]);
                }
            }
        }
    });
    auto sums = acc.reduce();
    std::vector<std::vector<double>> theta(N);
    double worst_cond = 0.0;
    for (int k = 0; k < N; ++k) {
        const double* ATA = sums.data() + static_cast<std::size_t>(k) * (p * p + p * d);
        const double* ATy = ATA + p * p;
        std::vector<double> A(ATA, ATA + p * p), rhs(ATy, ATy + p * d);
        worst_cond = std::max(worst_cond, solve_normal_equations(A, p, rhs, d, theta[k]));
    }

    // pass 2: same sample stream, score the fitted drift against the truth
    ChunkedVectors err(n, 2);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        std::vector<double> runmax(d), runint(d), feats(p);
        double* e2 = err.chunk(chunk);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) continue;
            std::fill(runint.begin(), runint.end(), 0.0);
            for (int k = 0; k < N; ++k) {
                fill_features(model, w.xs, k, runmax, runint, feats.data(), with_tanh);
                drift.eval(k, w.xs.data(), d, w.bk.data());
                for (int l = 0; l < d; ++l) {
                    double pred = 0;
                    for (int j = 0; j < p; ++j) pred += theta[k][j * d + l] * feats[j];
                    e2[0] += sq(pred - w.bk[l]) * model.dt;
                    e2[1] += sq(w.bk[l]) * model.dt;
                }
            }
        }
    });
    auto e = err.reduce();
    DriftRecoveryReport out;
    out.n = n;
    out.worst_condition = worst_cond;
    out.rel_l2_error = e[1] > 0 ? std::sqrt(e[0] / e[1]) : std::sqrt(e[0]);
    // max over steps of the fitted deviation at the mean feature level is not
    // informative for nonlinear drifts; report the rms per-sample error too
    out.max_abs_error = std::sqrt(e[0] / (static_cast<double>(n) * N * d * model.dt));
    return out;
}

StrongGapReport strong_solution_gap(const GaussianPathModel& model, const Drift& drift,
                                    std::uint64_t seed, long long n) {
    StrongGapReport out;
    out.pushforward_energy = follmer_energy(model, drift, seed, n);
    auto h = relative_entropy(model, drift, seed + 0x5eedULL, n);
    out.two_entropy = h.log_density;
    out.two_entropy.value *= 2;
    out.two_entropy.standard_error *= 2;
    out.gap = out.pushforward_energy.value - out.two_entropy.value;
    out.gap_se = std::sqrt(sq(out.pushforward_energy.standard_error) +
                           sq(out.two_entropy.standard_error));
    return out;
}

DualCertificateReport dual_certificate(const GaussianPathModel& model, const Drift& drift,
                                       std::uint64_t seed, long long n) {
    model.validate();
    CounterRng rng(seed);
    const int d = model.dim;
    const int p = feature_count(d);
    const int N = model.steps;
    DualCertificateReport out;

    // paired certificate value and log-density entropy
    ChunkedMoments cert(n), twoh(n), diff(n);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) continue;
            double energy = 0.0;
            for (int k = 0; k < N; ++k) {
                drift.eval(k, w.xs.data(), d, w.bk.data());
                for (int l = 0; l < d; ++l) energy += sq(w.bk[l]) * model.dt;
            }
            double two_ld = 2.0 * log_density_states(model, drift, w.xs, w);
            cert.add(chunk, energy);
            twoh.add(chunk, two_ld);
            diff.add(chunk, energy - two_ld);
        }
    });
    out.certificate = finish(cert, seed);
    out.two_entropy = finish(twoh, seed);
    out.pair_diff_se = diff.standard_error();

    // cost-rate regression on a training stream, slack scored on a held-out one
    const std::size_t width = static_cast<std::size_t>(N) * (p * p + p);
    ChunkedVectors acc(n, width);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        std::vector<double> runmax(d), runint(d), feats(p);
        double* a = acc.chunk(chunk);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s, w)) continue;
            std::fill(runint.begin(), runint.end(), 0.0);
            for (int k = 0; k < N; ++k) {
                fill_features(model, w.xs, k, runmax, runint, feats.data());
                drift.eval(k, w.xs.data(), d, w.bk.data());
                double rate = 0.0;
                for (int l = 0; l < d; ++l) rate += sq(w.bk[l]);
                double* ATA = a + static_cast<std::size_t>(k) * (p * p + p);
                double* ATy = ATA + p * p;
                for (int i = 0; i < p; ++i) {
                    for (int j = 0; j < p; ++j) ATA[i * p + j] += feats[i] * feats[j];
                    ATy[i] += feats[i] * rate;
                }
            }
        }
    });
    auto sums = acc.reduce();
    std::vector<std::vector<double>> theta(N);
    for (int k = 0; k < N; ++k) {
        const double* ATA = sums.data() + static_cast<std::size_t>(k) * (p * p + p);
        const double* ATy = ATA + p * p;
        std::vector<double> A(ATA, ATA + p * p), rhs(ATy, ATy + p);
        out.regression_condition =
            std::max(out.regression_condition, solve_normal_equations(A, p, rhs, 1, theta[k]));
    }
    ChunkedMoments slack(n);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        std::vector<double> runmax(d), runint(d), feats(p);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, rng, s + n, w)) continue;  // held out
            std::fill(runint.begin(), runint.end(), 0.0);
            double acc_slack = 0.0;
            for (int k = 0; k < N; ++k) {
                fill_features(model, w.xs, k, runmax, runint, feats.data());
                drift.eval(k, w.xs.data(), d, w.bk.data());
                double rate = 0.0;
                for (int l = 0; l < d; ++l) rate += sq(w.bk[l]);
                double pred = 0.0;
                for (int j = 0; j < p; ++j) pred += theta[k][j] * feats[j];
                acc_slack += (pred - rate) * model.dt;
            }
            slack.add(chunk, acc_slack);
        }
    });
    out.jensen_slack_mean = slack.mean();
    out.jensen_slack_se = slack.standard_error();
    return out;
}

McEstimate density_normalization(const GaussianPathModel& model, const Drift& drift,
                                 std::uint64_t seed, long long n) {
    model.validate();
    CounterRng rng(seed);
    const int d = model.dim;
    ChunkedMoments acc(n);
    for_each_chunk(n, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work w;
        w.resize(model);
        std::vector<double> xs(static_cast<std::size_t>(model.steps + 1) * d, 0.0);
        for (std::int64_t s = lo; s < hi; ++s) {
            // plain Wiener path
            for (int k = 0; k < model.steps; ++k)
                for (int l = 0; l < d; ++l)
                    xs[(static_cast<std::size_t>(k) + 1) * d + l] =
                        xs[static_cast<std::size_t>(k) * d + l] +
                        draw_increment(model, rng, s, k, l);
            acc.add(chunk, std::exp(log_density_states(model, drift, xs, w)));
        }
    });
    return finish(acc, seed);
}

TalagrandReport talagrand_log_sobolev(const GaussianPathModel& model, const Drift& drift,
                                      std::uint64_t seed, long long n, int subsample,
                                      long long j_samples) {
    model.validate();
    if (subsample > 64) throw ValidationError("talagrand subsample is capped at 64");
    TalagrandReport out;

    auto h = relative_entropy(model, drift, seed, n);
    out.two_entropy = 2.0 * h.log_density.value;
    out.two_entropy_se = 2.0 * h.log_density.standard_error;

    auto upper = optimal_plan_cost(model, drift, seed + 1, n);
    out.d2_upper = upper.cost.value;
    out.d2_upper_se = upper.cost.standard_error;

    // subsampled empirical transport under the quadratic path cost, with the
    // clouds coupled through common driving noise
    const int d = model.dim;
    const int ns = subsample;
    CounterRng rng(seed + 2);
    Work w;
    w.resize(model);
    std::vector<double> bx(static_cast<std::size_t>(ns) * model.steps * d);
    std::vector<double> xx(static_cast<std::size_t>(ns) * model.steps * d);
    double diag_mean = 0, diag_m2 = 0;
    for (int s = 0; s < ns; ++s) {
        run_recursion(model, drift, rng, s, w);
        double diag = 0;
        for (int k = 0; k < model.steps; ++k)
            for (int l = 0; l < d; ++l) {
                bx[(static_cast<std::size_t>(s) * model.steps + k) * d + l] =
                    w.db[static_cast<std::size_t>(k) * d + l];
                double dx = w.xs[(static_cast<std::size_t>(k) + 1) * d + l] -
                            w.xs[static_cast<std::size_t>(k) * d + l];
                xx[(static_cast<std::size_t>(s) * model.steps + k) * d + l] = dx;
                diag += sq(w.db[static_cast<std::size_t>(k) * d + l] - dx) / model.dt;
            }
        diag_mean += diag;
        diag_m2 += diag * diag;
    }
    diag_mean /= ns;
    diag_m2 /= ns;
    out.d2_lower_se = std::sqrt(std::max(diag_m2 - diag_mean * diag_mean, 0.0) / ns);

    LpProblem<double> lp;
    lp.rows = 2 * ns;
    lp.cols = ns * ns;
    lp.a.assign(static_cast<std::size_t>(lp.rows) * lp.cols, 0.0);
    lp.b.assign(lp.rows, 1.0 / ns);
    lp.c.resize(lp.cols);
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < ns; ++j) {
            double c = 0;
            for (int k = 0; k < model.steps; ++k)
                for (int l = 0; l < d; ++l)
                    c += sq(bx[(static_cast<std::size_t>(i) * model.steps + k) * d + l] -
                            xx[(static_cast<std::size_t>(j) * model.steps + k) * d + l]) /
                         model.dt;
            int v = i * ns + j;
            lp.c[v] = c;
            lp.at(i, v) = 1.0;
            lp.at(ns + j, v) = 1.0;
        }
    auto sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) throw SolverError("talagrand: subsample LP failed");
    out.d2_lower = sol.value;

    // J by Malliavin finite differences along tilted samples
    CounterRng jrng(seed + 3);
    ChunkedMoments jacc(j_samples);
    for_each_chunk(j_samples, kMcChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
        Work jw;
        jw.resize(model);
        std::vector<double> dk(d), scratch, bk(d);
        for (std::int64_t s = lo; s < hi; ++s) {
            if (!run_recursion(model, drift, jrng, s, jw)) continue;
            double total = 0.0;
            for (int k = 0; k < model.steps; ++k) {
                dk_log_density(model, drift, jw.xs, k, dk, scratch, bk);
                for (int l = 0; l < d; ++l) total += sq(dk[l]) * model.dt;
            }
            jacc.add(chunk, total);
        }
    });
    out.j_value = jacc.mean();
    out.j_se = jacc.standard_error();

    const double eps = 1e-9;
    const double tol_lower = 3.0 * std::sqrt(sq(out.d2_lower_se) + sq(out.two_entropy_se)) + eps;
    const double tol_j = 3.0 * std::sqrt(sq(out.j_se) + sq(out.two_entropy_se)) + eps;
    out.chain_ok = out.d2_lower <= out.two_entropy + tol_lower &&
                   out.two_entropy <= out.j_value + tol_j &&
                   out.d2_upper >= out.d2_lower - 3.0 * out.d2_lower_se - eps;
    return out;
}

}  // namespace kausal::gauss
