#pragma once

#include <vector>

#include "kausal/rational.hpp"

namespace kausal {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded-guard";
        case LpStatus::iteration_limit: return "iteration-limit";
    }
    return "?";
}

// min c.x  s.t.  A x = b, x >= 0. Dense rows; small instances only.
template <class S>
struct LpProblem {
    int rows = 0;
    int cols = 0;
    std::vector<S> a;  // row-major rows x cols
    std::vector<S> b;
    std::vector<S> c;

    const S& at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    S& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
};

template <class S>
struct LpResult {
    LpStatus status = LpStatus::infeasible;
    std::vector<S> x;
    std::vector<S> y;       // equality multipliers, one per remaining row
    std::vector<int> row_ids;  // original row index per remaining row (redundant rows get dropped)
    S value = scalar_traits<S>::zero();
    S gap = scalar_traits<S>::zero();  // |c.x - y.b|
    int iterations = 0;
};

namespace detail {

template <class S>
S pivot_tol() {
    if constexpr (scalar_traits<S>::exact) return scalar_traits<S>::zero();
    else return 1e-11;
}

template <class S>
S cost_tol() {
    if constexpr (scalar_traits<S>::exact) return scalar_traits<S>::zero();
    else return 1e-10;
}

// Revised simplex with an explicitly maintained dense basis inverse and
// Bland's anti-cycling rule. Column j of the working matrix is fetched on
// demand; artificial columns are unit vectors.
template <class S>
class RevisedSimplex {
public:
    RevisedSimplex(const LpProblem<S>& p) : p_(p), m_(p.rows), n_(p.cols) {
        row_ids_.resize(m_);
        for (int i = 0; i < m_; ++i) row_ids_[i] = i;
        b_ = p.b;
        // phase-1 needs b >= 0
        flipped_.assign(m_, false);
        for (int i = 0; i < m_; ++i) {
            if (b_[i] < scalar_traits<S>::zero()) {
                flipped_[i] = true;
                b_[i] = -b_[i];
            }
        }
        binv_.assign(static_cast<std::size_t>(m_) * m_, scalar_traits<S>::zero());
        for (int i = 0; i < m_; ++i) binv(i, i) = scalar_traits<S>::one();
        basis_.resize(m_);
        for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;  // artificials
        in_basis_.assign(n_, false);
        xb_ = b_;
    }

    LpResult<S> solve(long max_iters) {
        LpResult<S> out;
        // phase 1: minimize the sum of artificials
        phase1_ = true;
        LpStatus st = iterate(max_iters);
        out.iterations = iters_;
        if (st != LpStatus::optimal) {
            out.status = st;
            return out;
        }
        S art_mass = scalar_traits<S>::zero();
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= n_) art_mass += xb_[i];
        if (art_mass > feas_tol()) {
            out.status = LpStatus::infeasible;
            return out;
        }
        drop_artificials();
        // phase 2
        phase1_ = false;
        st = iterate(max_iters);
        out.iterations = iters_;
        out.status = st;
        if (st != LpStatus::optimal) return out;

        out.x.assign(n_, scalar_traits<S>::zero());
        for (int i = 0; i < m_; ++i)
            if (basis_[i] < n_) out.x[basis_[i]] = xb_[i];
        out.value = scalar_traits<S>::zero();
        for (int j = 0; j < n_; ++j) out.value += p_.c[j] * out.x[j];

        // duals in terms of the original row orientation
        std::vector<S> y(m_, scalar_traits<S>::zero());
        for (int i = 0; i < m_; ++i) {
            S yi = scalar_traits<S>::zero();
            for (int k = 0; k < m_; ++k) yi += cb(k) * binv(k, i);
            y[i] = flipped_[row_ids_[i]] ? -yi : yi;
        }
        out.y = std::move(y);
        out.row_ids = row_ids_;
        S dual_value = scalar_traits<S>::zero();
        for (int i = 0; i < m_; ++i) dual_value += out.y[i] * p_.b[row_ids_[i]];
        out.gap = scalar_traits<S>::abs(out.value - dual_value);
        return out;
    }

private:
    S feas_tol() const {
        if constexpr (scalar_traits<S>::exact) return scalar_traits<S>::zero();
        else return 1e-9;
    }

    S& binv(int i, int j) { return binv_[static_cast<std::size_t>(i) * m_ + j]; }
    const S& binv(int i, int j) const { return binv_[static_cast<std::size_t>(i) * m_ + j]; }

    // entry (i, j) of the phase-normalized constraint matrix
    S entry(int i, int j) const {
        if (j >= n_) return (j - n_ == row_ids_[i]) ? scalar_traits<S>::one() : scalar_traits<S>::zero();
        const S& v = p_.at(row_ids_[i], j);
        return flipped_[row_ids_[i]] ? -v : v;
    }

    S cb(int k) const { return cost(basis_[k]); }
    S cost(int j) const {
        if (phase1_) return j >= n_ ? scalar_traits<S>::one() : scalar_traits<S>::zero();
        return j >= n_ ? scalar_traits<S>::zero() : p_.c[j];
    }

    std::vector<S> column(int j) const {
        std::vector<S> col(m_);
        for (int i = 0; i < m_; ++i) col[i] = entry(i, j);
        return col;
    }

    // reduced cost of column j given multipliers y
    S reduced(const std::vector<S>& y, int j) const {
        S r = cost(j);
        for (int i = 0; i < m_; ++i) {
            const S e = entry(i, j);
            if (!scalar_traits<S>::is_zero(e, 0.0)) r -= y[i] * e;
        }
        return r;
    }

    LpStatus iterate(long max_iters) {
        const S ptol = pivot_tol<S>();
        const S ctol = cost_tol<S>();
        int degenerate_streak = 0;
        while (true) {
            if (++iters_ > max_iters) return LpStatus::iteration_limit;
            // y = cB Binv
            std::vector<S> y(m_, scalar_traits<S>::zero());
            for (int i = 0; i < m_; ++i) {
                S yi = scalar_traits<S>::zero();
                for (int k = 0; k < m_; ++k) yi += cb(k) * binv(k, i);
                y[i] = yi;
            }
            // Dantzig pricing normally; Bland (smallest eligible index) kicks
            // in after a degenerate streak to rule out cycling. Artificials
            // never re-enter.
            const bool bland = degenerate_streak > 32 || scalar_traits<S>::exact;
            int enter = -1;
            S best = -ctol;
            for (int j = 0; j < n_; ++j) {
                if (in_basis_[j]) continue;
                S r = reduced(y, j);
                if (r < best) {
                    enter = j;
                    if (bland) break;
                    best = r;
                }
            }
            if (enter < 0) return LpStatus::optimal;
            // direction d = Binv * A_enter
            std::vector<S> acol = column(enter);
            std::vector<S> d(m_, scalar_traits<S>::zero());
            for (int i = 0; i < m_; ++i) {
                S di = scalar_traits<S>::zero();
                for (int k = 0; k < m_; ++k) di += binv(i, k) * acol[k];
                d[i] = di;
            }
            // ratio test, ties broken toward the smallest basis index
            int leave = -1;
            S best_ratio = scalar_traits<S>::zero();
            for (int i = 0; i < m_; ++i) {
                if (d[i] > ptol) {
                    S ratio = xb_[i] / d[i];
                    if (leave < 0 || ratio < best_ratio ||
                        (ratio == best_ratio && basis_[i] < basis_[leave])) {
                        leave = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (leave < 0) return LpStatus::unbounded;
            if (scalar_traits<S>::is_zero(best_ratio, 1e-13)) ++degenerate_streak;
            else degenerate_streak = 0;
            pivot(enter, leave, d);
        }
    }

    void pivot(int enter, int leave, const std::vector<S>& d) {
        const S piv = d[leave];
        for (int j = 0; j < m_; ++j) binv(leave, j) /= piv;
        xb_[leave] /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == leave) continue;
            const S f = d[i];
            if (scalar_traits<S>::is_zero(f, 0.0)) continue;
            for (int j = 0; j < m_; ++j) binv(i, j) -= f * binv(leave, j);
            xb_[i] -= f * xb_[leave];
        }
        if (basis_[leave] < n_) in_basis_[basis_[leave]] = false;
        basis_[leave] = enter;
        if (enter < n_) in_basis_[enter] = true;
        if constexpr (!scalar_traits<S>::exact) {
            for (int i = 0; i < m_; ++i)
                if (std::fabs(xb_[i]) < 1e-14) xb_[i] = 0.0;
        }
    }

    // After phase 1: pivot artificial basics out where possible, delete rows
    // that turned out redundant.
    void drop_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            int enter = -1;
            std::vector<S> d;
            for (int j = 0; j < n_ && enter < 0; ++j) {
                if (in_basis_[j]) continue;
                std::vector<S> acol = column(j);
                S dij = scalar_traits<S>::zero();
                for (int k = 0; k < m_; ++k) dij += binv(i, k) * acol[k];
                if (scalar_traits<S>::abs(dij) > pivot_tol<S>()) {
                    enter = j;
                    d.assign(m_, scalar_traits<S>::zero());
                    for (int r = 0; r < m_; ++r) {
                        S dr = scalar_traits<S>::zero();
                        for (int k = 0; k < m_; ++k) dr += binv(r, k) * acol[k];
                        d[r] = dr;
                    }
                }
            }
            if (enter >= 0) {
                pivot(enter, i, d);
            } else {
                remove_row(i);
                --i;
            }
        }
    }

    void remove_row(int r) {
        // Row r is a linear combination of the others (artificial stuck at 0);
        // drop it and rebuild the basis inverse over the surviving rows.
        row_ids_.erase(row_ids_.begin() + r);
        basis_.erase(basis_.begin() + r);
        xb_.erase(xb_.begin() + r);
        b_.erase(b_.begin() + r);
        --m_;
        refactor();
    }

    // Recompute Binv = inverse of the basis columns by Gauss-Jordan, then xb.
    void refactor() {
        std::vector<S> mat(static_cast<std::size_t>(m_) * 2 * m_, scalar_traits<S>::zero());
        auto at = [&](int i, int j) -> S& { return mat[static_cast<std::size_t>(i) * 2 * m_ + j]; };
        for (int i = 0; i < m_; ++i) {
            for (int k = 0; k < m_; ++k) at(i, k) = entry(i, basis_[k]);
            at(i, m_ + i) = scalar_traits<S>::one();
        }
        for (int col = 0; col < m_; ++col) {
            int piv = -1;
            for (int i = col; i < m_; ++i) {
                if (scalar_traits<S>::abs(at(i, col)) > pivot_tol<S>()) {
                    piv = i;
                    break;
                }
            }
            if (piv < 0) throw SolverError("simplex: singular basis during refactor");
            if (piv != col)
                for (int j = 0; j < 2 * m_; ++j) std::swap(at(piv, j), at(col, j));
            const S p = at(col, col);
            for (int j = 0; j < 2 * m_; ++j) at(col, j) /= p;
            for (int i = 0; i < m_; ++i) {
                if (i == col) continue;
                const S f = at(i, col);
                if (scalar_traits<S>::is_zero(f, 0.0)) continue;
                for (int j = 0; j < 2 * m_; ++j) at(i, j) -= f * at(col, j);
            }
        }
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j) binv(i, j) = at(i, m_ + j);
        for (int i = 0; i < m_; ++i) {
            S v = scalar_traits<S>::zero();
            for (int k = 0; k < m_; ++k) v += binv(i, k) * b_[k];
            xb_[i] = v;
        }
        binv_.resize(static_cast<std::size_t>(m_) * m_);
    }

    const LpProblem<S>& p_;
    int m_;
    int n_;
    bool phase1_ = true;
    long iters_ = 0;
    std::vector<int> row_ids_;
    std::vector<bool> flipped_;
    std::vector<char> in_basis_;
    std::vector<S> b_;
    std::vector<S> binv_;
    std::vector<int> basis_;
    std::vector<S> xb_;
};

}  // namespace detail

template <class S>
LpResult<S> solve_lp(const LpProblem<S>& p, long max_iters = 0) {
    if (max_iters <= 0) max_iters = 200L * (p.rows + p.cols) + 2000;
    detail::RevisedSimplex<S> simplex(p);
    return simplex.solve(max_iters);
}

// Independent dual-feasibility audit: every reduced cost against the returned
// multipliers must be nonnegative (up to float slack). Uses only (A, b, c, y).
template <class S>
bool dual_feasible(const LpProblem<S>& p, const LpResult<S>& res, double tol = 1e-8) {
    if (res.status != LpStatus::optimal) return false;
    for (int j = 0; j < p.cols; ++j) {
        S r = p.c[j];
        for (std::size_t k = 0; k < res.row_ids.size(); ++k)
            r -= res.y[k] * p.at(res.row_ids[k], j);
        if constexpr (scalar_traits<S>::exact) {
            if (r < scalar_traits<S>::zero()) return false;
        } else {
            double scale = std::max(1.0, std::fabs(scalar_traits<S>::to_double(p.c[j])));
            if (scalar_traits<S>::to_double(r) < -tol * scale) return false;
        }
    }
    return true;
}

}  // namespace kausal
