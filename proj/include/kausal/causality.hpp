#pragma once

#include <optional>
#include <vector>

#include "kausal/path_space.hpp"

namespace kausal {

// Scale-aware kernel equality for float mode; rational mode compares exactly.
template <class S>
bool kernel_values_equal(const S& a, const S& b, double eta_min) {
    if constexpr (scalar_traits<S>::exact) {
        return a == b;
    } else {
        double tol = 1e-9 * std::max(1.0, 1.0 / std::max(eta_min, 1e-300));
        return std::fabs(a - b) <= tol;
    }
}

template <class S>
double min_positive_weight(const PathMeasure<S>& eta) {
    double m = 1.0;
    for (int i = 0; i < eta.size(); ++i)
        if (eta.is_positive(i)) m = std::min(m, scalar_traits<S>::to_double(eta[i]));
    return m;
}

// Partition of the positive-mass source paths induced by the time-t kernel:
// two paths share a cell iff their kernel masses agree on every time-t atom
// of the target space. This realizes the sigma-field generated by the plan
// at time t.
inline void require_common_horizon(const FilteredPathSpace& e, const FilteredPathSpace& s) {
    if (e.steps() != s.steps())
        throw ValidationError("causality needs both spaces on a common time horizon");
}

template <class S>
Partition generated_filtration(const Coupling<S>& gamma, int t) {
    require_common_horizon(*gamma.first_space(), *gamma.second_space());
    auto [eta, nu] = marginals(gamma);
    auto kernel = conditional_kernel(gamma);
    const auto& s_atoms = gamma.second_space()->partition(t);
    const double eta_min = min_positive_weight(eta);

    std::vector<int> paths = eta.support();
    std::vector<std::vector<S>> profile(paths.size());
    for (std::size_t r = 0; r < paths.size(); ++r) {
        profile[r].reserve(s_atoms.size());
        for (const auto& atom : s_atoms) profile[r].push_back(kernel.mass(paths[r], atom));
    }

    // union-find over equal-profile pairs; tolerance-based equality is not
    // transitive in float mode, merging keeps cells well defined
    std::vector<int> parent(paths.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (std::size_t j = i + 1; j < paths.size(); ++j) {
            bool eq = true;
            for (std::size_t a = 0; a < s_atoms.size() && eq; ++a)
                eq = kernel_values_equal(profile[i][a], profile[j][a], eta_min);
            if (eq) parent[find(static_cast<int>(j))] = find(static_cast<int>(i));
        }

    Partition cells;
    std::vector<int> cell_of(paths.size(), -1);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        int root = find(static_cast<int>(i));
        if (cell_of[root] == -1) {
            cell_of[root] = static_cast<int>(cells.size());
            cells.emplace_back();
        }
        cells[cell_of[root]].push_back(paths[i]);
    }
    return cells;
}

struct CausalityWitness {
    int t = 0;
    int path_a = 0;   // source paths in one time-t atom with unequal kernels
    int path_b = 0;
    int s_atom = 0;   // target atom index where the kernels disagree
};

template <class S>
struct CausalityVerdict {
    bool causal = true;
    std::optional<CausalityWitness> witness;
};

// Definition route: build the kernel-generated partition at each t and check
// it is coarser than the source partition restricted to positive mass.
template <class S>
CausalityVerdict<S> is_causal(const Coupling<S>& gamma) {
    require_common_horizon(*gamma.first_space(), *gamma.second_space());
    auto [eta, nu] = marginals(gamma);
    const int T = gamma.first_space()->steps();
    for (int t = 1; t <= T; ++t) {
        Partition cells = generated_filtration(gamma, t);
        std::vector<int> cell_of(gamma.rows(), -1);
        for (std::size_t c = 0; c < cells.size(); ++c)
            for (int p : cells[c]) cell_of[p] = static_cast<int>(c);

        for (const auto& atom : eta.positive_atoms(t)) {
            int cell = cell_of[atom.front()];
            for (int p : atom) {
                if (cell_of[p] == cell) continue;
                // locate a disagreeing target atom for the witness
                auto kernel = conditional_kernel(gamma);
                const auto& s_atoms = gamma.second_space()->partition(t);
                const double eta_min = min_positive_weight(eta);
                CausalityWitness w{t, atom.front(), p, 0};
                for (std::size_t a = 0; a < s_atoms.size(); ++a) {
                    if (!kernel_values_equal(kernel.mass(atom.front(), s_atoms[a]),
                                             kernel.mass(p, s_atoms[a]), eta_min)) {
                        w.s_atom = static_cast<int>(a);
                        break;
                    }
                }
                return {false, w};
            }
        }
    }
    return {true, std::nullopt};
}

// Conditional-law route: gamma({w} x A)/eta(w) must be constant on the
// positive part of every source atom, for every target atom A at time t.
// Independent of the kernel/partition machinery above; the two routes must
// agree on every input.
template <class S>
bool is_causal_via_conditional_laws(const Coupling<S>& gamma) {
    require_common_horizon(*gamma.first_space(), *gamma.second_space());
    auto [eta, nu] = marginals(gamma);
    const int T = gamma.first_space()->steps();
    const double eta_min = min_positive_weight(eta);
    for (int t = 1; t <= T; ++t) {
        const auto& s_atoms = gamma.second_space()->partition(t);
        for (const auto& atom : eta.positive_atoms(t)) {
            if (atom.size() < 2) continue;
            for (const auto& A : s_atoms) {
                const int ref = atom.front();
                S ref_val = gamma.row_set_mass(ref, A) / eta[ref];
                for (std::size_t k = 1; k < atom.size(); ++k) {
                    S val = gamma.row_set_mass(atom[k], A) / eta[atom[k]];
                    if (!kernel_values_equal(ref_val, val, eta_min)) return false;
                }
            }
        }
    }
    return true;
}

// One linearized kernel-equality between two source paths of a common atom:
//   mass(row_a x cols) * eta_b - mass(row_b x cols) * eta_a = 0
template <class S>
struct ChainEquality {
    int t;
    int e_atom;
    int s_atom;
    int row_a;
    int row_b;
    std::vector<int> cols;  // member paths of the target atom
    S eta_a;
    S eta_b;
};

template <class S>
struct CausalityConstraintSet {
    std::vector<ChainEquality<S>> equalities;

    S residual_linf(const Coupling<S>& gamma) const {
        S worst = scalar_traits<S>::zero();
        for (const auto& eq : equalities) {
            S r = gamma.row_set_mass(eq.row_a, eq.cols) * eq.eta_b -
                  gamma.row_set_mass(eq.row_b, eq.cols) * eq.eta_a;
            r = scalar_traits<S>::abs(r);
            if (r > worst) worst = r;
        }
        return worst;
    }
};

// Linear equalities whose joint solution set, within couplings of first
// marginal eta, is exactly the causal set. Pairwise redundancy inside an atom
// collapses to a spanning chain (consecutive paths), and target atoms equal
// to the whole path set are skipped since their kernel mass is identically 1.
template <class S>
CausalityConstraintSet<S> causality_constraints(const FilteredPathSpace& source,
                                                const FilteredPathSpace& target,
                                                const PathMeasure<S>& eta) {
    CausalityConstraintSet<S> out;
    const int T = source.steps();
    if (target.steps() != T) throw ValidationError("causality_constraints: spaces disagree on steps");
    for (int t = 1; t <= T; ++t) {
        const auto& s_atoms = target.partition(t);
        const Partition e_atoms = eta.positive_atoms(t);
        for (std::size_t ea = 0; ea < e_atoms.size(); ++ea) {
            const auto& atom = e_atoms[ea];
            if (atom.size() < 2) continue;
            for (std::size_t sa = 0; sa < s_atoms.size(); ++sa) {
                if (static_cast<int>(s_atoms[sa].size()) == target.path_count()) continue;
                for (std::size_t k = 0; k + 1 < atom.size(); ++k) {
                    ChainEquality<S> eq;
                    eq.t = t;
                    eq.e_atom = static_cast<int>(ea);
                    eq.s_atom = static_cast<int>(sa);
                    eq.row_a = atom[k];
                    eq.row_b = atom[k + 1];
                    eq.cols = s_atoms[sa];
                    eq.eta_a = eta[atom[k]];
                    eq.eta_b = eta[atom[k + 1]];
                    out.equalities.push_back(std::move(eq));
                }
            }
        }
    }
    return out;
}

}  // namespace kausal
