#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "kausal/rational.hpp"

namespace kausal {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Partition = std::vector<std::vector<int>>;  // atoms as sorted path-index lists

// Finite discrete-time path space: the path set is the full lexicographic
// product of per-step alphabets, and each time step carries a partition of
// the path set. Partitions must refine as time advances. Immutable after
// construction.
class FilteredPathSpace {
public:
    static constexpr int kMaxPaths = 4096;

    // Coordinate filtration: time-t atoms group paths sharing their first t symbols.
    static FilteredPathSpace coordinate(std::vector<int> alphabets) {
        FilteredPathSpace sp(std::move(alphabets));
        sp.filtration_.reserve(sp.steps());
        for (int t = 1; t <= sp.steps(); ++t) sp.filtration_.push_back(sp.prefix_partition(t));
        sp.finish();
        return sp;
    }

    // Fully explicit filtration, one partition per time step.
    static FilteredPathSpace with_filtration(std::vector<int> alphabets,
                                             std::vector<Partition> filtration) {
        FilteredPathSpace sp(std::move(alphabets));
        if (static_cast<int>(filtration.size()) != sp.steps())
            throw ValidationError("filtration must provide one partition per step");
        sp.filtration_ = std::move(filtration);
        sp.finish();
        return sp;
    }

    // Every time step carries the discrete partition: no information constraint,
    // plain optimal transport.
    static FilteredPathSpace degenerate(std::vector<int> alphabets) {
        FilteredPathSpace sp(std::move(alphabets));
        Partition singletons;
        singletons.reserve(sp.path_count());
        for (int i = 0; i < sp.path_count(); ++i) singletons.push_back({i});
        sp.filtration_.assign(sp.steps(), singletons);
        sp.finish();
        return sp;
    }

    int steps() const { return static_cast<int>(alphabets_.size()); }
    int path_count() const { return path_count_; }
    const std::vector<int>& alphabets() const { return alphabets_; }

    // Symbols of path `index` in lexicographic (mixed-radix, first symbol most
    // significant) order.
    std::vector<int> path_symbols(int index) const {
        std::vector<int> s(alphabets_.size());
        for (int t = steps() - 1; t >= 0; --t) {
            s[t] = index % alphabets_[t];
            index /= alphabets_[t];
        }
        return s;
    }

    int path_index(const std::vector<int>& symbols) const {
        if (static_cast<int>(symbols.size()) != steps())
            throw ValidationError("path has wrong number of symbols");
        int idx = 0;
        for (int t = 0; t < steps(); ++t) {
            if (symbols[t] < 0 || symbols[t] >= alphabets_[t])
                throw ValidationError("path symbol out of alphabet range");
            idx = idx * alphabets_[t] + symbols[t];
        }
        return idx;
    }

    // 1-based time.
    const Partition& partition(int t) const { return filtration_.at(t - 1); }
    int atom_of(int t, int path) const { return atom_of_.at(t - 1).at(path); }
    int atom_count(int t) const { return static_cast<int>(partition(t).size()); }

    bool is_discrete_at(int t) const {
        for (const auto& atom : partition(t))
            if (atom.size() > 1) return false;
        return true;
    }

    bool same_layout(const FilteredPathSpace& o) const {
        return alphabets_ == o.alphabets_ && filtration_ == o.filtration_;
    }

private:
    explicit FilteredPathSpace(std::vector<int> alphabets) : alphabets_(std::move(alphabets)) {
        if (alphabets_.empty()) throw ValidationError("space needs at least one step");
        long count = 1;
        for (int k : alphabets_) {
            if (k < 1) throw ValidationError("alphabet sizes must be positive");
            count *= k;
            if (count > kMaxPaths) throw ValidationError("path set too large");
        }
        path_count_ = static_cast<int>(count);
    }

    Partition prefix_partition(int t) const {
        // Paths sharing a length-t prefix are contiguous in lex order.
        int suffix = 1;
        for (int s = t; s < steps(); ++s) suffix *= alphabets_[s];
        Partition part;
        for (int start = 0; start < path_count_; start += suffix) {
            std::vector<int> atom(suffix);
            std::iota(atom.begin(), atom.end(), start);
            part.push_back(std::move(atom));
        }
        return part;
    }

    void finish() {
        atom_of_.assign(filtration_.size(), std::vector<int>(path_count_, -1));
        for (std::size_t ti = 0; ti < filtration_.size(); ++ti) {
            auto& part = filtration_[ti];
            for (auto& atom : part) {
                std::sort(atom.begin(), atom.end());
                for (int p : atom) {
                    if (p < 0 || p >= path_count_) throw ValidationError("atom path index out of range");
                    if (atom_of_[ti][p] != -1) throw ValidationError("partition atoms overlap");
                    atom_of_[ti][p] = static_cast<int>(&atom - part.data());
                }
            }
            for (int p = 0; p < path_count_; ++p)
                if (atom_of_[ti][p] == -1) throw ValidationError("partition does not cover the path set");
            if (ti > 0) {
                // refinement: each atom at time t+1 stays inside one atom at time t
                for (const auto& atom : part) {
                    int coarse = atom_of_[ti - 1][atom.front()];
                    for (int p : atom)
                        if (atom_of_[ti - 1][p] != coarse)
                            throw ValidationError("filtration partitions must refine in time");
                }
            }
        }
    }

    std::vector<int> alphabets_;
    int path_count_ = 0;
    std::vector<Partition> filtration_;
    std::vector<std::vector<int>> atom_of_;
};

using SpacePtr = std::shared_ptr<const FilteredPathSpace>;

// Probability vector over the paths of a space.
template <class S>
class PathMeasure {
public:
    PathMeasure(SpacePtr space, std::vector<S> weights)
        : space_(std::move(space)), weights_(std::move(weights)) {
        if (!space_) throw ValidationError("measure needs a space");
        if (static_cast<int>(weights_.size()) != space_->path_count())
            throw ValidationError("measure weight count does not match path count");
        S total = scalar_traits<S>::zero();
        for (const S& w : weights_) {
            if (w < scalar_traits<S>::zero()) throw ValidationError("measure weights must be nonnegative");
            total += w;
        }
        if (!mass_is_one(total)) throw ValidationError("measure weights must sum to 1");
    }

    static PathMeasure uniform(SpacePtr space) {
        int n = space->path_count();
        std::vector<S> w(n, scalar_traits<S>::one() / scalar_traits<S>::from_int(n));
        return PathMeasure(std::move(space), std::move(w));
    }

    static PathMeasure dirac(SpacePtr space, int path) {
        std::vector<S> w(space->path_count(), scalar_traits<S>::zero());
        w.at(path) = scalar_traits<S>::one();
        return PathMeasure(std::move(space), std::move(w));
    }

    const SpacePtr& space() const { return space_; }
    const std::vector<S>& weights() const { return weights_; }
    const S& operator[](int i) const { return weights_[i]; }
    int size() const { return static_cast<int>(weights_.size()); }

    bool is_positive(int i) const { return !scalar_traits<S>::is_zero(weights_[i], 0.0) && weights_[i] > scalar_traits<S>::zero(); }

    std::vector<int> support() const {
        std::vector<int> idx;
        for (int i = 0; i < size(); ++i)
            if (is_positive(i)) idx.push_back(i);
        return idx;
    }

    // Restriction of the time-t partition to positive-mass paths; atoms that
    // lose all their mass disappear. Kernel measurability is only ever tested
    // against these.
    Partition positive_atoms(int t) const {
        Partition out;
        for (const auto& atom : space_->partition(t)) {
            std::vector<int> kept;
            for (int p : atom)
                if (is_positive(p)) kept.push_back(p);
            if (!kept.empty()) out.push_back(std::move(kept));
        }
        return out;
    }

private:
    static bool mass_is_one(const S& total) {
        if constexpr (scalar_traits<S>::exact) {
            return total == scalar_traits<S>::one();
        } else {
            return std::fabs(scalar_traits<S>::to_double(total) - 1.0) <= 1e-12;
        }
    }

    SpacePtr space_;
    std::vector<S> weights_;
};

// Probability on the product of two path spaces, stored dense row-major.
template <class S>
class Coupling {
public:
    Coupling(SpacePtr first, SpacePtr second, std::vector<S> weights)
        : first_(std::move(first)), second_(std::move(second)), weights_(std::move(weights)) {
        if (!first_ || !second_) throw ValidationError("coupling needs two spaces");
        rows_ = first_->path_count();
        cols_ = second_->path_count();
        if (static_cast<int>(weights_.size()) != rows_ * cols_)
            throw ValidationError("coupling weight matrix has wrong shape");
        S total = scalar_traits<S>::zero();
        for (const S& w : weights_) {
            if (w < scalar_traits<S>::zero()) throw ValidationError("coupling weights must be nonnegative");
            total += w;
        }
        bool ok;
        if constexpr (scalar_traits<S>::exact)
            ok = total == scalar_traits<S>::one();
        else
            ok = std::fabs(scalar_traits<S>::to_double(total) - 1.0) <= 1e-10;
        if (!ok) throw ValidationError("coupling total mass must be 1");
    }

    const SpacePtr& first_space() const { return first_; }
    const SpacePtr& second_space() const { return second_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const S& at(int i, int j) const { return weights_[static_cast<std::size_t>(i) * cols_ + j]; }
    const std::vector<S>& weights() const { return weights_; }

    S row_sum(int i) const {
        S s = scalar_traits<S>::zero();
        for (int j = 0; j < cols_; ++j) s += at(i, j);
        return s;
    }
    S col_sum(int j) const {
        S s = scalar_traits<S>::zero();
        for (int i = 0; i < rows_; ++i) s += at(i, j);
        return s;
    }

    // Mass of {row} x A.
    S row_set_mass(int i, const std::vector<int>& cols) const {
        S s = scalar_traits<S>::zero();
        for (int j : cols) s += at(i, j);
        return s;
    }

private:
    SpacePtr first_;
    SpacePtr second_;
    int rows_ = 0;
    int cols_ = 0;
    std::vector<S> weights_;
};

// Disintegration of a coupling against its first marginal: one row measure
// per positive-mass source path. Rows for null paths do not exist.
template <class S>
class ConditionalKernel {
public:
    ConditionalKernel(std::vector<int> row_paths, std::vector<std::vector<S>> rows, int cols)
        : row_paths_(std::move(row_paths)), rows_(std::move(rows)), cols_(cols) {
        row_pos_.assign(max_path_index() + 1, -1);
        for (std::size_t r = 0; r < row_paths_.size(); ++r) row_pos_[row_paths_[r]] = static_cast<int>(r);
    }

    const std::vector<int>& row_paths() const { return row_paths_; }
    int cols() const { return cols_; }

    bool has_row(int path) const {
        return path >= 0 && path < static_cast<int>(row_pos_.size()) && row_pos_[path] >= 0;
    }

    const std::vector<S>& row(int path) const {
        if (!has_row(path)) throw ValidationError("kernel undefined on null atom");
        return rows_[row_pos_[path]];
    }

    S mass(int path, const std::vector<int>& cols) const {
        const auto& r = row(path);
        S s = scalar_traits<S>::zero();
        for (int j : cols) s += r[j];
        return s;
    }

private:
    int max_path_index() const {
        int m = 0;
        for (int p : row_paths_) m = std::max(m, p);
        return m;
    }

    std::vector<int> row_paths_;
    std::vector<std::vector<S>> rows_;
    std::vector<int> row_pos_;
    int cols_;
};

// ---- operations ------------------------------------------------------------

template <class S>
std::pair<PathMeasure<S>, PathMeasure<S>> marginals(const Coupling<S>& gamma) {
    std::vector<S> first(gamma.rows(), scalar_traits<S>::zero());
    std::vector<S> second(gamma.cols(), scalar_traits<S>::zero());
    for (int i = 0; i < gamma.rows(); ++i)
        for (int j = 0; j < gamma.cols(); ++j) {
            first[i] += gamma.at(i, j);
            second[j] += gamma.at(i, j);
        }
    return {PathMeasure<S>(gamma.first_space(), std::move(first)),
            PathMeasure<S>(gamma.second_space(), std::move(second))};
}

template <class S>
ConditionalKernel<S> conditional_kernel(const Coupling<S>& gamma) {
    std::vector<int> row_paths;
    std::vector<std::vector<S>> rows;
    for (int i = 0; i < gamma.rows(); ++i) {
        S eta = gamma.row_sum(i);
        if (scalar_traits<S>::is_zero(eta, 0.0) || !(eta > scalar_traits<S>::zero())) continue;
        std::vector<S> row(gamma.cols());
        for (int j = 0; j < gamma.cols(); ++j) row[j] = gamma.at(i, j) / eta;
        row_paths.push_back(i);
        rows.push_back(std::move(row));
    }
    return ConditionalKernel<S>(std::move(row_paths), std::move(rows), gamma.cols());
}

template <class S>
Coupling<S> product_coupling(const PathMeasure<S>& eta, const PathMeasure<S>& nu) {
    std::vector<S> w;
    w.reserve(static_cast<std::size_t>(eta.size()) * nu.size());
    for (int i = 0; i < eta.size(); ++i)
        for (int j = 0; j < nu.size(); ++j) w.push_back(eta[i] * nu[j]);
    return Coupling<S>(eta.space(), nu.space(), std::move(w));
}

// U given as a target path index per source path index; only consulted on
// positive-mass sources.
using PathMap = std::vector<int>;

template <class S>
Coupling<S> graph_coupling(const PathMap& map, const PathMeasure<S>& eta, SpacePtr target) {
    const int rows = eta.size();
    const int cols = target->path_count();
    std::vector<S> w(static_cast<std::size_t>(rows) * cols, scalar_traits<S>::zero());
    for (int i = 0; i < rows; ++i) {
        if (!eta.is_positive(i)) continue;
        if (i >= static_cast<int>(map.size()) || map[i] < 0 || map[i] >= cols)
            throw ValidationError("graph_coupling: map leaves the target path set (range error)");
        w[static_cast<std::size_t>(i) * cols + map[i]] = eta[i];
    }
    return Coupling<S>(eta.space(), std::move(target), std::move(w));
}

template <class S>
PathMeasure<S> pushforward(const PathMap& map, const PathMeasure<S>& eta, SpacePtr target) {
    std::vector<S> w(target->path_count(), scalar_traits<S>::zero());
    for (int i = 0; i < eta.size(); ++i) {
        if (!eta.is_positive(i)) continue;
        if (i >= static_cast<int>(map.size()) || map[i] < 0 || map[i] >= target->path_count())
            throw ValidationError("pushforward: map leaves the target path set (range error)");
        w[map[i]] += eta[i];
    }
    return PathMeasure<S>(std::move(target), std::move(w));
}

// U is adapted iff at every time t the target atom of U(w) is determined by
// the source atom of w, up to eta-null paths.
template <class S>
bool is_adapted_map(const PathMap& map, const FilteredPathSpace& target,
                    const PathMeasure<S>& eta) {
    const int T = eta.space()->steps();
    if (target.steps() != T)
        throw ValidationError("adaptedness needs both spaces on a common time horizon");
    for (int t = 1; t <= T; ++t) {
        for (const auto& atom : eta.positive_atoms(t)) {
            int want = -1;
            for (int p : atom) {
                if (p >= static_cast<int>(map.size()) || map[p] < 0 ||
                    map[p] >= target.path_count())
                    throw ValidationError("is_adapted_map: map leaves the target path set");
                int got = target.atom_of(t, map[p]);
                if (want == -1) want = got;
                else if (got != want) return false;
            }
        }
    }
    return true;
}

// Convex mixture of two couplings over the same spaces.
template <class S>
Coupling<S> mix(const S& lambda, const Coupling<S>& a, const Coupling<S>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError("mix: shape mismatch");
    std::vector<S> w(a.weights().size());
    const S one_minus = scalar_traits<S>::one() - lambda;
    for (std::size_t k = 0; k < w.size(); ++k)
        w[k] = lambda * a.weights()[k] + one_minus * b.weights()[k];
    return Coupling<S>(a.first_space(), a.second_space(), std::move(w));
}

// gamma from (eta, kernel): exact inverse of conditional_kernel on supports.
template <class S>
Coupling<S> from_kernel(const PathMeasure<S>& eta, const ConditionalKernel<S>& kernel,
                        SpacePtr target) {
    const int cols = target->path_count();
    std::vector<S> w(static_cast<std::size_t>(eta.size()) * cols, scalar_traits<S>::zero());
    for (int i = 0; i < eta.size(); ++i) {
        if (!eta.is_positive(i)) continue;
        const auto& row = kernel.row(i);
        for (int j = 0; j < cols; ++j) w[static_cast<std::size_t>(i) * cols + j] = eta[i] * row[j];
    }
    return Coupling<S>(eta.space(), std::move(target), std::move(w));
}

}  // namespace kausal
