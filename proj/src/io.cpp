#include "kausal/io.hpp"

#include <filesystem>
#include <fstream>

namespace kausal::io {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

void save_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

SpacePtr space_from_json(const json& j) {
    if (!j.contains("steps") || !j.contains("alphabets"))
        throw ValidationError("space needs 'steps' and 'alphabets'");
    int steps = j.at("steps").get<int>();
    auto alphabets = j.at("alphabets").get<std::vector<int>>();
    if (static_cast<int>(alphabets.size()) != steps)
        throw ValidationError("'alphabets' length must equal 'steps'");
    if (!j.contains("filtration") || (j.at("filtration").is_string() &&
                                      j.at("filtration").get<std::string>() == "coordinate"))
        return std::make_shared<FilteredPathSpace>(FilteredPathSpace::coordinate(alphabets));
    if (j.at("filtration").is_string()) {
        if (j.at("filtration").get<std::string>() == "degenerate")
            return std::make_shared<FilteredPathSpace>(FilteredPathSpace::degenerate(alphabets));
        throw ValidationError("unknown filtration keyword: " +
                              j.at("filtration").get<std::string>());
    }
    auto partitions = j.at("filtration").get<std::vector<Partition>>();
    return std::make_shared<FilteredPathSpace>(
        FilteredPathSpace::with_filtration(alphabets, std::move(partitions)));
}

json space_to_json(const FilteredPathSpace& sp) {
    json j;
    j["steps"] = sp.steps();
    j["alphabets"] = sp.alphabets();
    json parts = json::array();
    for (int t = 1; t <= sp.steps(); ++t) parts.push_back(sp.partition(t));
    j["filtration"] = std::move(parts);
    return j;
}

namespace {

template <class S>
std::vector<S> weights_from_json(const json& j, int expected) {
    if (!j.contains("weights")) throw ValidationError("measure needs 'weights'");
    const auto& arr = j.at("weights");
    if (!arr.is_array() || static_cast<int>(arr.size()) != expected)
        throw ValidationError("'weights' must list one value per path in lexicographic order");
    std::vector<S> w;
    w.reserve(arr.size());
    for (const auto& v : arr) {
        if constexpr (scalar_traits<S>::exact) {
            if (v.is_string()) w.push_back(Rational::from_string(v.get<std::string>()));
            else w.push_back(Rational::from_double(v.get<double>()));
        } else {
            if (v.is_string()) w.push_back(Rational::from_string(v.get<std::string>()).to_double());
            else w.push_back(v.get<double>());
        }
    }
    // exact weights parsed from decimals may miss 1 by a dyadic sliver
    S total = scalar_traits<S>::zero();
    for (const auto& v : w) total += v;
    if constexpr (scalar_traits<S>::exact) {
        if (total != scalar_traits<S>::one()) {
            if (std::fabs(total.to_double() - 1.0) > 1e-9)
                throw ValidationError("measure weights must sum to 1");
            for (auto& v : w) v /= total;
        }
    }
    return w;
}

}  // namespace

PathMeasure<double> measure_from_json(const json& j) {
    auto sp = space_from_json(j);
    auto w = weights_from_json<double>(j, sp->path_count());
    return PathMeasure<double>(std::move(sp), std::move(w));
}

PathMeasure<Rational> exact_measure_from_json(const json& j) {
    auto sp = space_from_json(j);
    auto w = weights_from_json<Rational>(j, sp->path_count());
    return PathMeasure<Rational>(std::move(sp), std::move(w));
}

json measure_to_json(const PathMeasure<double>& m) {
    json j = space_to_json(*m.space());
    j["weights"] = m.weights();
    return j;
}

namespace {

SpacePtr side_space(const json& j, const std::string& base_dir) {
    if (j.is_string()) {
        auto path = std::filesystem::path(base_dir) / j.get<std::string>();
        return space_from_json(load_json(path.string()));
    }
    return space_from_json(j);
}

}  // namespace

Coupling<double> coupling_from_json(const json& j, const std::string& base_dir) {
    if (!j.contains("first") || !j.contains("second") || !j.contains("weights"))
        throw ValidationError("coupling needs 'first', 'second' and 'weights'");
    auto first = side_space(j.at("first"), base_dir);
    auto second = side_space(j.at("second"), base_dir);
    const auto& rows = j.at("weights");
    if (!rows.is_array() || static_cast<int>(rows.size()) != first->path_count())
        throw ValidationError("coupling 'weights' must have one row per first-space path");
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(first->path_count()) * second->path_count());
    for (const auto& row : rows) {
        if (!row.is_array() || static_cast<int>(row.size()) != second->path_count())
            throw ValidationError("coupling row length must match the second space");
        for (const auto& v : row) w.push_back(v.get<double>());
    }
    return Coupling<double>(std::move(first), std::move(second), std::move(w));
}

json coupling_to_json(const Coupling<double>& g) {
    json j;
    j["first"] = space_to_json(*g.first_space());
    j["second"] = space_to_json(*g.second_space());
    json rows = json::array();
    for (int i = 0; i < g.rows(); ++i) {
        json row = json::array();
        for (int c = 0; c < g.cols(); ++c) row.push_back(g.at(i, c));
        rows.push_back(std::move(row));
    }
    j["weights"] = std::move(rows);
    return j;
}

CostMatrix cost_from_json(const json& j) {
    if (!j.contains("entries")) throw ValidationError("cost file needs 'entries'");
    const auto& rows = j.at("entries");
    if (!rows.is_array() || rows.empty()) throw ValidationError("cost 'entries' must be a matrix");
    const int nr = static_cast<int>(rows.size());
    const int nc = static_cast<int>(rows.front().size());
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(nr) * nc);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != nc)
            throw ValidationError("cost rows must have equal length");
        for (const auto& v : row) {
            if (v.is_null()) entries.push_back(std::numeric_limits<double>::infinity());
            else if (v.is_string()) {
                if (v.get<std::string>() == "inf")
                    entries.push_back(std::numeric_limits<double>::infinity());
                else throw ValidationError("cost entries may be numbers, null, or \"inf\"");
            } else entries.push_back(v.get<double>());
        }
    }
    return CostMatrix(nr, nc, std::move(entries));
}

json cost_to_json(const CostMatrix& c) {
    json rows = json::array();
    for (int i = 0; i < c.rows(); ++i) {
        json row = json::array();
        for (int j2 = 0; j2 < c.cols(); ++j2) {
            double v = c.at(i, j2);
            if (std::isinf(v)) row.push_back("inf");
            else row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    json j;
    j["entries"] = std::move(rows);
    return j;
}

}  // namespace kausal::io
