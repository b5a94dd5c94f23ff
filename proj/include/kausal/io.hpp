#pragma once

#include <string>
#include <utility>

#include <json.hpp>

#include "kausal/path_space.hpp"
#include "kausal/transport.hpp"

namespace kausal::io {

using nlohmann::json;

json load_json(const std::string& path);
void save_json(const json& j, const std::string& path);

// {"steps": T, "alphabets": [...], "filtration": "coordinate" | [[...atoms...] per t]}
SpacePtr space_from_json(const json& j);
json space_to_json(const FilteredPathSpace& sp);

// a measure file additionally carries "weights" in lexicographic path order;
// weights may be numbers or exact "p/q" strings
PathMeasure<double> measure_from_json(const json& j);
PathMeasure<Rational> exact_measure_from_json(const json& j);
json measure_to_json(const PathMeasure<double>& m);

// {"first": <file path or inline object>, "second": ..., "weights": [[row-major]]}
Coupling<double> coupling_from_json(const json& j, const std::string& base_dir);
json coupling_to_json(const Coupling<double>& g);

// {"entries": [[...], ...]} with null or "inf" marking forbidden cells
CostMatrix cost_from_json(const json& j);
json cost_to_json(const CostMatrix& c);

template <class S>
json transport_solution_to_json(const TransportSolution<S>& sol) {
    json j;
    j["status"] = to_string(sol.status);
    j["value"] = scalar_traits<S>::to_double(sol.value);
    if constexpr (scalar_traits<S>::exact) j["value_exact"] = sol.value.to_string();
    j["gap"] = scalar_traits<S>::to_double(sol.gap);
    j["dual_feasible"] = sol.dual_feasible;
    j["lp_iterations"] = sol.lp_iterations;
    if (sol.sweeps > 0) {
        j["sweeps"] = sol.sweeps;
        j["converged"] = sol.converged;
        j["marginal_residual"] = sol.marginal_residual;
        j["causality_residual"] = sol.causality_residual;
    }
    if (sol.plan) {
        json rows = json::array();
        for (int i = 0; i < sol.plan->rows(); ++i) {
            json row = json::array();
            for (int c = 0; c < sol.plan->cols(); ++c)
                row.push_back(scalar_traits<S>::to_double(sol.plan->at(i, c)));
            rows.push_back(std::move(row));
        }
        j["plan"] = std::move(rows);
    }
    json dual;
    dual["row_paths"] = sol.dual.row_paths;
    dual["col_paths"] = sol.dual.col_paths;
    json rp = json::array(), cp = json::array(), cm = json::array();
    for (const auto& v : sol.dual.row_potentials) rp.push_back(scalar_traits<S>::to_double(v));
    for (const auto& v : sol.dual.col_potentials) cp.push_back(scalar_traits<S>::to_double(v));
    for (const auto& v : sol.dual.causality_multipliers)
        cm.push_back(scalar_traits<S>::to_double(v));
    dual["row_potentials"] = std::move(rp);
    dual["col_potentials"] = std::move(cp);
    dual["causality_multipliers"] = std::move(cm);
    dual["causality_ids"] = sol.dual.causality_ids;
    j["dual"] = std::move(dual);
    return j;
}

}  // namespace kausal::io
