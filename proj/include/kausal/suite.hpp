#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kausal/io.hpp"

namespace kausal::suite {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string details;
    io::json data;      // structured values, deterministic
    double seconds = 0.0;  // wall time; kept out of the main report
};

struct SuiteResult {
    std::uint64_t seed = 0;
    long long samples = 0;
    std::vector<CriterionResult> criteria;
    bool all_pass() const {
        for (const auto& c : criteria)
            if (!c.pass) return false;
        return !criteria.empty();
    }
};

// Runs the full battery. scale divides the Monte Carlo sample counts for
// quick runs; scale 1 is the reference configuration.
SuiteResult run_acceptance(std::uint64_t seed, int scale = 1, bool verbose = false);

// Deterministic consolidated report: results + config + version, no timings.
io::json report_json(const SuiteResult& result);
std::string report_csv(const SuiteResult& result);
io::json timings_json(const SuiteResult& result);

}  // namespace kausal::suite
