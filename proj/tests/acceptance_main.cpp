// Full acceptance battery at the reference configuration. Prints one
// PASS/FAIL line per criterion and exits nonzero if any fails.
#include <cstdio>
#include <cstdlib>

#include "kausal/suite.hpp"

int main(int argc, char** argv) {
    std::uint64_t seed = 42;
    int scale = 1;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--seed" && i + 1 < argc) seed = std::strtoull(argv[++i], nullptr, 10);
        else if (arg == "--scale" && i + 1 < argc) scale = std::atoi(argv[++i]);
    }
    auto result = kausal::suite::run_acceptance(seed, scale, /*verbose=*/false);
    for (const auto& c : result.criteria)
        std::printf("[%s] criterion %2d: %s (%s)\n", c.pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), c.details.c_str());
    std::printf("%s\n", result.all_pass() ? "ACCEPTANCE: all criteria pass"
                                          : "ACCEPTANCE: FAILURES present");
    return result.all_pass() ? 0 : 1;
}
