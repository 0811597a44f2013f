// Acceptance suite runner: one pass/fail line per criterion, nonzero exit on
// any failure. The same checks back the `mattisglass verify` subcommand.

#include <cstdlib>
#include <iostream>
#include <string>

#include "mattisglass/verify.hpp"

int main(int argc, char** argv)
{
    mattis::VerifyOptions opts;
    opts.progress = &std::cout;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) opts.only = argv[++i];
        if (arg == "--samples" && i + 1 < argc) opts.samples = std::atoi(argv[++i]);
        if (arg == "--seed" && i + 1 < argc) opts.seed = std::strtoull(argv[++i], nullptr, 10);
    }

    const auto results = mattis::run_acceptance(opts);
    int failures = 0;
    for (const auto& r : results)
        if (!r.pass) ++failures;
    std::cout << (failures == 0 ? "ACCEPTANCE: all checks passed"
                                : "ACCEPTANCE: " + std::to_string(failures) + " check(s) failed")
              << " (" << results.size() << " run)\n";
    return failures == 0 ? 0 : 1;
}
