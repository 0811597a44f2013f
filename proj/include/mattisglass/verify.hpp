#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace mattis {

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
    double seconds = 0.0;
    std::string note;
};

struct VerifyOptions {
    std::uint64_t seed = 2026;
    int samples = 50;
    std::vector<int> n_list = {10, 14, 18};           // finite-size trend sizes
    std::map<std::string, double> tolerance_override;  // by check name
    std::uint64_t enumeration_budget = 1ull << 24;
    std::string only;  // when nonempty, run only checks whose name contains it
    std::ostream* progress = nullptr;
};

// Runs the full acceptance suite; one result per criterion, in order.
std::vector<CheckResult> run_acceptance(const VerifyOptions& opts);

nlohmann::json report_to_json(const std::vector<CheckResult>& results);

// built-in spec documents used by the suite (also shipped under specs/)
std::string builtin_spec_basic(double beta);
std::string builtin_spec_ising_field();  // h = tau_1, trivial chi
std::string builtin_spec_mixture3();     // orders 1..3, three-atom prior
std::string builtin_spec_vector_d2();    // D = 2 quadratic catalog

}  // namespace mattis
