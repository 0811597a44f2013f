#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace mattis {

// A grid of magnetization points with rate (or conjugate) values. Empty /
// undefined entries carry the +inf sentinel. CSV columns: m components, value.
struct RateFunctionTable {
    int dim = 1;
    std::vector<std::vector<double>> points;
    std::vector<double> values;
    nlohmann::json metadata;

    double min_value() const;
    void shift_min_to_zero();

    void write_csv(std::ostream& out) const;
    nlohmann::json to_json() const;
};

std::string format_full(double v);  // %.17g, "inf" for the sentinel

}  // namespace mattis
