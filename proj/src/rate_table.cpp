#include "mattisglass/rate_table.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace mattis {

std::string format_full(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double RateFunctionTable::min_value() const
{
    double m = std::numeric_limits<double>::infinity();
    for (double v : values)
        if (v < m) m = v;
    return m;
}

void RateFunctionTable::shift_min_to_zero()
{
    const double m = min_value();
    if (!std::isfinite(m)) return;
    for (double& v : values)
        if (std::isfinite(v)) v -= m;
}

void RateFunctionTable::write_csv(std::ostream& out) const
{
    for (int j = 1; j <= dim; ++j) out << "m_" << j << ",";
    out << "value\n";
    for (size_t i = 0; i < points.size(); ++i) {
        for (double c : points[i]) out << format_full(c) << ",";
        out << format_full(values[i]) << "\n";
    }
}

nlohmann::json RateFunctionTable::to_json() const
{
    nlohmann::json j;
    j["dim"] = dim;
    j["metadata"] = metadata;
    nlohmann::json rows = nlohmann::json::array();
    for (size_t i = 0; i < points.size(); ++i) {
        nlohmann::json row;
        row["m"] = points[i];
        if (std::isinf(values[i]))
            row["value"] = "inf";
        else
            row["value"] = values[i];
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

}  // namespace mattis
