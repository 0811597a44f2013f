#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mattis {

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evals = 0;
};

// Standard simplex minimizer (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5). Returns the best point seen, which is never worse than the
// start point. Stops when the simplex value spread drops below ftol or the
// evaluation budget runs out.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> start, double step, double ftol, int max_evals);

}  // namespace mattis
