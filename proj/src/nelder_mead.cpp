#include "mattisglass/nelder_mead.hpp"

#include <algorithm>
#include <cmath>

namespace mattis {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> start, double step, double ftol, int max_evals)
{
    const int n = static_cast<int>(start.size());
    NelderMeadResult res;
    res.x.assign(start.begin(), start.end());

    if (n == 0) {
        res.value = f(start);
        res.evals = 1;
        return res;
    }

    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };

    std::vector<std::vector<double>> simplex(static_cast<size_t>(n) + 1, res.x);
    std::vector<double> value(static_cast<size_t>(n) + 1);
    for (int i = 1; i <= n; ++i) simplex[static_cast<size_t>(i)][static_cast<size_t>(i) - 1] += step;
    for (int i = 0; i <= n; ++i) value[static_cast<size_t>(i)] = eval(simplex[static_cast<size_t>(i)]);

    std::vector<double> centroid(static_cast<size_t>(n)), trial(static_cast<size_t>(n));

    while (evals < max_evals) {
        std::vector<int> order(static_cast<size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) order[static_cast<size_t>(i)] = i;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return value[static_cast<size_t>(a)] < value[static_cast<size_t>(b)]; });
        const int best = order.front(), worst = order.back(), second_worst = order[static_cast<size_t>(n) - 1];

        if (std::abs(value[static_cast<size_t>(worst)] - value[static_cast<size_t>(best)]) <
            ftol * (1.0 + std::abs(value[static_cast<size_t>(best)])))
            break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (int i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (int j = 0; j < n; ++j) centroid[static_cast<size_t>(j)] += simplex[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        for (double& c : centroid) c /= n;

        auto blend = [&](double coef) {
            for (int j = 0; j < n; ++j)
                trial[static_cast<size_t>(j)] =
                    centroid[static_cast<size_t>(j)] +
                    coef * (simplex[static_cast<size_t>(worst)][static_cast<size_t>(j)] - centroid[static_cast<size_t>(j)]);
        };

        blend(-1.0);  // reflect
        const double reflected = eval(trial);
        if (reflected < value[static_cast<size_t>(best)]) {
            const std::vector<double> keep = trial;
            blend(-2.0);  // expand
            const double expanded = eval(trial);
            if (expanded < reflected) {
                simplex[static_cast<size_t>(worst)] = trial;
                value[static_cast<size_t>(worst)] = expanded;
            } else {
                simplex[static_cast<size_t>(worst)] = keep;
                value[static_cast<size_t>(worst)] = reflected;
            }
        } else if (reflected < value[static_cast<size_t>(second_worst)]) {
            simplex[static_cast<size_t>(worst)] = trial;
            value[static_cast<size_t>(worst)] = reflected;
        } else {
            blend(reflected < value[static_cast<size_t>(worst)] ? -0.5 : 0.5);  // contract
            const double contracted = eval(trial);
            if (contracted < std::min(reflected, value[static_cast<size_t>(worst)])) {
                simplex[static_cast<size_t>(worst)] = trial;
                value[static_cast<size_t>(worst)] = contracted;
            } else {
                for (int i = 0; i <= n; ++i) {  // shrink toward best
                    if (i == best) continue;
                    for (int j = 0; j < n; ++j)
                        simplex[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                            0.5 * (simplex[static_cast<size_t>(i)][static_cast<size_t>(j)] +
                                   simplex[static_cast<size_t>(best)][static_cast<size_t>(j)]);
                    value[static_cast<size_t>(i)] = eval(simplex[static_cast<size_t>(i)]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (value[static_cast<size_t>(i)] < value[static_cast<size_t>(best)]) best = i;
    res.x = simplex[static_cast<size_t>(best)];
    res.value = value[static_cast<size_t>(best)];
    res.evals = evals;
    return res;
}

}  // namespace mattis
