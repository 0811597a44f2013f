#pragma once

#include <span>
#include <vector>

namespace mattis {

// Gauss-Hermite rule normalized against the standard normal:
// sum_i w_i f(x_i) ~ E f(Z) with Z ~ N(0,1), so sum w = 1, odd moments vanish
// (nodes are symmetrized in pairs) and sum w x^2 = 1 up to round-off.
class GaussHermite {
public:
    explicit GaussHermite(int n);

    int size() const { return static_cast<int>(nodes_.size()); }
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace mattis
