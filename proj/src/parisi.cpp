#include "mattisglass/parisi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mattis {

namespace {

struct TerminalTable {
    // per prior atom: log w_tau - (1/2) q1.(tau tau^T) + x.h(tau, chi)
    std::vector<double> offset;
    // support vectors, flattened D per atom
    std::vector<double> tau;
    int dim;

    double eval(std::span<const double> y) const
    {
        const size_t count = offset.size();
        double best = -std::numeric_limits<double>::infinity();
        double acc = 0.0;
        for (size_t s = 0; s < count; ++s) {
            double e = offset[s];
            const double* tp = tau.data() + s * static_cast<size_t>(dim);
            for (int i = 0; i < dim; ++i) e += y[static_cast<size_t>(i)] * tp[i];
            if (e <= best) {
                acc += std::exp(e - best);
            } else {
                acc = acc * std::exp(best - e) + 1.0;
                best = e;
            }
        }
        return best + std::log(acc);
    }
};

TerminalTable make_terminal_table(int chi_idx, std::span<const double> x, const SymMat& q1,
                                  const ModelSpec& spec)
{
    TerminalTable t;
    const int D = spec.spin_dim;
    t.dim = D;
    const size_t count = spec.prior.support.size();
    t.offset.resize(count);
    t.tau.resize(count * static_cast<size_t>(D));
    for (size_t s = 0; s < count; ++s) {
        const auto& tau = spec.prior.support[s];
        double quad_term = 0.0;
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j)
                quad_term += q1(i, j) * tau[static_cast<size_t>(i)] * tau[static_cast<size_t>(j)];
        double tilt = 0.0;
        const auto hv = spec.h_at(static_cast<int>(s), chi_idx);
        for (size_t j = 0; j < x.size(); ++j) tilt += x[j] * hv[j];
        t.offset[s] = std::log(spec.prior.weights[s]) - 0.5 * quad_term + tilt;
        std::copy(tau.begin(), tau.end(), t.tau.begin() + static_cast<std::ptrdiff_t>(s * static_cast<size_t>(D)));
    }
    return t;
}

struct CascadeLevel {
    double zeta = 0.0;                        // tilt; 0 marks the plainly averaged base level
    std::vector<double> log_node_weight;      // per quadrature node
    std::vector<std::vector<double>> factor;  // covariance factor columns, possibly empty
};

struct CascadeContext {
    const std::vector<CascadeLevel>* levels;
    const TerminalTable* terminal;
    const GaussHermite* quad;
    int dim;
    std::vector<double> workspace;  // one y-vector per level

    std::span<double> y_at(size_t level)
    {
        return {workspace.data() + level * static_cast<size_t>(dim), static_cast<size_t>(dim)};
    }
};

// A_level evaluated at the field stored in the level's workspace slot
double cascade_value(CascadeContext& ctx, size_t level)
{
    const auto& levels = *ctx.levels;
    if (level == levels.size()) return ctx.terminal->eval(ctx.y_at(level));

    const CascadeLevel& lv = levels[level];
    const int rank = static_cast<int>(lv.factor.size());
    const auto y = ctx.y_at(level);
    const auto shifted = ctx.y_at(level + 1);

    if (rank == 0) {
        std::copy(y.begin(), y.end(), shifted.begin());
        return cascade_value(ctx, level + 1);
    }

    const int n = ctx.quad->size();
    const auto nodes = ctx.quad->nodes();
    const int dim = ctx.dim;

    int idx[8] = {0};  // odometer over the tensorized rank-dimensional rule; rank <= D <= 4
    const bool plain = lv.zeta == 0.0;
    double best = -std::numeric_limits<double>::infinity();
    double acc = 0.0;

    while (true) {
        double lw = 0.0;
        std::copy(y.begin(), y.end(), shifted.begin());
        for (int r = 0; r < rank; ++r) {
            const double node = nodes[static_cast<size_t>(idx[r])];
            lw += lv.log_node_weight[static_cast<size_t>(idx[r])];
            const auto& col = lv.factor[static_cast<size_t>(r)];
            for (int i = 0; i < dim; ++i) shifted[static_cast<size_t>(i)] += node * col[static_cast<size_t>(i)];
        }
        const double a = cascade_value(ctx, level + 1);

        if (plain) {
            acc += std::exp(lw) * a;
        } else {
            const double e = lw + lv.zeta * a;
            if (e <= best) {
                acc += std::exp(e - best);
            } else {
                acc = acc * std::exp(best - e) + 1.0;
                best = e;
            }
        }

        int r = 0;
        while (r < rank) {
            if (++idx[r] < n) break;
            idx[r] = 0;
            ++r;
        }
        if (r == rank) break;
    }

    return plain ? acc : (best + std::log(acc)) / lv.zeta;
}

}  // namespace

double terminal_condition(std::span<const double> y, int chi_idx, std::span<const double> x,
                          const SymMat& q1, const ModelSpec& spec)
{
    return make_terminal_table(chi_idx, x, q1, spec).eval(y);
}

double psi_eval(const StepPath& path, std::span<const double> x, const ModelSpec& spec,
                const GaussHermite& quad)
{
    if (!spec.validated) throw SpecError("psi_eval: spec not validated");
    if (path.dim() != spec.spin_dim) throw SpecError("psi_eval: path dimension mismatch");
    if (quad.size() < 2) throw std::invalid_argument("psi_eval: quadrature node count must be >= 2");
    path.check_monotone("psi path");

    const int k = path.jump_count();

    std::vector<CascadeLevel> levels;
    levels.reserve(static_cast<size_t>(k) + 1);
    std::vector<double> logw(static_cast<size_t>(quad.size()));
    for (int i = 0; i < quad.size(); ++i) logw[static_cast<size_t>(i)] = std::log(quad.weights()[static_cast<size_t>(i)]);
    {
        CascadeLevel base;
        base.zeta = 0.0;
        base.factor = gaussian_factor(path.value(0));
        base.log_node_weight = logw;
        levels.push_back(std::move(base));
    }
    for (int l = 1; l <= k; ++l) {
        CascadeLevel lv;
        lv.zeta = path.zeta(l);
        lv.factor = gaussian_factor(path.value(l) - path.value(l - 1));
        lv.log_node_weight = logw;
        levels.push_back(std::move(lv));
    }
    const SymMat& q1 = path.value(k);

    CascadeContext ctx;
    ctx.levels = &levels;
    ctx.quad = &quad;
    ctx.dim = spec.spin_dim;
    ctx.workspace.assign((levels.size() + 1) * static_cast<size_t>(spec.spin_dim), 0.0);

    double psi = 0.0;
    for (size_t c = 0; c < spec.chi_law.support.size(); ++c) {
        const double prob = spec.chi_law.probs[c];
        if (prob == 0.0) continue;
        const TerminalTable terminal = make_terminal_table(static_cast<int>(c), x, q1, spec);
        ctx.terminal = &terminal;
        std::fill(ctx.workspace.begin(), ctx.workspace.end(), 0.0);
        psi -= prob * cascade_value(ctx, 0);
    }
    return psi;
}

StepPath effective_path(const StepPath& q, double t, const Mixture& xi, const StepPath& p)
{
    if (q.dim() != p.dim()) throw SpecError("effective_path: dimension mismatch");
    q.check_monotone("effective_path q");
    p.check_monotone("effective_path p");

    std::vector<double> zetas(q.zetas());
    zetas.insert(zetas.end(), p.zetas().begin(), p.zetas().end());
    std::sort(zetas.begin(), zetas.end());
    zetas.erase(std::unique(zetas.begin(), zetas.end()), zetas.end());

    std::vector<SymMat> values;
    values.reserve(zetas.size() + 1);
    auto combined = [&](double s) { return q.at(s) + xi.grad(p.at(s)) * t; };
    values.push_back(combined(0.0));
    for (double z : zetas) values.push_back(combined(z));

    StepPath merged(q.dim(), std::move(zetas), std::move(values));
    merged.check_monotone("effective_path result");
    return merged;
}

double parisi_functional(const StepPath& p, std::span<const double> x, const ModelSpec& spec,
                         const GaussHermite& quad)
{
    const StepPath eff = effective_path(spec.q, spec.t, spec.xi, p);
    double theta_integral = 0.0;
    const int k = p.jump_count();
    for (int l = 0; l <= k; ++l) {
        const double lo = l == 0 ? 0.0 : p.zeta(l);
        const double hi = l == k ? 1.0 : p.zeta(l + 1);
        theta_integral += (hi - lo) * spec.xi.theta(p.value(l));
    }
    return psi_eval(eff, x, spec, quad) - spec.t * theta_integral;
}

}  // namespace mattis
