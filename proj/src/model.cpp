#include "mattisglass/model.hpp"

#include <algorithm>
#include <cmath>

namespace mattis {

Mixture Mixture::scalar(std::vector<double> betas)
{
    Mixture m;
    m.kind_ = MixtureKind::scalar_mixture;
    m.dim_ = 1;
    m.betas_ = std::move(betas);
    bool any = false;
    for (double b : m.betas_) {
        if (b < 0.0) throw SpecError("mixture: beta_p must be nonnegative");
        if (b > 0.0) any = true;
    }
    if (!any) throw SpecError("mixture: at least one beta_p must be positive");
    return m;
}

Mixture Mixture::quadratic(int dim, double beta)
{
    if (dim < 1) throw SpecError("mixture: dimension must be >= 1");
    if (beta <= 0.0) throw SpecError("mixture: beta must be positive");
    Mixture m;
    m.kind_ = MixtureKind::quadratic_matrix;
    m.dim_ = dim;
    m.betas_ = {beta};
    return m;
}

double Mixture::value(const SymMat& a) const
{
    if (kind_ == MixtureKind::quadratic_matrix) {
        const double b = betas_[0];
        return b * b * a.dot(a);
    }
    const double x = a(0, 0);
    double v = 0.0, xp = x;
    for (double b : betas_) {
        v += b * b * xp;
        xp *= x;
    }
    return v;
}

SymMat Mixture::grad(const SymMat& a) const
{
    if (kind_ == MixtureKind::quadratic_matrix) {
        const double b = betas_[0];
        return a * (2.0 * b * b);
    }
    const double x = a(0, 0);
    double g = 0.0, xp = 1.0;
    for (size_t i = 0; i < betas_.size(); ++i) {
        const double p = static_cast<double>(i + 1);
        g += p * betas_[i] * betas_[i] * xp;
        xp *= x;
    }
    return SymMat::scalar(g);
}

double Mixture::theta(const SymMat& a) const { return a.dot(grad(a)) - value(a); }

int Mixture::max_order() const
{
    if (kind_ == MixtureKind::quadratic_matrix) return 2;
    for (int p = static_cast<int>(betas_.size()); p >= 1; --p)
        if (betas_[static_cast<size_t>(p) - 1] > 0.0) return p;
    return 0;
}

double SpinPrior::mass() const
{
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

void SpinMap::eval(std::span<const double> tau, std::span<const double> chi, std::span<double> out) const
{
    std::vector<double> vars(tau.size() + chi.size());
    std::copy(tau.begin(), tau.end(), vars.begin());
    std::copy(chi.begin(), chi.end(), vars.begin() + static_cast<std::ptrdiff_t>(tau.size()));
    for (size_t j = 0; j < components.size(); ++j) out[j] = components[j].eval(vars);
}

StepPath::StepPath(int dim, std::vector<double> zetas, std::vector<SymMat> values)
    : dim_(dim), zetas_(std::move(zetas)), values_(std::move(values))
{
    if (values_.size() != zetas_.size() + 1) throw SpecError("path: need one more value than jump locations");
    for (const SymMat& v : values_)
        if (v.dim() != dim_) throw SpecError("path: value dimension mismatch");
}

SymMat StepPath::at(double s) const
{
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("path evaluation outside [0,1]");
    size_t l = 0;
    while (l < zetas_.size() && s >= zetas_[l]) ++l;
    return values_[l];
}

void StepPath::check_monotone(const std::string& context) const
{
    for (size_t l = 0; l < zetas_.size(); ++l) {
        if (!(zetas_[l] > 0.0 && zetas_[l] < 1.0))
            throw SpecError(context + ": jump location zeta_" + std::to_string(l + 1) + " outside (0,1)");
        if (l > 0 && !(zetas_[l] > zetas_[l - 1]))
            throw SpecError(context + ": jump locations not strictly increasing");
    }
    if (min_eigenvalue(values_[0]) < -kPsdTol)
        throw SpecError(context + ": q_0 is not positive semi-definite");
    for (size_t l = 1; l < values_.size(); ++l) {
        if (min_eigenvalue(values_[l] - values_[l - 1]) < -kPsdTol)
            throw SpecError(context + ": non-monotone increment at level " + std::to_string(l));
    }
}

std::vector<std::string> h_variable_names(int spin_dim, int chi_dim)
{
    std::vector<std::string> v;
    for (int i = 1; i <= spin_dim; ++i) {
        v.push_back("tau_" + std::to_string(i));
        v.push_back("tau" + std::to_string(i));
    }
    for (int i = 1; i <= chi_dim; ++i) {
        v.push_back("chi_" + std::to_string(i));
        v.push_back("chi" + std::to_string(i));
    }
    return v;
}

std::vector<std::string> g_variable_names(int mag_dim)
{
    std::vector<std::string> v;
    for (int i = 1; i <= mag_dim; ++i) {
        v.push_back("m_" + std::to_string(i));
        v.push_back("m" + std::to_string(i));
    }
    return v;
}

namespace {

// h / G expressions declare aliased variable names (tau_1 and tau1 both bind
// component 1); expand a coordinate vector onto that doubled layout
std::vector<double> doubled(std::span<const double> a, std::span<const double> b = {})
{
    std::vector<double> v;
    v.reserve(2 * (a.size() + b.size()));
    for (double x : a) {
        v.push_back(x);
        v.push_back(x);
    }
    for (double x : b) {
        v.push_back(x);
        v.push_back(x);
    }
    return v;
}

}  // namespace

ModelSpec validate_spec(ModelSpec spec)
{
    if (spec.spin_dim < 1 || spec.mag_dim < 1 || spec.chi_dim < 1)
        throw SpecError("dimensions D, d, L must all be >= 1");
    if (spec.t < 0.0) throw SpecError("interpolation time t must be nonnegative");

    if (spec.xi.dim() != spec.spin_dim) throw SpecError("mixture dimension does not match D");
    if (spec.xi.kind() == MixtureKind::scalar_mixture && spec.spin_dim != 1)
        throw SpecError("scalar-mixture xi requires D = 1");

    // prior: unit-ball support, positive weights, spanning R^D
    const int D = spec.spin_dim;
    if (spec.prior.dim != D) throw SpecError("prior dimension does not match D");
    if (spec.prior.support.empty()) throw SpecError("prior support is empty");
    if (spec.prior.support.size() != spec.prior.weights.size())
        throw SpecError("prior: support and weight counts differ");
    SymMat gram(D);
    for (size_t i = 0; i < spec.prior.support.size(); ++i) {
        const auto& tau = spec.prior.support[i];
        if (static_cast<int>(tau.size()) != D) throw SpecError("prior: support vector dimension mismatch");
        double n2 = 0.0;
        for (double x : tau) n2 += x * x;
        if (n2 > 1.0 + 1e-12) throw SpecError("prior: support vector outside the unit ball");
        if (!(spec.prior.weights[i] > 0.0)) throw SpecError("prior: weights must be strictly positive");
        gram.add_outer(tau);
    }
    if (min_eigenvalue(gram) <= 1e-12)
        throw SpecError("prior: support does not span R^" + std::to_string(D));
    spec.prior_mass = spec.prior.mass();

    const int L = spec.chi_dim;
    if (spec.chi_law.dim != L) throw SpecError("disorder law dimension does not match L");
    if (spec.chi_law.support.empty()) throw SpecError("disorder law support is empty");
    if (spec.chi_law.support.size() != spec.chi_law.probs.size())
        throw SpecError("disorder law: support and probability counts differ");
    double psum = 0.0;
    for (size_t i = 0; i < spec.chi_law.probs.size(); ++i) {
        if (static_cast<int>(spec.chi_law.support[i].size()) != L)
            throw SpecError("disorder law: support vector dimension mismatch");
        if (spec.chi_law.probs[i] < 0.0) throw SpecError("disorder law: negative probability");
        psum += spec.chi_law.probs[i];
    }
    if (std::abs(psum - 1.0) > 1e-12) throw SpecError("disorder law: probabilities do not sum to 1");

    if (static_cast<int>(spec.h.components.size()) != spec.mag_dim)
        throw SpecError("h: component count does not match d");
    spec.h.out_dim = spec.mag_dim;

    // L_h and the h table over the product support
    spec.h_table.assign(spec.chi_law.support.size(), {});
    double l_h = 0.0;
    for (size_t c = 0; c < spec.chi_law.support.size(); ++c) {
        spec.h_table[c].assign(spec.prior.support.size(), std::vector<double>(spec.mag_dim));
        for (size_t s = 0; s < spec.prior.support.size(); ++s) {
            const std::vector<double> vars = doubled(spec.prior.support[s], spec.chi_law.support[c]);
            double n2 = 0.0;
            for (int j = 0; j < spec.mag_dim; ++j) {
                const double v = spec.h.components[static_cast<size_t>(j)].eval(vars);
                if (!std::isfinite(v)) throw SpecError("h: non-finite value on the product support");
                spec.h_table[c][s][static_cast<size_t>(j)] = v;
                n2 += v * v;
            }
            l_h = std::max(l_h, std::sqrt(n2));
        }
    }
    spec.h_bound = l_h;

    // G must stay finite on the closed ball |m| <= L_h; sampled check
    if (spec.mattis_g.empty()) throw SpecError("G: missing expression");
    {
        std::vector<double> m(spec.mag_dim, 0.0);
        auto check = [&](std::span<const double> point) {
            const double v = spec.mattis_g.eval(doubled(point));
            if (!std::isfinite(v)) throw SpecError("G: non-finite value inside |m| <= L_h");
        };
        check(m);
        // axis endpoints and a deterministic spread of interior points
        for (int j = 0; j < spec.mag_dim; ++j) {
            for (double s : {-1.0, -0.5, 0.5, 1.0}) {
                std::fill(m.begin(), m.end(), 0.0);
                m[static_cast<size_t>(j)] = s * l_h;
                check(m);
            }
        }
        std::uint64_t state = 0x93c467e37db0c7a4ULL;
        for (int it = 0; it < 64; ++it) {
            double n2 = 0.0;
            for (int j = 0; j < spec.mag_dim; ++j) {
                state = state * 6364136223846793005ULL + 1442695040888963407ULL;
                m[static_cast<size_t>(j)] = 2.0 * (static_cast<double>(state >> 11) * 0x1.0p-53) - 1.0;
                n2 += m[static_cast<size_t>(j)] * m[static_cast<size_t>(j)];
            }
            const double scale = n2 > 1.0 ? l_h / std::sqrt(n2) : l_h;
            for (double& x : m) x *= scale;
            check(m);
        }
    }

    if (spec.q.dim() == 0) spec.q = StepPath::zero(D);
    if (spec.q.dim() != D) throw SpecError("base path q: dimension does not match D");
    spec.q.check_monotone("base path q");

    spec.validated = true;
    return spec;
}

}  // namespace mattis
