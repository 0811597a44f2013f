#include "mattisglass/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <thread>

#include "mattisglass/oracle.hpp"
#include "mattisglass/rng.hpp"
#include "mattisglass/spec_io.hpp"
#include "mattisglass/variational.hpp"

namespace mattis {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int worker_count()
{
    if (const char* env = std::getenv("MATTISGLASS_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Work items are independent and write only their own slot, so the split is
// free to vary; all reductions happen afterwards in index order.
void parallel_for(int count, const std::function<void(int)>& fn)
{
    const int workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= count) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

std::uint64_t sample_seed(std::uint64_t base, int n, int index)
{
    return detail::splitmix64(base + 0x9e37u) ^ (static_cast<std::uint64_t>(n) << 32) ^
           static_cast<std::uint64_t>(index);
}

// Gauss-Legendre on [-1, 1] by Newton iteration; the independent quadrature
// used to cross-check the cascade recursion.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(static_cast<size_t>(n), 0.0);
    w.assign(static_cast<size_t>(n), 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<size_t>(i)] = -z;
        x[static_cast<size_t>(n) - 1 - i] = z;
        w[static_cast<size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<size_t>(n) - 1 - i] = w[static_cast<size_t>(i)];
    }
}

// E f(g) under the standard normal via 256-node Gauss-Legendre on [-12, 12]
double normal_expectation_gl(const std::function<double(double)>& f)
{
    static std::vector<double> x, w;
    if (x.empty()) gauss_legendre(256, x, w);
    const double a = -12.0, b = 12.0;
    const double halfw = 0.5 * (b - a);
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double z = 0.5 * (a + b) + halfw * x[i];
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
        acc += w[i] * halfw * pdf * f(z);
    }
    return acc;
}

struct Suite {
    const VerifyOptions& opts;
    std::vector<CheckResult> results;

    double tol(const std::string& name, double fallback) const
    {
        auto it = opts.tolerance_override.find(name);
        return it != opts.tolerance_override.end() ? it->second : fallback;
    }

    bool selected(const std::string& name) const
    {
        return opts.only.empty() || name.find(opts.only) != std::string::npos;
    }

    void log(const std::string& line) const
    {
        if (opts.progress) (*opts.progress) << line << "\n" << std::flush;
    }

    void push(CheckResult r)
    {
        log(std::string(r.pass ? "[PASS] " : "[FAIL] ") + r.name + ": measured=" + format_full(r.measured) +
            " tolerance=" + format_full(r.tolerance) + " (" + format_full(r.seconds) + " s)" +
            (r.note.empty() ? "" : " | " + r.note));
        results.push_back(std::move(r));
    }
};

StepPath constant_path1(double v) { return StepPath::constant(SymMat::scalar(v)); }

// duplicate-value jump insertion at location z
StepPath refine_path(const StepPath& p, double z)
{
    std::vector<double> zetas = p.zetas();
    std::vector<SymMat> values = p.values();
    size_t pos = 0;
    while (pos < zetas.size() && zetas[pos] < z) ++pos;
    if (pos < zetas.size() && zetas[pos] == z) z = 0.5 * (z + (pos > 0 ? zetas[pos - 1] : 0.0));
    zetas.insert(zetas.begin() + static_cast<std::ptrdiff_t>(pos), z);
    values.insert(values.begin() + static_cast<std::ptrdiff_t>(pos) + 1, p.at(z));
    return StepPath(p.dim(), std::move(zetas), std::move(values));
}

}  // namespace

std::string builtin_spec_basic(double beta)
{
    nlohmann::json j = nlohmann::json::parse(R"({
      "D":1,"d":1,"L":1,
      "xi":{"kind":"scalar-mixture","betas":[0.0,1.0]},
      "prior":{"support":[[-1.0],[1.0]],"weights":[0.5,0.5]},
      "chi":{"support":[[-1.0],[1.0]],"probs":[0.5,0.5]},
      "h":["tau_1*chi_1"],
      "G":"m_1^2",
      "t":0.0,
      "q":{"zetas":[],"values":[[0.0]]}
    })");
    j["t"] = 0.5 * beta * beta;
    return j.dump();
}

std::string builtin_spec_ising_field()
{
    return R"({
      "D":1,"d":1,"L":1,
      "xi":{"kind":"scalar-mixture","betas":[0.0,1.0]},
      "prior":{"support":[[-1.0],[1.0]],"weights":[0.5,0.5]},
      "chi":{"support":[[1.0]],"probs":[1.0]},
      "h":["tau_1"],
      "G":"m_1^2",
      "t":0.02,
      "q":{"zetas":[],"values":[[0.0]]}
    })";
}

std::string builtin_spec_mixture3()
{
    return R"({
      "D":1,"d":1,"L":1,
      "xi":{"kind":"scalar-mixture","betas":[0.3,0.4,0.2]},
      "prior":{"support":[[-1.0],[0.2],[1.0]],"weights":[0.3,0.45,0.25]},
      "chi":{"support":[[-1.0],[1.0]],"probs":[0.5,0.5]},
      "h":["tau_1*chi_1"],
      "G":"m_1^2",
      "t":0.5,
      "q":{"zetas":[],"values":[[0.0]]}
    })";
}

std::string builtin_spec_vector_d2()
{
    return R"({
      "D":2,"d":1,"L":1,
      "xi":{"kind":"quadratic-matrix","betas":[0.4]},
      "prior":{"support":[[1.0,0.0],[-1.0,0.0],[0.0,1.0],[0.0,-1.0]],"weights":[0.25,0.25,0.25,0.25]},
      "chi":{"support":[[1.0]],"probs":[1.0]},
      "h":["0.5*tau_1 + 0.5*tau_2"],
      "G":"m_1^2",
      "t":0.3,
      "q":{"zetas":[],"values":[[0.0,0.0,0.0,0.0]]}
    })";
}

std::vector<CheckResult> run_acceptance(const VerifyOptions& opts)
{
    Suite suite{opts, {}};
    const GaussHermite quad32(32);

    const ModelSpec spec_field = spec_from_json(nlohmann::json::parse(builtin_spec_ising_field()));
    const ModelSpec spec02 = spec_from_json(nlohmann::json::parse(builtin_spec_basic(0.2)));
    const ModelSpec spec03 = spec_from_json(nlohmann::json::parse(builtin_spec_basic(0.3)));
    const ModelSpec spec_mix = spec_from_json(nlohmann::json::parse(builtin_spec_mixture3()));
    const ModelSpec spec_d2 = spec_from_json(nlohmann::json::parse(builtin_spec_vector_d2()));

    // 1. psi closed-form equivalence at k = 0
    if (suite.selected("psi_closed_form")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "psi_closed_form";
        r.tolerance = suite.tol(r.name, 1e-8);
        const GaussHermite quad128(128);
        double worst = 0.0;
        for (double qbar : {0.25, 1.0, 2.0}) {
            for (double x : {0.0, 0.5, -0.5}) {
                const double got = psi_eval(constant_path1(qbar), std::span<const double>(&x, 1),
                                            spec_field, quad128);
                const double sq = std::sqrt(qbar);
                const double want =
                    0.5 * qbar - normal_expectation_gl([&](double g) { return std::log(std::cosh(sq * g + x)); });
                worst = std::max(worst, std::abs(got - want) / std::max(1e-12, std::abs(want)));
            }
        }
        r.measured = worst;
        r.seconds = elapsed_seconds(start);
        r.pass = worst <= r.tolerance && r.seconds < 1.0;
        r.note = "9 (qbar, x) pairs vs 256-node Gauss-Legendre oracle; runtime limit 1 s";
        suite.push(std::move(r));
    }

    // 2. path-refinement invariance
    if (suite.selected("path_refinement")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "path_refinement";
        r.tolerance = suite.tol(r.name, 1e-9);
        RngStream rng(opts.seed, RngPurpose::test, 2);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const int k = trial % 3;
            std::vector<double> zetas;
            double z = 0.0;
            for (int l = 0; l < k; ++l) {
                z += rng.uniform(0.08, 0.4);
                zetas.push_back(std::min(z, 0.95));
            }
            std::vector<SymMat> values;
            double level = rng.uniform(0.0, 0.5);
            values.push_back(SymMat::scalar(level));
            for (int l = 0; l < k; ++l) {
                level += rng.uniform(0.0, 0.5);
                values.push_back(SymMat::scalar(level));
            }
            StepPath path(1, zetas, values);
            const double x = rng.uniform(-1.0, 1.0);
            const StepPath refined = refine_path(path, rng.uniform(0.1, 0.9));
            const double a = psi_eval(path, std::span<const double>(&x, 1), spec02, quad32);
            const double b = psi_eval(refined, std::span<const double>(&x, 1), spec02, quad32);
            worst = std::max(worst, std::abs(a - b));
        }
        r.measured = worst;
        r.seconds = elapsed_seconds(start);
        r.pass = worst <= r.tolerance;
        r.note = "20 random monotone paths, duplicate-value jump insertion";
        suite.push(std::move(r));
    }

    // 3. psi(0; 0) = 0 for probability-normalized priors
    if (suite.selected("psi_zero")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "psi_zero";
        r.tolerance = suite.tol(r.name, 1e-12);
        double worst = 0.0;
        for (const ModelSpec* s : {&spec02, &spec03, &spec_field, &spec_mix, &spec_d2}) {
            const std::vector<double> x(static_cast<size_t>(s->mag_dim), 0.0);
            worst = std::max(worst, std::abs(psi_eval(StepPath::zero(s->spin_dim), x, *s, quad32)));
        }
        r.measured = worst;
        r.seconds = elapsed_seconds(start);
        r.pass = worst <= r.tolerance;
        r.note = "all built-in specs";
        suite.push(std::move(r));
    }

    // 4. Lambda_N identity against free-energy differences
    if (suite.selected("lambda_identity")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "lambda_identity";
        r.tolerance = suite.tol(r.name, 1e-12);
        double worst = 0.0;
        for (int sd = 0; sd < 5; ++sd) {
            const DisorderSample sample = sample_disorder(spec02, 12, sample_seed(opts.seed, 12, sd));
            const double f0 = finite_free_energy(spec02, sample, GOverride::zero());
            for (double y : {0.0, 0.5, -0.5, 1.0, -1.0}) {
                const double lam = lambda_n(spec02, sample, std::span<const double>(&y, 1));
                const double fy = finite_free_energy(spec02, sample, GOverride::linear({y}));
                worst = std::max(worst, std::abs(lam + fy - f0));
            }
        }
        r.measured = worst;
        r.seconds = elapsed_seconds(start);
        r.pass = worst <= r.tolerance;
        r.note = "N = 12, y in {0, +-0.5, +-1}, 5 disorder seeds";
        suite.push(std::move(r));
    }

    // 5. Lambda_N convexity on a y-grid
    if (suite.selected("lambda_convexity")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "lambda_convexity";
        r.tolerance = suite.tol(r.name, -1e-9);
        const DisorderSample sample = sample_disorder(spec02, 12, sample_seed(opts.seed, 12, 99));
        EnumerationOptions eopts;
        for (int i = 0; i < 33; ++i) eopts.tilt_y.push_back({-2.0 + 4.0 * i / 32.0});
        const EnumerationResult er = enumerate_gibbs(spec02, sample, GOverride::zero(), eopts);
        std::vector<double> lam(33);
        for (int i = 0; i < 33; ++i) lam[static_cast<size_t>(i)] = (er.tilt_log_z[static_cast<size_t>(i)] - er.log_z) / 12.0;
        double min_d2 = std::numeric_limits<double>::infinity();
        for (int i = 1; i + 1 < 33; ++i)
            min_d2 = std::min(min_d2, lam[static_cast<size_t>(i) + 1] - 2.0 * lam[static_cast<size_t>(i)] +
                                          lam[static_cast<size_t>(i) - 1]);
        r.measured = min_d2;
        r.seconds = elapsed_seconds(start);
        r.pass = min_d2 >= r.tolerance;
        r.note = "33-point y-grid on [-2, 2], N = 12; pass when min second difference >= tolerance";
        suite.push(std::move(r));
    }

    PhiOptions phi_opts02;
    phi_opts02.k = 1;
    phi_opts02.seed = opts.seed;
    PhiEvaluator eval02(spec02, phi_opts02);

    // 6. phi regularity (Lipschitz / concavity / differentiability proxy)
    if (suite.selected("phi_properties")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "phi_properties";
        r.tolerance = suite.tol(r.name, spec02.h_bound + 1e-6);
        const PhiPropertyReport rep = check_phi_properties(eval02, 50, 2.0, 5, 3, opts.seed);
        bool ratios_ok = true;
        std::string ratio_note = "gap ratios:";
        for (size_t i = 0; i < rep.quotient_ratios.size(); ++i) {
            ratio_note += " " + format_full(rep.quotient_ratios[i]);
            if (!(rep.quotient_ratios[i] <= 0.75 || rep.quotient_gaps[i + 1] <= 1e-6)) ratios_ok = false;
        }
        r.measured = rep.lipschitz_max_ratio;
        r.seconds = elapsed_seconds(start);
        const bool lip_ok = rep.lipschitz_max_ratio <= r.tolerance;
        const bool defect_ok = rep.min_midpoint_defect >= -5e-4;
        r.pass = lip_ok && defect_ok && ratios_ok && r.seconds <= 600.0;
        r.note = "min midpoint defect=" + format_full(rep.min_midpoint_defect) + "; " + ratio_note +
                 "; runtime limit 600 s";
        suite.push(std::move(r));
    }

    DualOptions dual_opts;
    ConjugateTable conj02;
    bool have_conj02 = false;
    auto ensure_conj02 = [&]() -> const ConjugateTable& {
        if (!have_conj02) {
            conj02 = build_conjugate(eval02, uniform_grid(1, -spec02.h_bound, spec02.h_bound, 129),
                                     dual_opts);
            have_conj02 = true;
        }
        return conj02;
    };

    // 7. Fenchel biconjugation identity
    if (suite.selected("fenchel_identity")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "fenchel_identity";
        r.tolerance = suite.tol(r.name, 1e-3);
        const ConjugateTable& conj = ensure_conj02();
        double min_star = std::numeric_limits<double>::infinity();
        for (double v : conj.values) min_star = std::min(min_star, v);
        r.measured = std::abs(min_star - conj.phi_at_zero);
        r.seconds = elapsed_seconds(start);
        r.pass = r.measured <= r.tolerance;
        r.note = "inf_grid phi* = " + format_full(min_star) + ", phi(0) = " + format_full(conj.phi_at_zero);
        suite.push(std::move(r));
    }

    auto g_square = [](std::span<const double> m) { return m[0] * m[0]; };

    // 8. finite-size free-energy convergence to the variational limit
    if (suite.selected("free_energy_convergence")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "free_energy_convergence";
        r.tolerance = suite.tol(r.name, 0.05);
        PhiOptions phi_opts03 = phi_opts02;
        PhiEvaluator eval03(spec03, phi_opts03);
        const std::vector<std::vector<double>> grid03 =
            uniform_grid(1, -spec03.h_bound, spec03.h_bound, 129);
        const ConjugateTable conj03 = build_conjugate(eval03, grid03, dual_opts);
        const LimitFreeEnergy limit =
            limit_free_energy(eval03, conj03, g_square, LimitMethod::reduced, dual_opts);

        std::string note = "limit=" + format_full(limit.value) + "; errors:";
        std::vector<double> errors;
        for (int n : opts.n_list) {
            std::vector<double> f(static_cast<size_t>(opts.samples));
            parallel_for(opts.samples, [&](int i) {
                const DisorderSample sample = sample_disorder(spec03, n, sample_seed(opts.seed, n, i));
                f[static_cast<size_t>(i)] =
                    finite_free_energy(spec03, sample, GOverride::spec_g(), opts.enumeration_budget);
            });
            double mean = 0.0;
            for (double v : f) mean += v;
            mean /= static_cast<double>(opts.samples);
            errors.push_back(std::abs(mean - limit.value));
            note += " N=" + std::to_string(n) + ":" + format_full(errors.back());
        }
        bool decreasing = true;
        for (size_t i = 0; i + 1 < errors.size(); ++i) decreasing = decreasing && errors[i + 1] < errors[i];
        r.measured = errors.back();
        r.seconds = elapsed_seconds(start);
        r.pass = decreasing && errors.back() <= r.tolerance && r.seconds <= 900.0;
        r.note = note + (decreasing ? "; decreasing" : "; NOT decreasing") + "; runtime limit 900 s";
        suite.push(std::move(r));
    }

    // 9. empirical vs variational rate tables at desk scale
    if (suite.selected("ldp_comparison")) {
        const auto start9 = Clock::now();
        CheckResult r9;
        r9.name = "ldp_comparison";
        r9.tolerance = suite.tol(r9.name, 0.1);

        // variational J on the magnetization bin centers
        MagnetizationDistribution proto;
        proto.dim = 1;
        proto.h_bound = spec02.h_bound;
        proto.bins_per_axis = 64;
        std::vector<std::vector<double>> centers;
        for (size_t b = 0; b < 64; ++b) centers.push_back(proto.bin_center(b));
        const ConjugateTable conj_bins = build_conjugate(eval02, centers, dual_opts);
        const RateFunctionTable j_table = rate_function_j_basic(conj_bins, spec02);

        std::vector<double> supdist;
        std::string note = "sup-distance:";
        for (int n : opts.n_list) {
            std::vector<MagnetizationDistribution> dists(static_cast<size_t>(opts.samples));
            parallel_for(opts.samples, [&](int i) {
                const DisorderSample sample = sample_disorder(spec02, n, sample_seed(opts.seed, n, i));
                dists[static_cast<size_t>(i)] =
                    gibbs_magnetization_dist(spec02, sample, opts.enumeration_budget);
            });
            MagnetizationDistribution avg = dists.front();
            for (size_t i = 1; i < dists.size(); ++i)
                for (size_t b = 0; b < avg.mass.size(); ++b) avg.mass[b] += dists[i].mass[b];
            for (double& m : avg.mass) m /= static_cast<double>(opts.samples);
            avg.n_sites = n;
            const RateFunctionTable emp = empirical_rate(avg);

            double sd = 0.0;
            for (size_t b = 0; b < avg.mass.size(); ++b) {
                if (avg.mass[b] <= 0.0) continue;
                sd = std::max(sd, std::abs(emp.values[b] - j_table.values[b]));
            }
            supdist.push_back(sd);
            note += " N=" + std::to_string(n) + ":" + format_full(sd);
        }
        r9.measured = supdist.back();
        r9.seconds = elapsed_seconds(start9);
        r9.pass = supdist.back() <= r9.tolerance && supdist.front() > supdist.back();
        r9.note = note + "; occupied bins only, both rates min-shifted";
        suite.push(std::move(r9));
    }

    // 10. Varadhan consistency at the largest size
    if (suite.selected("varadhan_consistency")) {
        const auto start10 = Clock::now();
        CheckResult r10;
        r10.name = "varadhan_consistency";
        r10.tolerance = suite.tol(r10.name, 0.05);
        const int n = opts.n_list.back();
        std::vector<double> varad(static_cast<size_t>(opts.samples), 0.0);
        parallel_for(opts.samples, [&](int i) {
            const DisorderSample sample = sample_disorder(spec02, n, sample_seed(opts.seed, n, i));
            varad[static_cast<size_t>(i)] = varadhan_lhs(spec02, sample);
        });
        double lhs = 0.0;
        for (double v : varad) lhs += v;
        lhs /= static_cast<double>(opts.samples);
        const ConjugateTable& conj = ensure_conj02();
        double rhs = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < conj.m_points.size(); ++i) {
            if (!std::isfinite(conj.values[i])) continue;
            rhs = std::max(rhs, g_square(conj.m_points[i]) - (conj.values[i] - conj.phi_at_zero));
        }
        r10.measured = std::abs(lhs - rhs);
        r10.seconds = elapsed_seconds(start10);
        r10.pass = r10.measured <= r10.tolerance;
        r10.note = "lhs=" + format_full(lhs) + " rhs=sup{G-I}=" + format_full(rhs) + " at N=" +
                   std::to_string(n);
        suite.push(std::move(r10));
    }

    // 11. Gray-code vs naive enumeration
    if (suite.selected("gray_vs_naive")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "gray_vs_naive";
        r.tolerance = suite.tol(r.name, 1e-12);
        const ModelSpec spec_t0 = [&] {
            nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
            j["t"] = 0.0;
            return spec_from_json(j);
        }();
        struct Case {
            const ModelSpec* spec;
            int n;
        };
        const Case cases[] = {{&spec02, 8}, {&spec_mix, 6}, {&spec_d2, 5}, {&spec_t0, 8}};
        double worst = 0.0;
        for (const Case& c : cases) {
            const DisorderSample sample = sample_disorder(*c.spec, c.n, sample_seed(opts.seed, c.n, 11));
            const double fg = finite_free_energy(*c.spec, sample, GOverride::spec_g());
            const double fn = naive_free_energy(*c.spec, sample, GOverride::spec_g());
            worst = std::max(worst, std::abs(fg - fn));
        }
        r.measured = worst;
        r.seconds = elapsed_seconds(start);
        r.pass = worst <= r.tolerance;
        r.note = "4 specs, N <= 8, log free energy";
        suite.push(std::move(r));
    }

    // 12. disorder covariance vs N xi(sigma sigma'^T / N)
    if (suite.selected("disorder_covariance")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "disorder_covariance";
        r.tolerance = suite.tol(r.name, 3.0);
        const int n = 6;
        const int draws = 200000;
        const int n_pairs = 10;
        RngStream cfg_rng(opts.seed, RngPurpose::test, 12);
        const int support = static_cast<int>(spec_mix.prior.support.size());
        std::vector<std::vector<int>> configs;
        for (int p = 0; p < 2 * n_pairs; ++p) {
            std::vector<int> c(static_cast<size_t>(n));
            for (int& v : c) v = static_cast<int>(cfg_rng.uniform() * support) % support;
            configs.push_back(std::move(c));
        }
        std::vector<double> target(static_cast<size_t>(n_pairs));
        for (int p = 0; p < n_pairs; ++p) {
            double overlap = 0.0;
            for (int i = 0; i < n; ++i)
                overlap += spec_mix.prior.support[static_cast<size_t>(configs[static_cast<size_t>(2 * p)][static_cast<size_t>(i)])][0] *
                           spec_mix.prior.support[static_cast<size_t>(configs[static_cast<size_t>(2 * p + 1)][static_cast<size_t>(i)])][0];
            target[static_cast<size_t>(p)] = n * spec_mix.xi.value(SymMat::scalar(overlap / n));
        }

        const int chunks = 16;
        std::vector<std::vector<double>> sum(static_cast<size_t>(chunks), std::vector<double>(static_cast<size_t>(n_pairs), 0.0));
        std::vector<std::vector<double>> sumsq = sum;
        parallel_for(chunks, [&](int chunk) {
            const int lo = draws * chunk / chunks, hi = draws * (chunk + 1) / chunks;
            std::vector<double> h(configs.size());
            for (int d = lo; d < hi; ++d) {
                const DisorderSample sample = sample_disorder(spec_mix, n, sample_seed(opts.seed ^ 0xC0Fu, n, d));
                for (size_t c = 0; c < configs.size(); ++c) h[c] = hamiltonian_value(sample, spec_mix, configs[c]);
                for (int p = 0; p < n_pairs; ++p) {
                    const double z = h[static_cast<size_t>(2 * p)] * h[static_cast<size_t>(2 * p + 1)];
                    sum[static_cast<size_t>(chunk)][static_cast<size_t>(p)] += z;
                    sumsq[static_cast<size_t>(chunk)][static_cast<size_t>(p)] += z * z;
                }
            }
        });
        double worst_z = 0.0;
        for (int p = 0; p < n_pairs; ++p) {
            double s = 0.0, s2 = 0.0;
            for (int c = 0; c < chunks; ++c) {
                s += sum[static_cast<size_t>(c)][static_cast<size_t>(p)];
                s2 += sumsq[static_cast<size_t>(c)][static_cast<size_t>(p)];
            }
            const double mean = s / draws;
            const double var = std::max(0.0, s2 / draws - mean * mean);
            const double se = std::sqrt(var / draws);
            worst_z = std::max(worst_z, std::abs(mean - target[static_cast<size_t>(p)]) / se);
        }
        r.measured = worst_z;
        r.seconds = elapsed_seconds(start);
        r.pass = worst_z <= r.tolerance;
        r.note = "mixture orders {1,2,3}, N=6, 2e5 draws, 10 fixed pairs; measured = worst z-score";
        suite.push(std::move(r));
    }

    // 13. expression parser: fixed values and round trips
    if (suite.selected("expression_parser")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "expression_parser";
        r.tolerance = suite.tol(r.name, 1e-15);
        const std::vector<std::string> vars = {"a", "b", "c"};
        struct Fixed {
            const char* src;
            double a, b, c, want;
        };
        const Fixed fixed[] = {
            {"1 + 2*3", 0, 0, 0, 7.0},
            {"(1 + 2)*3", 0, 0, 0, 9.0},
            {"2^10", 0, 0, 0, 1024.0},
            {"-2^2", 0, 0, 0, -4.0},
            {"(-2)^2", 0, 0, 0, 4.0},
            {"a^2 + 0.5*b", 2, 4, 0, 6.0},
            {"a*b - c", 3, 5, 7, 8.0},
            {"a/b", 1, 4, 0, 0.25},
            {"abs(-3.5)", 0, 0, 0, 3.5},
            {"cosh(0)", 0, 0, 0, 1.0},
            {"tanh(0)", 0, 0, 0, 0.0},
            {"exp(0)", 0, 0, 0, 1.0},
            {"a - b - c", 10, 3, 2, 5.0},
            {"a - (b - c)", 10, 3, 2, 9.0},
            {"2*a^3", 2, 0, 0, 16.0},
            {"a^0", 5.5, 0, 0, 1.0},
            {"-a + b", 2.5, 4, 0, 1.5},
            {"a*(b + c)^2", 2, 1, 2, 18.0},
            {"a/(b + c)", 9, 1, 3, 2.25},
            {"1/2 + 1/4", 0, 0, 0, 0.75},
        };
        int exact_failures = 0;
        for (const Fixed& f : fixed) {
            const Expression e = Expression::parse(f.src, vars);
            const double got = e.eval(std::vector<double>{f.a, f.b, f.c});
            if (got != f.want) ++exact_failures;
        }

        RngStream rng(opts.seed, RngPurpose::test, 13);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            std::string src;
            std::function<void(int)> build = [&](int depth) {
                const int pick = depth <= 0 ? static_cast<int>(rng.uniform() * 2.0)
                                            : 2 + static_cast<int>(rng.uniform() * 6.0);
                switch (pick) {
                    case 0: {
                        char buf[32];
                        std::snprintf(buf, sizeof buf, "%.6g", rng.uniform(-4.0, 4.0));
                        if (buf[0] == '-') {
                            src += "(";
                            src += buf;
                            src += ")";
                        } else {
                            src += buf;
                        }
                        break;
                    }
                    case 1: src += vars[static_cast<size_t>(rng.uniform() * 3.0) % 3]; break;
                    case 2:
                        src += "(";
                        build(depth - 1);
                        src += " + ";
                        build(depth - 1);
                        src += ")";
                        break;
                    case 3:
                        src += "(";
                        build(depth - 1);
                        src += " - ";
                        build(depth - 1);
                        src += ")";
                        break;
                    case 4:
                        src += "(";
                        build(depth - 1);
                        src += "*";
                        build(depth - 1);
                        src += ")";
                        break;
                    case 5:
                        src += "tanh(";
                        build(depth - 1);
                        src += ")";
                        break;
                    case 6:
                        src += "abs(";
                        build(depth - 1);
                        src += ")";
                        break;
                    default:
                        src += "(";
                        build(depth - 1);
                        src += ")^";
                        src += std::to_string(1 + static_cast<int>(rng.uniform() * 3.0));
                        break;
                }
            };
            build(3);
            const Expression e1 = Expression::parse(src, vars);
            const Expression e2 = Expression::parse(e1.str(), vars);
            const std::vector<double> binding = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
            worst = std::max(worst, std::abs(e1.eval(binding) - e2.eval(binding)));
        }
        r.measured = worst;
        r.seconds = elapsed_seconds(start);
        r.pass = exact_failures == 0 && worst <= r.tolerance;
        r.note = "20 fixed expressions exact (" + std::to_string(exact_failures) +
                 " failures); 100 print/parse round trips";
        suite.push(std::move(r));
    }

    // 14. MCMC stationarity against exact enumeration
    if (suite.selected("mcmc_stationarity")) {
        const auto start = Clock::now();
        CheckResult r;
        r.name = "mcmc_stationarity";
        r.tolerance = suite.tol(r.name, 0.01);
        const DisorderSample sample = sample_disorder(spec02, 3, sample_seed(opts.seed, 3, 14));
        const MagnetizationDistribution exact = gibbs_magnetization_dist(spec02, sample);
        const McmcResult chain = mcmc_sample(spec02, sample, 1000000, 10000, opts.seed + 14);
        r.measured = total_variation(exact, chain.dist);
        r.seconds = elapsed_seconds(start);
        r.pass = r.measured <= r.tolerance;
        r.note = "N=3, 1e6 sweeps, burn-in 1e4; acceptance rate " + format_full(chain.acceptance_rate);
        suite.push(std::move(r));
    }

    return suite.results;
}

nlohmann::json report_to_json(const std::vector<CheckResult>& results)
{
    nlohmann::json checks = nlohmann::json::array();
    bool all = true;
    for (const CheckResult& r : results) {
        checks.push_back({{"check", r.name},
                          {"status", r.pass ? "pass" : "fail"},
                          {"measured", r.measured},
                          {"tolerance", r.tolerance},
                          {"seconds", r.seconds},
                          {"note", r.note}});
        all = all && r.pass;
    }
    return nlohmann::json{{"all_pass", all}, {"checks", checks}};
}

}  // namespace mattis
