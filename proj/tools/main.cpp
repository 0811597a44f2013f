#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mattisglass/oracle.hpp"
#include "mattisglass/spec_io.hpp"
#include "mattisglass/variational.hpp"
#include "mattisglass/verify.hpp"

namespace {

using namespace mattis;

// exit codes: 0 success, 1 check failure, 2 usage or validation error
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
    std::string spec_path;
    std::string out_dir = ".";
    std::string format = "csv";
    int k_rsb = 1;
    int quad_nodes = 32;
    std::uint64_t seed = 1;
    int samples = 50;
    int grid = 129;
    std::string n_list_raw = "10,14,18";
};

std::vector<int> parse_int_list(const std::string& raw)
{
    std::vector<int> out;
    std::string token;
    for (char c : raw + ",") {
        if (c == ',' || c == ';') {
            if (!token.empty()) out.push_back(std::stoi(token));
            token.clear();
        } else {
            token += c;
        }
    }
    return out;
}

// vectors separated by ';', components by ','; bare scalars allowed for d = 1
std::vector<std::vector<double>> parse_x_list(const std::string& raw, int dim)
{
    std::vector<std::vector<double>> out;
    std::vector<double> current;
    std::string token;
    auto flush_token = [&] {
        if (!token.empty()) {
            current.push_back(std::stod(token));
            token.clear();
        }
    };
    for (char c : raw + ";") {
        if (c == ',') {
            flush_token();
        } else if (c == ';') {
            flush_token();
            if (!current.empty()) {
                out.push_back(current);
                current.clear();
            }
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            token += c;
        }
    }
    if (dim == 1 && !out.empty() && out.front().size() > 1) {
        // comma-separated scalars
        std::vector<std::vector<double>> flat;
        for (const auto& v : out)
            for (double x : v) flat.push_back({x});
        out = std::move(flat);
    }
    for (const auto& v : out)
        if (static_cast<int>(v.size()) != dim)
            throw SpecError("x-list entry has " + std::to_string(v.size()) + " components, expected " +
                            std::to_string(dim));
    return out;
}

std::ofstream open_out(const CommonArgs& args, const std::string& name)
{
    std::filesystem::create_directories(args.out_dir);
    const std::string path = args.out_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot write output file: " + path);
    return out;
}

void write_json_file(const CommonArgs& args, const std::string& name, const nlohmann::json& j)
{
    auto out = open_out(args, name);
    out << j.dump(2) << "\n";
}

nlohmann::json table_csv_or_json(const CommonArgs& args, const std::string& stem,
                                 const RateFunctionTable& table)
{
    if (args.format == "json") {
        write_json_file(args, stem + ".json", table.to_json());
    } else {
        auto out = open_out(args, stem + ".csv");
        table.write_csv(out);
        write_json_file(args, stem + ".meta.json", table.metadata);
    }
    return table.metadata;
}

int cmd_psi(const CommonArgs& args, const std::string& x_list_raw)
{
    const ModelSpec spec = load_spec_file(args.spec_path);
    const auto xs = parse_x_list(x_list_raw, spec.mag_dim);
    if (xs.empty()) throw SpecError("psi: empty x-list");
    const GaussHermite quad(args.quad_nodes);

    nlohmann::json meta{{"spec_hash", spec_hash(spec)}, {"quad_nodes", args.quad_nodes},
                        {"path", "spec q"}};
    if (args.format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& x : xs) rows.push_back({{"x", x}, {"psi", psi_eval(spec.q, x, spec, quad)}});
        write_json_file(args, "psi.json", {{"metadata", meta}, {"rows", rows}});
    } else {
        auto out = open_out(args, "psi.csv");
        for (int j = 1; j <= spec.mag_dim; ++j) out << "x_" << j << ",";
        out << "psi\n";
        for (const auto& x : xs) {
            for (double c : x) out << format_full(c) << ",";
            out << format_full(psi_eval(spec.q, x, spec, quad)) << "\n";
        }
        write_json_file(args, "psi.meta.json", meta);
    }
    return kExitOk;
}

int cmd_phi(const CommonArgs& args, const std::string& x_list_raw)
{
    const ModelSpec spec = load_spec_file(args.spec_path);
    const auto xs = parse_x_list(x_list_raw, spec.mag_dim);
    if (xs.empty()) throw SpecError("phi: empty x-list");

    PhiOptions opts;
    opts.k = args.k_rsb;
    opts.quad_nodes = args.quad_nodes;
    opts.seed = args.seed;
    PhiEvaluator phi(spec, opts);

    nlohmann::json meta{{"spec_hash", spec_hash(spec)}, {"k", opts.k}, {"quad_nodes", opts.quad_nodes},
                        {"seed", args.seed}};
    if (args.format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& x : xs) {
            const PhiResult& r = phi.eval(x);
            rows.push_back({{"x", x}, {"phi", r.value}, {"k_used", r.k_used}});
        }
        write_json_file(args, "phi.json", {{"metadata", meta}, {"rows", rows}});
    } else {
        auto out = open_out(args, "phi.csv");
        for (int j = 1; j <= spec.mag_dim; ++j) out << "x_" << j << ",";
        out << "phi,k_used\n";
        for (const auto& x : xs) {
            const PhiResult& r = phi.eval(x);
            for (double c : x) out << format_full(c) << ",";
            out << format_full(r.value) << "," << r.k_used << "\n";
        }
        write_json_file(args, "phi.meta.json", meta);
    }
    return kExitOk;
}

int cmd_rate(const CommonArgs& args, bool basic)
{
    const ModelSpec spec = load_spec_file(args.spec_path);
    if (basic) require_basic_model(spec);
    if (args.grid < 2) throw SpecError("--grid must be >= 2");

    PhiOptions popts;
    popts.k = args.k_rsb;
    popts.quad_nodes = args.quad_nodes;
    popts.seed = args.seed;
    PhiEvaluator phi(spec, popts);
    DualOptions dopts;

    const auto grid = uniform_grid(spec.mag_dim, -spec.h_bound, spec.h_bound, args.grid);
    const ConjugateTable conj = build_conjugate(phi, grid, dopts);

    auto callable = [&phi](std::span<const double> x) { return phi.value(x); };
    auto phistar = [&](std::span<const double> m) {
        return legendre_dual(callable, spec.mag_dim, m, spec.h_bound, dopts).value;
    };
    std::function<double(std::span<const double>)> refiner = phistar;
    std::vector<double> scratch;
    auto g_of_m = [&](std::span<const double> m) {
        return GOverride::spec_g().eval(spec, m, scratch);
    };

    RateFunctionTable table = basic ? rate_function_j_basic(conj, spec)
                                    : rate_function_ig(conj, g_of_m, &refiner);
    table.metadata["spec_hash"] = spec_hash(spec);
    table.metadata["grid_points"] = args.grid;
    table.metadata["grid_step"] = 2.0 * spec.h_bound / (args.grid - 1);
    table.metadata["seed"] = args.seed;
    if (conj.any_boundary_limited)
        std::cerr << "warning: conjugate boundary-limited at the x-box cap for some grid points\n";
    table_csv_or_json(args, "rate", table);
    return kExitOk;
}

int cmd_limit_fe(const CommonArgs& args, const std::string& method)
{
    const ModelSpec spec = load_spec_file(args.spec_path);
    PhiOptions popts;
    popts.k = args.k_rsb;
    popts.quad_nodes = args.quad_nodes;
    popts.seed = args.seed;
    PhiEvaluator phi(spec, popts);
    DualOptions dopts;
    const auto grid = uniform_grid(spec.mag_dim, -spec.h_bound, spec.h_bound, args.grid);
    const ConjugateTable conj = build_conjugate(phi, grid, dopts);
    std::vector<double> scratch;
    auto g_of_m = [&](std::span<const double> m) { return GOverride::spec_g().eval(spec, m, scratch); };

    nlohmann::json j{{"spec_hash", spec_hash(spec)}, {"k", args.k_rsb}, {"method", method}};
    if (method == "reduced" || method == "both") {
        const LimitFreeEnergy r = limit_free_energy(phi, conj, g_of_m, LimitMethod::reduced, dopts);
        j["reduced"] = {{"value", r.value}, {"argmin_m", r.argmin_m}, {"boundary_limited", r.boundary_limited}};
    }
    if (method == "infsup" || method == "both") {
        const LimitFreeEnergy r = limit_free_energy(phi, conj, g_of_m, LimitMethod::infsup, dopts);
        j["infsup"] = {{"value", r.value}, {"argmin_m", r.argmin_m}, {"boundary_limited", r.boundary_limited}};
    }
    write_json_file(args, "limit_fe.json", j);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

void check_enumeration_budget(const ModelSpec& spec, const std::vector<int>& n_list)
{
    if (n_list.empty()) throw SpecError("empty n-list");
    for (int n : n_list) {
        if (n < 1) throw SpecError("N must be >= 1");
        double total = 1.0;
        for (int i = 0; i < n; ++i) total *= static_cast<double>(spec.prior.support.size());
        if (total > static_cast<double>(1ull << 24))
            throw SpecError("N = " + std::to_string(n) + " exceeds the enumeration budget (2^24 configurations)");
    }
}

int cmd_enumerate(const CommonArgs& args)
{
    const ModelSpec spec = load_spec_file(args.spec_path);
    if (args.samples < 1) throw SpecError("--samples must be >= 1");
    const auto n_list = parse_int_list(args.n_list_raw);
    check_enumeration_budget(spec, n_list);

    auto out = open_out(args, "enumerate.csv");
    out << "N,sample,F\n";
    nlohmann::json summary = nlohmann::json::array();
    for (int n : n_list) {
        double mean = 0.0, m2 = 0.0;
        for (int i = 0; i < args.samples; ++i) {
            const DisorderSample sample = sample_disorder(spec, n, args.seed + 1000003ull * i + n);
            const double f = finite_free_energy(spec, sample, GOverride::spec_g());
            out << n << "," << i << "," << format_full(f) << "\n";
            const double delta = f - mean;
            mean += delta / (i + 1);
            m2 += delta * (f - mean);
        }
        const double sd = args.samples > 1 ? std::sqrt(m2 / (args.samples - 1)) : 0.0;
        summary.push_back({{"N", n}, {"mean_F", mean}, {"sd_F", sd}, {"samples", args.samples}});
    }
    write_json_file(args, "enumerate_summary.json",
                    {{"spec_hash", spec_hash(spec)}, {"seed", args.seed}, {"per_n", summary}});
    return kExitOk;
}

int cmd_mcmc(const CommonArgs& args, long long sweeps, long long burn_in)
{
    const ModelSpec spec = load_spec_file(args.spec_path);
    const auto n_list = parse_int_list(args.n_list_raw);
    if (n_list.empty()) throw SpecError("mcmc: empty n-list");
    const int n = n_list.front();

    const DisorderSample sample = sample_disorder(spec, n, args.seed);
    const McmcResult r = mcmc_sample(spec, sample, sweeps, burn_in, args.seed);
    auto out = open_out(args, "mcmc_dist.csv");
    for (int j = 1; j <= spec.mag_dim; ++j) out << "m_" << j << ",";
    out << "mass\n";
    for (size_t b = 0; b < r.dist.mass.size(); ++b) {
        for (double c : r.dist.bin_center(b)) out << format_full(c) << ",";
        out << format_full(r.dist.mass[b]) << "\n";
    }
    write_json_file(args, "mcmc_meta.json",
                    {{"spec_hash", spec_hash(spec)},
                     {"N", n},
                     {"sweeps", sweeps},
                     {"burn_in", burn_in},
                     {"seed", args.seed},
                     {"acceptance_rate", r.acceptance_rate}});
    return kExitOk;
}

int cmd_ldp_compare(const CommonArgs& args, bool basic)
{
    const ModelSpec spec = load_spec_file(args.spec_path);
    if (basic) require_basic_model(spec);
    if (args.samples < 1) throw SpecError("--samples must be >= 1");
    const auto n_list = parse_int_list(args.n_list_raw);
    check_enumeration_budget(spec, n_list);

    PhiOptions popts;
    popts.k = args.k_rsb;
    popts.quad_nodes = args.quad_nodes;
    popts.seed = args.seed;
    PhiEvaluator phi(spec, popts);
    DualOptions dopts;

    MagnetizationDistribution proto;
    proto.dim = spec.mag_dim;
    proto.h_bound = spec.h_bound;
    proto.bins_per_axis = 64;
    double bins_total = 1.0;
    for (int a = 0; a < spec.mag_dim; ++a) bins_total *= proto.bins_per_axis;
    std::vector<std::vector<double>> centers;
    for (size_t b = 0; b < static_cast<size_t>(bins_total); ++b) centers.push_back(proto.bin_center(b));

    const ConjugateTable conj = build_conjugate(phi, centers, dopts);
    std::vector<double> scratch;
    auto g_of_m = [&](std::span<const double> m) { return GOverride::spec_g().eval(spec, m, scratch); };
    const RateFunctionTable var_table =
        basic ? rate_function_j_basic(conj, spec) : rate_function_ig(conj, g_of_m);

    auto out = open_out(args, "ldp_compare.csv");
    out << "N";
    for (int j = 1; j <= spec.mag_dim; ++j) out << ",m_" << j;
    out << ",empirical,variational\n";

    nlohmann::json summary = nlohmann::json::array();
    for (int n : n_list) {
        MagnetizationDistribution avg;
        for (int i = 0; i < args.samples; ++i) {
            const DisorderSample sample = sample_disorder(spec, n, args.seed + 1000003ull * i + n);
            MagnetizationDistribution d = gibbs_magnetization_dist(spec, sample);
            if (i == 0) {
                avg = std::move(d);
            } else {
                for (size_t b = 0; b < avg.mass.size(); ++b) avg.mass[b] += d.mass[b];
            }
        }
        for (double& m : avg.mass) m /= static_cast<double>(args.samples);
        const RateFunctionTable emp = empirical_rate(avg);

        double supdist = 0.0;
        int occupied = 0;
        for (size_t b = 0; b < avg.mass.size(); ++b) {
            const bool occ = avg.mass[b] > 0.0;
            if (occ) {
                ++occupied;
                supdist = std::max(supdist, std::abs(emp.values[b] - var_table.values[b]));
            }
            out << n;
            for (double c : emp.points[b]) out << "," << format_full(c);
            out << "," << format_full(emp.values[b]) << "," << format_full(var_table.values[b]) << "\n";
        }
        if (occupied == 0) {
            std::cerr << "error: no occupied magnetization bins at N = " << n << "\n";
            return kExitCheckFailed;
        }
        summary.push_back({{"N", n}, {"sup_distance", supdist}, {"occupied_bins", occupied}});
    }
    write_json_file(args, "ldp_summary.json",
                    {{"spec_hash", spec_hash(spec)},
                     {"samples", args.samples},
                     {"seed", args.seed},
                     {"k", args.k_rsb},
                     {"per_n", summary}});
    std::cout << nlohmann::json{{"per_n", summary}}.dump(2) << "\n";
    return kExitOk;
}

int cmd_verify(const CommonArgs& args, const std::vector<std::string>& tolerance_overrides,
               const std::string& only)
{
    VerifyOptions vopts;
    vopts.seed = args.seed;
    vopts.samples = args.samples;
    vopts.n_list = parse_int_list(args.n_list_raw);
    vopts.only = only;
    vopts.progress = &std::cout;
    for (const std::string& kv : tolerance_overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw SpecError("--tolerance expects NAME=VALUE");
        vopts.tolerance_override[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }

    // enumeration budget precondition, before any work
    for (int n : vopts.n_list) {
        if (n < 1 || static_cast<double>(n) * std::log(2.0) > std::log(static_cast<double>(1ull << 24)))
            throw SpecError("verify: N = " + std::to_string(n) + " exceeds the enumeration budget");
    }

    const auto results = run_acceptance(vopts);
    write_json_file(args, "verify_report.json", report_to_json(results));
    for (const CheckResult& r : results)
        if (!r.pass) {
            std::cerr << "verify failed at check: " << r.name << "\n";
            return kExitCheckFailed;
        }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parisi-type free energies and magnetization LDP rates for convex vector spin "
                 "glasses with Mattis interaction"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string x_list_raw;
    std::string method = "reduced";
    long long sweeps = 1000000, burn_in = 10000;
    bool basic = false;
    std::string only;
    std::vector<std::string> tolerance_overrides;

    auto add_common = [&](CLI::App* cmd, bool needs_spec) {
        if (needs_spec) cmd->add_option("--spec", args.spec_path, "model spec file (JSON)")->required();
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--format", args.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--k-rsb", args.k_rsb, "path levels k");
        cmd->add_option("--quad-nodes", args.quad_nodes, "Gauss-Hermite nodes per dimension");
        cmd->add_option("--seed", args.seed, "random seed");
        cmd->add_option("--n-list", args.n_list_raw, "system sizes, comma separated");
        cmd->add_option("--samples", args.samples, "disorder samples per size");
        cmd->add_option("--grid", args.grid, "m-grid points per dimension");
    };

    CLI::App* psi = app.add_subcommand("psi", "evaluate psi(q; x) on an x-list");
    add_common(psi, true);
    psi->add_option("--x-list", x_list_raw, "x values; vectors ';'-separated, components ','")->required();

    CLI::App* phi = app.add_subcommand("phi", "evaluate phi(x) (variational sup over paths)");
    add_common(phi, true);
    phi->add_option("--x-list", x_list_raw, "x values")->required();

    CLI::App* rate = app.add_subcommand("rate", "rate-function table I^G (or J with --basic)");
    add_common(rate, true);
    rate->add_flag("--basic", basic, "require the concrete +/-1 model and emit J");

    CLI::App* limit = app.add_subcommand("limit-fe", "limit free energy inf_m {phi*(m) - G(m)}");
    add_common(limit, true);
    limit->add_option("--method", method, "reduced | infsup | both")
        ->check(CLI::IsMember({"reduced", "infsup", "both"}));

    CLI::App* enumerate = app.add_subcommand("enumerate", "exact finite-N free energies over disorder");
    add_common(enumerate, true);

    CLI::App* mcmc = app.add_subcommand("mcmc", "Metropolis magnetization histogram");
    add_common(mcmc, true);
    mcmc->add_option("--sweeps", sweeps, "recorded sweeps");
    mcmc->add_option("--burn-in", burn_in, "burn-in sweeps");

    CLI::App* ldp = app.add_subcommand("ldp-compare", "empirical vs variational rate tables per N");
    add_common(ldp, true);
    ldp->add_flag("--basic", basic, "require the concrete +/-1 model");

    CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
    add_common(verify, false);
    verify->add_option("--tolerance", tolerance_overrides, "override NAME=VALUE, repeatable");
    verify->add_option("--only", only, "run only checks whose name contains this substring");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (psi->parsed()) return cmd_psi(args, x_list_raw);
        if (phi->parsed()) return cmd_phi(args, x_list_raw);
        if (rate->parsed()) return cmd_rate(args, basic);
        if (limit->parsed()) return cmd_limit_fe(args, method);
        if (enumerate->parsed()) return cmd_enumerate(args);
        if (mcmc->parsed()) return cmd_mcmc(args, sweeps, burn_in);
        if (ldp->parsed()) return cmd_ldp_compare(args, basic);
        if (verify->parsed()) return cmd_verify(args, tolerance_overrides, only);
    } catch (const SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
