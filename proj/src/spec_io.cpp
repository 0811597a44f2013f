#include "mattisglass/spec_io.hpp"

#include <fstream>

namespace mattis {

using nlohmann::json;

namespace {

std::vector<double> as_vector(const json& j, int dim, const char* what)
{
    std::vector<double> v;
    if (j.is_number()) {
        v.push_back(j.get<double>());
    } else if (j.is_array()) {
        for (const auto& x : j) v.push_back(x.get<double>());
    } else {
        throw SpecError(std::string(what) + ": expected a number or an array");
    }
    if (static_cast<int>(v.size()) != dim)
        throw SpecError(std::string(what) + ": expected " + std::to_string(dim) + " entries, got " +
                        std::to_string(v.size()));
    return v;
}

SymMat as_matrix(const json& j, int dim, const char* what)
{
    const std::vector<double> flat = as_vector(j, dim * dim, what);
    SymMat m(dim);
    for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k) m(i, k) = flat[static_cast<size_t>(i) * dim + k];
    // symmetrize; serialized paths may carry asymmetric round-off
    for (int i = 0; i < dim; ++i)
        for (int k = i + 1; k < dim; ++k) {
            const double s = 0.5 * (m(i, k) + m(k, i));
            m(i, k) = m(k, i) = s;
        }
    return m;
}

const json& need(const json& j, const char* key, const char* where)
{
    auto it = j.find(key);
    if (it == j.end()) throw SpecError(std::string(where) + ": missing field '" + key + "'");
    return *it;
}

}  // namespace

json spec_to_json(const ModelSpec& spec)
{
    json j;
    j["D"] = spec.spin_dim;
    j["d"] = spec.mag_dim;
    j["L"] = spec.chi_dim;

    json xi;
    xi["kind"] = spec.xi.kind() == MixtureKind::scalar_mixture ? "scalar-mixture" : "quadratic-matrix";
    xi["betas"] = std::vector<double>(spec.xi.betas().begin(), spec.xi.betas().end());
    j["xi"] = xi;

    j["prior"] = {{"support", spec.prior.support}, {"weights", spec.prior.weights}};
    j["chi"] = {{"support", spec.chi_law.support}, {"probs", spec.chi_law.probs}};

    std::vector<std::string> h;
    for (const auto& c : spec.h.components) h.push_back(c.source());
    j["h"] = h;
    j["G"] = spec.mattis_g.source();
    j["t"] = spec.t;

    json q;
    q["zetas"] = spec.q.zetas();
    std::vector<std::vector<double>> values;
    for (const SymMat& v : spec.q.values())
        values.emplace_back(v.data().begin(), v.data().end());
    q["values"] = values;
    j["q"] = q;
    return j;
}

ModelSpec spec_from_json(const json& j)
{
    ModelSpec spec;
    spec.spin_dim = need(j, "D", "spec").get<int>();
    spec.mag_dim = need(j, "d", "spec").get<int>();
    spec.chi_dim = need(j, "L", "spec").get<int>();
    if (spec.spin_dim < 1 || spec.mag_dim < 1 || spec.chi_dim < 1)
        throw SpecError("spec: dimensions must be >= 1");

    const json& xi = need(j, "xi", "spec");
    const std::string kind = need(xi, "kind", "spec.xi").get<std::string>();
    std::vector<double> betas;
    for (const auto& b : need(xi, "betas", "spec.xi")) betas.push_back(b.get<double>());
    if (kind == "scalar-mixture") {
        spec.xi = Mixture::scalar(betas);
    } else if (kind == "quadratic-matrix") {
        if (betas.size() != 1) throw SpecError("spec.xi: quadratic-matrix takes a single beta");
        spec.xi = Mixture::quadratic(spec.spin_dim, betas[0]);
    } else {
        throw SpecError("spec.xi.kind: unknown catalog tag '" + kind + "'");
    }

    const json& prior = need(j, "prior", "spec");
    spec.prior.dim = spec.spin_dim;
    for (const auto& v : need(prior, "support", "spec.prior"))
        spec.prior.support.push_back(as_vector(v, spec.spin_dim, "spec.prior.support"));
    for (const auto& w : need(prior, "weights", "spec.prior")) spec.prior.weights.push_back(w.get<double>());

    const json& chi = need(j, "chi", "spec");
    spec.chi_law.dim = spec.chi_dim;
    for (const auto& v : need(chi, "support", "spec.chi"))
        spec.chi_law.support.push_back(as_vector(v, spec.chi_dim, "spec.chi.support"));
    for (const auto& p : need(chi, "probs", "spec.chi")) spec.chi_law.probs.push_back(p.get<double>());

    const std::vector<std::string> h_vars = h_variable_names(spec.spin_dim, spec.chi_dim);
    for (const auto& src : need(j, "h", "spec"))
        spec.h.components.push_back(Expression::parse(src.get<std::string>(), h_vars));
    spec.h.out_dim = spec.mag_dim;

    spec.mattis_g = Expression::parse(need(j, "G", "spec").get<std::string>(), g_variable_names(spec.mag_dim));
    spec.t = need(j, "t", "spec").get<double>();

    if (j.contains("q")) {
        const json& q = j.at("q");
        std::vector<double> zetas;
        for (const auto& z : need(q, "zetas", "spec.q")) zetas.push_back(z.get<double>());
        std::vector<SymMat> values;
        for (const auto& v : need(q, "values", "spec.q"))
            values.push_back(as_matrix(v, spec.spin_dim, "spec.q.values"));
        spec.q = StepPath(spec.spin_dim, std::move(zetas), std::move(values));
    } else {
        spec.q = StepPath::zero(spec.spin_dim);
    }

    return validate_spec(std::move(spec));
}

ModelSpec load_spec_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open spec file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SpecError("spec file " + path + ": " + e.what());
    }
    return spec_from_json(j);
}

void save_spec_file(const ModelSpec& spec, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write spec file: " + path);
    out << spec_to_json(spec).dump(2) << "\n";
}

std::string spec_hash(const ModelSpec& spec)
{
    const std::string dump = spec_to_json(spec).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mattis
