#include "mather/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mather/error.hpp"

namespace mather {

namespace {

double num(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw InvalidArgument(std::string("json: missing number '") + key + "'");
    return j[key].get<double>();
}

}  // namespace

json to_json(const Diffeo1& f) {
    json j;
    j["class"] = to_string(f.tail_class());
    j["grid"] = {{"a", f.grid().a}, {"b", f.grid().b}, {"n", f.grid().n}};
    j["k"] = f.order();
    json jets = json::array();
    for (int i = 0; i < f.grid().n; ++i) {
        auto d = f.node_jet(i);
        jets.push_back(std::vector<double>(d.begin(), d.end()));
    }
    j["jets"] = std::move(jets);
    if (f.modulus_tag) j["modulus"] = *f.modulus_tag;
    return j;
}

Diffeo1 diffeo_from_json(const json& j) {
    if (j.contains("preset")) {
        PresetParams p;
        const json& q = j.value("params", json::object());
        p.eps = q.value("eps", p.eps);
        p.c = q.value("c", p.c);
        p.r = q.value("r", p.r);
        p.A = q.value("A", p.A);
        p.octaves = q.value("octaves", p.octaves);
        p.amps = q.value("amps", p.amps);
        p.phases = q.value("phases", p.phases);
        p.fix_origin = q.value("fix_origin", p.fix_origin);
        p.n = q.value("n", p.n);
        p.k = q.value("k", p.k);
        return from_preset(j["preset"].get<std::string>(), p);
    }
    if (!j.contains("class") || !j.contains("grid") || !j.contains("jets"))
        throw InvalidArgument("json: diffeomorphism needs class, grid and jets");
    TailClass cls = tail_class_from_string(j["class"].get<std::string>());
    Grid g{num(j["grid"], "a"), num(j["grid"], "b"), j["grid"]["n"].get<int>()};
    const int k = j["k"].get<int>();
    const json& rows = j["jets"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != g.n)
        throw InvalidArgument("json: jets must have one row per node");
    std::vector<double> jets;
    jets.reserve(static_cast<std::size_t>(g.n) * (k + 1));
    for (const auto& row : rows) {
        if (!row.is_array() || static_cast<int>(row.size()) != k + 1)
            throw InvalidArgument("json: each jet row needs k+1 entries");
        for (const auto& v : row) jets.push_back(v.get<double>());
    }
    Diffeo1 f(cls, g, k, std::move(jets));
    if (j.contains("modulus")) f.modulus_tag = j["modulus"].get<std::string>();
    return f;
}

json to_json(const ConcaveModulus& alpha) {
    return std::visit(
        [](const auto& k) -> json {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, HolderKind>) {
                return {{"kind", "holder"}, {"s", k.s}};
            } else if constexpr (std::is_same_v<T, OmegaZKind>) {
                return {{"kind", "omegaz"}, {"sigma", k.sigma}, {"tau", k.tau}, {"delta", k.delta},
                        {"ext_a", k.ext_a}, {"ext_b", k.ext_b}};
            } else {
                return {{"kind", "sampled"}, {"abscissae", k.abscissae}, {"values", k.values}};
            }
        },
        alpha.kind());
}

ConcaveModulus modulus_from_json(const json& j) {
    const std::string kind = j.value("kind", "");
    if (kind == "holder") return holder(num(j, "s"));
    if (kind == "omegaz") {
        if (j.contains("delta"))
            return ConcaveModulus(OmegaZKind{num(j, "sigma"), num(j, "tau"), num(j, "delta"), num(j, "ext_a"),
                                             num(j, "ext_b")});
        return omega_z(num(j, "sigma"), num(j, "tau"));
    }
    if (kind == "sampled") {
        SampledKind s{j.at("abscissae").get<std::vector<double>>(), j.at("values").get<std::vector<double>>()};
        return ConcaveModulus(std::move(s));
    }
    throw InvalidArgument("json: unknown modulus kind '" + kind + "'");
}

ConcaveModulus parse_alpha(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw InvalidArgument("alpha spec needs a ':' (holder:s, omegaz:s,t, file:path)");
    const std::string kind = spec.substr(0, colon), rest = spec.substr(colon + 1);
    try {
        if (kind == "holder") return holder(std::stod(rest));
        if (kind == "omegaz") {
            auto comma = rest.find(',');
            if (comma == std::string::npos) throw InvalidArgument("omegaz needs sigma,tau");
            return omega_z(std::stod(rest.substr(0, comma)), std::stod(rest.substr(comma + 1)));
        }
    } catch (const std::logic_error&) {
        throw InvalidArgument("alpha spec: cannot parse '" + spec + "'");
    }
    if (kind == "file") return modulus_from_json(read_json_file(rest));
    throw InvalidArgument("alpha spec: unknown kind '" + kind + "'");
}

json to_json(const Tolerances& t) {
    return {{"interp_residual", t.interp_residual}, {"node_cap", t.node_cap},
            {"root", t.root},                       {"invariant", t.invariant},
            {"surgery", t.surgery},                 {"ode_abs", t.ode_abs},
            {"ode_rel", t.ode_rel},                 {"tol_b", t.tol_b},
            {"overlap", t.overlap},                 {"lemma_allowance", t.lemma_allowance},
            {"eval_density", t.eval_density},       {"holder_scales", t.holder_scales},
            {"word_cap", t.word_cap}};
}

Tolerances tolerances_from_json(const json& j) {
    Tolerances t;
    t.interp_residual = j.value("interp_residual", t.interp_residual);
    t.node_cap = j.value("node_cap", t.node_cap);
    t.root = j.value("root", t.root);
    t.invariant = j.value("invariant", t.invariant);
    t.surgery = j.value("surgery", t.surgery);
    t.ode_abs = j.value("ode_abs", t.ode_abs);
    t.ode_rel = j.value("ode_rel", t.ode_rel);
    t.tol_b = j.value("tol_b", t.tol_b);
    t.overlap = j.value("overlap", t.overlap);
    t.lemma_allowance = j.value("lemma_allowance", t.lemma_allowance);
    t.eval_density = j.value("eval_density", t.eval_density);
    t.holder_scales = j.value("holder_scales", t.holder_scales);
    t.word_cap = j.value("word_cap", t.word_cap);
    return t;
}

json to_json(const MatherConfig& c) {
    auto iv = [](const Interval& I) { return json::array({I.lo, I.hi}); };
    return {{"k", c.k},         {"alpha", to_json(c.alpha)}, {"A", c.A},           {"B", c.B},
            {"D", iv(c.D)},     {"E", iv(c.E)},              {"J", iv(c.J)},       {"eps0", c.eps0},
            {"delta0", c.delta0}, {"tol", to_json(c.tol)}};
}

MatherConfig config_from_json(const json& j) {
    MatherConfig c = make_config(j.at("k").get<int>(), modulus_from_json(j.at("alpha")), j.at("A").get<int>(),
                                 tolerances_from_json(j.value("tol", json::object())));
    c.eps0 = j.value("eps0", c.eps0);
    c.delta0 = j.value("delta0", c.delta0);
    return c;
}

json to_json(const NormReport& r) {
    json balls = json::array();
    for (const auto& b : r.balls)
        balls.push_back({{"class", to_string(b.cls)}, {"delta", b.delta}, {"member", b.member}});
    return {{"k", r.k},
            {"sup_dev", r.sup_dev},
            {"holder_dev", r.holder_dev},
            {"holder_coarse", r.holder_coarse},
            {"k_alpha", r.k_alpha()},
            {"M_k", r.M_k},
            {"balls", balls}};
}

json to_json(const SlackReport& r) {
    json e = json::array();
    for (const auto& s : r.entries) e.push_back({{"name", s.name}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"slack", s.slack}});
    return {{"entries", e}, {"min_slack", r.min_slack()}, {"ok", r.ok()}};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument("malformed json in '" + path + "': " + e.what());
    }
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw InvalidArgument("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

}  // namespace mather
