// mather_cli: analysis subcommands, verification suites and plot data.
// Exit codes: 0 ok, 1 verification failure, 2 usage, 3 numerical refusal.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "mather/error.hpp"
#include "mather/perfect.hpp"
#include "run_config.hpp"
#include "suite.hpp"

using namespace mather;
using mather::cli::RunConfig;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kVerifyFail = 1, kUsage = 2, kRefusal = 3;

std::string out_path(const RunConfig& c, const std::string& file, const std::string& fallback) {
    if (!file.empty()) return file;
    fs::create_directories(c.out);
    return (fs::path(c.out) / fallback).string();
}

void write_json(const RunConfig& c, const std::string& path, json j, int indent = 2) {
    j["run_config"] = cli::to_json(c);
    write_file_atomic(path, j.dump(indent) + "\n");
    std::cout << "wrote " << path << "\n";
}

void write_csv(const RunConfig& c, const std::string& path, const std::string& body) {
    write_file_atomic(path, cli::csv_echo(c) + body);
    std::cout << "wrote " << path << "\n";
}

Diffeo1 load_map(const std::string& path) { return diffeo_from_json(read_json_file(path)); }

MatherConfig mather_config(const RunConfig& c) { return make_config(c.k, parse_alpha(c.alpha), c.A, c.tol); }

const char* verdict_name(Verdict v) { return v == Verdict::Yes ? "Yes" : "Inconclusive"; }

json side_json(const TamenessSide& s) {
    return {{"verdict", verdict_name(s.verdict)}, {"t0", s.t0}, {"sup", s.sup}, {"margin", s.margin}};
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw InvalidArgument("cannot parse integer list '" + s + "'");
        }
    }
    if (out.empty()) throw InvalidArgument("empty integer list");
    return out;
}

Interval parse_interval(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw InvalidArgument("cover element must be lo:hi, got '" + s + "'");
    try {
        Interval I{std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
        if (!(I.hi > I.lo)) throw InvalidArgument("cover element needs lo < hi");
        return I;
    } catch (const std::logic_error&) {
        throw InvalidArgument("cannot parse cover element '" + s + "'");
    }
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

// ---- plot tables ----

std::string sweep_csv(const std::vector<suite::CurvePoint>& pts) {
    std::ostringstream s;
    s.precision(17);
    s << "A,norm_g,norm_h,norm_gamma,norm_psi,ratio\n";
    for (const auto& p : pts)
        s << p.A << ',' << p.norm_g << ',' << p.norm_h << ',' << p.norm_gamma << ',' << p.norm_psi << ',' << p.ratio
          << '\n';
    return s.str();
}

std::string tameness_csv(const ConcaveModulus& extra) {
    std::ostringstream s;
    s.precision(17);
    s << "modulus,t,F,G\n";
    const auto xs = geometric_grid(1e-9, 1e3, 512);
    std::vector<ConcaveModulus> mods{holder(0.25), holder(0.5), holder(0.75), holder(1.0), omega_z(0.5, 0.3), extra};
    for (const auto& m : mods) {
        for (int i = 1; i <= 40; ++i) {
            const double t = std::pow(10.0, -3.0 * i / 40.0);
            s << '"' << m.name() << '"' << ',' << t << ',' << tameness_F(m, t, xs) << ',' << tameness_G(m, t, xs)
              << '\n';
        }
    }
    return s.str();
}

std::string lcm_csv(std::uint64_t seed) {
    std::ostringstream s;
    s.precision(17);
    s << "profile,t,mu,beta0,two_mu\n";
    std::mt19937_64 gen(seed);
    auto unit = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    for (int p = 0; p < 3; ++p) {
        const int n = 200;
        std::vector<double> v(n);
        double walk = 0.0;
        for (int i = 0; i < n; ++i) {
            walk += (unit() - 0.5) * (p + 1) * 0.3;
            v[i] = walk + std::sin(6.0 * i / n);
        }
        const auto osc = oscillation_modulus(v, 0.0, 1.0);
        const auto m = least_concave_majorant(osc.t, osc.mu);
        for (std::size_t i = 0; i < osc.t.size(); ++i)
            s << p << ',' << osc.t[i] << ',' << osc.mu[i] << ',' << m.beta0(osc.t[i]) << ',' << 2 * osc.mu[i] << '\n';
    }
    return s.str();
}

Diffeo1 calibrated_preset(const ConcaveModulus& alpha, double target) {
    PresetParams p;
    p.eps = 1e-3;
    p.r = 1.5;
    const double n = k_alpha_norm(from_preset("smooth_bump_displacement", p), alpha, 2);
    p.eps = 1e-3 * target / n;
    return from_preset("smooth_bump_displacement", p);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical companion for the refined Mather theorem on C^{k,alpha} diffeomorphisms of the line"};
    app.require_subcommand(1);
    app.fallthrough();

    // global flags; precedence: flag > config file > default
    RunConfig flags;
    std::string config_file;
    app.add_option("--config", config_file, "JSON config file (keys as in the run_config echo)");
    auto* o_k = app.add_option("--k", flags.k, "regularity order");
    auto* o_alpha = app.add_option("--alpha", flags.alpha, "holder:s | omegaz:s,t | file:<path>");
    auto* o_A = app.add_option("--A", flags.A, "field parameter A");
    auto* o_n = app.add_option("--grid-n", flags.grid_n, "core grid nodes for presets");
    auto* o_seed = app.add_option("--seed", flags.seed, "random seed");
    auto* o_out = app.add_option("--out", flags.out, "output directory");
    auto* o_iter = app.add_option("--max-iter", flags.max_iter, "fixed-point iteration budget");
    using Field = double& (*)(RunConfig&);
    struct TolFlag {
        const char* name;
        Field field;
        CLI::Option* opt = nullptr;
    };
    std::vector<TolFlag> tol_flags = {
        {"--tol-interp", [](RunConfig& c) -> double& { return c.tol.interp_residual; }},
        {"--tol-root", [](RunConfig& c) -> double& { return c.tol.root; }},
        {"--tol-invariant", [](RunConfig& c) -> double& { return c.tol.invariant; }},
        {"--tol-surgery", [](RunConfig& c) -> double& { return c.tol.surgery; }},
        {"--tol-ode-abs", [](RunConfig& c) -> double& { return c.tol.ode_abs; }},
        {"--tol-ode-rel", [](RunConfig& c) -> double& { return c.tol.ode_rel; }},
        {"--tol-b", [](RunConfig& c) -> double& { return c.tol.tol_b; }},
        {"--tol-overlap", [](RunConfig& c) -> double& { return c.tol.overlap; }},
        {"--tol-allowance", [](RunConfig& c) -> double& { return c.tol.lemma_allowance; }},
        {"--tol-fixed", [](RunConfig& c) -> double& { return c.tol_fixed; }},
        {"--tol-conjugacy", [](RunConfig& c) -> double& { return c.verify.conjugacy; }},
        {"--tol-blend", [](RunConfig& c) -> double& { return c.verify.blend; }},
        {"--tol-verify-fixed", [](RunConfig& c) -> double& { return c.verify.fixed; }},
        {"--tol-flow", [](RunConfig& c) -> double& { return c.verify.flow; }},
    };
    for (auto& t : tol_flags) t.opt = app.add_option(t.name, t.field(flags), "tolerance");

    std::function<int(const RunConfig&)> action;

    // ---- modulus ----
    auto* modulus = app.add_subcommand("modulus", "moduli of continuity")->fallthrough();
    modulus->require_subcommand(1);
    double holder_s = 0.0;
    std::string mod_out;
    auto* analyze = modulus->add_subcommand("analyze", "tameness verdicts and modulus laws");
    auto* o_holder = analyze->add_option("--holder", holder_s, "analyze x^s instead of --alpha");
    analyze->add_option("--out", mod_out, "output file");
    analyze->callback([&] {
        action = [&](const RunConfig& c) {
            const ConcaveModulus a = o_holder->count() ? holder(holder_s) : parse_alpha(c.alpha);
            const auto xs = geometric_grid(1e-9, 1e3, 512);
            const std::vector<double> ts{0.5, 0.25, 0.1, 0.01};
            const auto v = classify_tameness(a, ts, xs);
            json table = json::array();
            for (double t : ts) table.push_back({{"t", t}, {"F", tameness_F(a, t, xs)}, {"G", tameness_G(a, t, xs)}});
            json laws = json::array();
            for (double C : {0.5, 2.0}) {
                auto l = check_modulus_laws(a, C, geometric_grid(1e-8, 1e2, 200));
                laws.push_back({{"C", C}, {"worst_lower", l.worst_lower}, {"worst_upper", l.worst_upper},
                                {"worst_ratio", l.worst_ratio}, {"ok", l.ok}});
            }
            json j = {{"modulus", to_json(a)},
                      {"name", a.name()},
                      {"sup_tame", side_json(v.sup_tame)},
                      {"sub_tame", side_json(v.sub_tame)},
                      {"functionals", table},
                      {"laws", laws}};
            std::cout << a.name() << ": sup-tame " << verdict_name(v.sup_tame.verdict) << ", sub-tame "
                      << verdict_name(v.sub_tame.verdict) << "\n";
            write_json(c, out_path(c, mod_out, "modulus_verdict.json"), j);
            return kOk;
        };
    });

    // ---- diffeo ----
    auto* diffeo = app.add_subcommand("diffeo", "build and manipulate diffeomorphisms")->fallthrough();
    diffeo->require_subcommand(1);
    std::string d_out, d_in, d_f, d_g, d_name = "smooth_bump_displacement";
    PresetParams pp;
    std::vector<std::string> cover_specs;
    int table_order = 3;
    auto* preset = diffeo->add_subcommand("preset", "analytic constructions");
    preset->add_option("--name", d_name, "smooth_bump_displacement | scaled_family | periodic_wiggle");
    preset->add_option("--eps", pp.eps);
    preset->add_option("--c", pp.c);
    preset->add_option("--r", pp.r);
    preset->add_option("--octaves", pp.octaves);
    preset->add_option("--amps", pp.amps)->delimiter(',');
    preset->add_option("--phases", pp.phases)->delimiter(',');
    preset->add_flag("--fix-origin", pp.fix_origin);
    preset->add_option("--out", d_out, "output file");
    preset->callback([&] {
        action = [&](const RunConfig& c) {
            PresetParams p = pp;
            p.k = c.k;
            p.n = c.grid_n;
            p.A = c.A;
            auto f = from_preset(d_name, p);
            write_json(c, out_path(c, d_out, "diffeo.json"), to_json(f), -1);
            return kOk;
        };
    });
    auto* dcompose = diffeo->add_subcommand("compose", "f o g");
    dcompose->add_option("--f", d_f)->required();
    dcompose->add_option("--g", d_g)->required();
    dcompose->add_option("--out", d_out);
    dcompose->callback([&] {
        action = [&](const RunConfig& c) {
            auto h = compose(load_map(d_f), load_map(d_g), {c.tol.interp_residual, c.tol.node_cap});
            write_json(c, out_path(c, d_out, "compose.json"), to_json(h), -1);
            return kOk;
        };
    });
    auto* dinverse = diffeo->add_subcommand("inverse", "f^-1");
    dinverse->add_option("--in", d_in)->required();
    dinverse->add_option("--out", d_out);
    dinverse->callback([&] {
        action = [&](const RunConfig& c) {
            auto h = inverse(load_map(d_in), {c.tol.interp_residual, c.tol.node_cap});
            write_json(c, out_path(c, d_out, "inverse.json"), to_json(h), -1);
            return kOk;
        };
    });
    auto* dsupport = diffeo->add_subcommand("support", "support interval");
    dsupport->add_option("--in", d_in)->required();
    dsupport->add_option("--out", d_out);
    dsupport->callback([&] {
        action = [&](const RunConfig& c) {
            auto f = load_map(d_in);
            auto s = support_interval(f);
            json j = {{"class", to_string(f.tail_class())}};
            j["support"] = s ? json::array({s->lo, s->hi}) : json(nullptr);
            std::cout << "support: " << (s ? "[" + fmt(s->lo) + ", " + fmt(s->hi) + "]" : "empty") << "\n";
            write_json(c, out_path(c, d_out, "support.json"), j);
            return kOk;
        };
    });
    auto* dfrag = diffeo->add_subcommand("fragment", "split along an open cover");
    dfrag->add_option("--in", d_in)->required();
    dfrag->add_option("--cover", cover_specs, "cover elements lo:hi")->required()->delimiter(',');
    dfrag->add_option("--out", d_out);
    dfrag->callback([&] {
        action = [&](const RunConfig& c) {
            Cover cover;
            for (const auto& s : cover_specs) cover.elements.push_back(parse_interval(s));
            auto fr = fragment(load_map(d_in), cover, {c.tol.interp_residual, c.tol.node_cap});
            json frags = json::array();
            for (const auto& f : fr.fragments) frags.push_back(to_json(f));
            json j = {{"K", fr.K}, {"eps_measured", fr.eps_measured}, {"min_partial_slope", fr.min_partial_slope},
                      {"fragments", frags}};
            write_json(c, out_path(c, d_out, "fragments.json"), j, -1);
            return kOk;
        };
    });
    auto* dtable = diffeo->add_subcommand("jet-table", "composition table of a given order");
    dtable->add_option("--order", table_order)->required();
    dtable->add_option("--out", d_out);
    dtable->callback([&] {
        action = [&](const RunConfig& c) {
            const auto& t = table(table_order);
            json rows = json::array();
            for (const auto& r : t.rows) rows.push_back({{"blocks", r.blocks}, {"parts", r.parts}, {"coeff", r.coeff}});
            json j = {{"order", t.order}, {"coefficient_sum", t.coefficient_sum()}, {"rows", rows}};
            write_json(c, out_path(c, d_out, "jet_table.json"), j);
            return kOk;
        };
    });

    // ---- norms ----
    auto* norms = app.add_subcommand("norms", "norms and metrics")->fallthrough();
    norms->require_subcommand(1);
    std::string n_in, n_f, n_g, n_kind = "ckalpha", n_out;
    double n_delta = 0.0;
    auto* report = norms->add_subcommand("report", "sup norms and Hoelder seminorms of f - Id");
    report->add_option("--in", n_in)->required();
    auto* o_delta = report->add_option("--delta", n_delta, "ball radius to test membership");
    report->add_option("--out", n_out);
    report->callback([&] {
        action = [&](const RunConfig& c) {
            auto f = load_map(n_in);
            std::vector<BallQuery> balls;
            if (o_delta->count()) balls.push_back({f.tail_class(), n_delta});
            NormOptions opt{c.tol.eval_density, c.tol.holder_scales};
            auto r = norm_report(f, parse_alpha(c.alpha), std::min(c.k, f.order()), opt, balls);
            std::cout << "||f - Id||_{k,alpha} = " << fmt(r.k_alpha()) << "\n";
            write_json(c, out_path(c, n_out, "norms.json"), to_json(r));
            return kOk;
        };
    });
    auto* met = norms->add_subcommand("metric", "distance between two maps");
    met->add_option("--f", n_f)->required();
    met->add_option("--g", n_g)->required();
    met->add_option("--kind", n_kind, "c0 | ck | ckalpha")->check(CLI::IsMember({"c0", "ck", "ckalpha"}));
    met->add_option("--out", n_out);
    met->callback([&] {
        action = [&](const RunConfig& c) {
            const MetricKind kind = n_kind == "c0" ? MetricKind::C0 : n_kind == "ck" ? MetricKind::Ck : MetricKind::CkAlpha;
            const auto a = parse_alpha(c.alpha);
            MetricOptions mo;
            mo.k = n_kind == "c0" ? 0 : c.k;
            const double d = metric(load_map(n_f), load_map(n_g), kind, &a, mo);
            std::cout << n_kind << " distance " << fmt(d) << "\n";
            write_json(c, out_path(c, n_out, "metric.json"), {{"kind", n_kind}, {"distance", d}});
            return kOk;
        };
    });

    // ---- flow ----
    auto* flowc = app.add_subcommand("flow", "plateau field, time-t maps and the trajectory chart")->fallthrough();
    flowc->require_subcommand(1);
    double f_t = 1.0;
    int f_samples = 401;
    std::string f_out;
    auto* ftable = flowc->add_subcommand("table", "CSV of rho, tau_t, phi and phi^-1");
    ftable->add_option("--t", f_t, "flow time");
    ftable->add_option("--samples", f_samples)->check(CLI::Range(2, 1000000));
    ftable->add_option("--out", f_out);
    ftable->callback([&] {
        action = [&](const RunConfig& c) {
            auto rho = make_rho(c.A);
            auto phi = trajectory_chart(rho, std::min(c.k, 4));
            FlowOptions fo{c.tol.ode_abs, c.tol.ode_rel};
            std::ostringstream s;
            s.precision(17);
            s << "x,rho,tau_t,phi,phi_inverse\n";
            const double L = 2.0 * c.A + 2.0;
            for (int i = 0; i < f_samples; ++i) {
                const double x = -L + 2.0 * L * i / (f_samples - 1);
                s << x << ',' << rho(x) << ',' << flow(rho, f_t, x, fo) << ',' << phi(x) << ',';
                // phi^-1 lives on (-2A-1, 2A+1)
                if (std::abs(x) < 2.0 * c.A + 1.0) s << phi.inverse(x);
                else s << "nan";
                s << '\n';
            }
            write_csv(c, out_path(c, f_out, "flow_table.csv"), s.str());
            return kOk;
        };
    });

    // ---- mather ----
    auto* matherc = app.add_subcommand("mather", "rolling up, spreading, norm reduction, conjugacy")->fallthrough();
    matherc->require_subcommand(1);
    std::string m_in, m_out, m_u, m_v, m_sweep;
    int m_B = 0;
    bool m_no_ball = false;
    auto* mgamma = matherc->add_subcommand("gamma", "Gamma g, periodic on [0, 1]");
    mgamma->add_option("--in", m_in)->required();
    mgamma->add_option("--out", m_out);
    mgamma->callback([&] {
        action = [&](const RunConfig& c) {
            auto cfg = mather_config(c);
            auto G = gamma_roll(load_map(m_in), cfg.resolution());
            write_json(c, out_path(c, m_out, "gamma.json"), to_json(G), -1);
            return kOk;
        };
    });
    auto* momega = matherc->add_subcommand("omega", "Omega_B g, compact on [-2B, 2B]");
    momega->add_option("--in", m_in)->required();
    momega->add_option("--B", m_B, "number of factors (default from the interval rule)");
    momega->add_option("--out", m_out);
    momega->callback([&] {
        action = [&](const RunConfig& c) {
            auto cfg = mather_config(c);
            auto W = omega_spread(load_map(m_in), m_B > 0 ? m_B : cfg.B, cfg);
            write_json(c, out_path(c, m_out, "omega.json"), to_json(W), -1);
            return kOk;
        };
    });
    auto* mpsi = matherc->add_subcommand("psi", "Psi g = Omega(Gamma g), or the reduction curve with --sweep");
    mpsi->add_option("--in", m_in);
    mpsi->add_option("--sweep", m_sweep, "A values, e.g. 1,2,4,8 (CSV of A and ratio)");
    mpsi->add_flag("--no-ball-check", m_no_ball);
    mpsi->add_option("--out", m_out);
    mpsi->callback([&] {
        action = [&](const RunConfig& c) {
            if (!m_sweep.empty()) {
                auto pts = suite::norm_reduction_curve(parse_int_list(m_sweep), parse_alpha(c.alpha));
                for (const auto& p : pts) std::cout << "A " << p.A << " ratio " << fmt(p.ratio) << "\n";
                write_csv(c, out_path(c, m_out, "psi_sweep.csv"), sweep_csv(pts));
                return kOk;
            }
            if (m_in.empty()) throw InvalidArgument("mather psi needs --in or --sweep");
            auto cfg = mather_config(c);
            auto P = psi_reduce(load_map(m_in), cfg, !m_no_ball);
            json j = to_json(P.psi);
            j["norm_in"] = P.norm_in;
            j["norm_out"] = P.norm_out;
            std::cout << "norm in " << fmt(P.norm_in) << ", out " << fmt(P.norm_out) << "\n";
            write_json(c, out_path(c, m_out, "psi.json"), j, -1);
            return kOk;
        };
    });
    auto* mlambda = matherc->add_subcommand("lambda", "conjugator lambda with tau v = lambda tau u lambda^-1");
    mlambda->add_option("--u", m_u)->required();
    mlambda->add_option("--v", m_v)->required();
    mlambda->add_option("--out", m_out);
    mlambda->callback([&] {
        action = [&](const RunConfig& c) {
            auto cfg = mather_config(c);
            auto phi = trajectory_chart(make_rho(c.A), c.k);
            auto C = conjugator(load_map(m_u), load_map(m_v), phi, cfg);
            json j = {{"A", C.A},
                      {"b", C.b},
                      {"translation_dev", C.translation_dev},
                      {"overlap_left", C.overlap_left},
                      {"overlap_right", C.overlap_right},
                      {"residual", C.residual},
                      {"lambda", to_json(C.lambda)},
                      {"tau", to_json(C.tau)}};
            std::cout << "b " << fmt(C.b) << ", residual " << fmt(C.residual) << "\n";
            write_json(c, out_path(c, m_out, "lambda.json"), j, -1);
            return kOk;
        };
    });

    // ---- perfect ----
    auto* perfect = app.add_subcommand("perfect", "fixed-point search and certificates")->fallthrough();
    perfect->require_subcommand(1);
    std::string p_in, p_out, p_chain;
    auto* fixpoint = perfect->add_subcommand("fixpoint", "iterate Theta from Id and assemble the certificate");
    fixpoint->add_option("--in", p_in, "f as JSON")->required();
    fixpoint->add_option("--out", p_out, "certificate chain (or trace) output");
    fixpoint->callback([&] {
        action = [&](const RunConfig& c) {
            auto cfg = mather_config(c);
            FixedPointOptions opt;
            opt.tol = c.tol_fixed;
            opt.max_iter = c.max_iter;
            auto r = fixed_point_search(load_map(p_in), cfg, opt);
            const std::string path = out_path(c, p_out, "chain.json");
            if (!r.chain) {
                std::cout << "no convergence: " << r.stop_reason << " after " << r.iterations << " iterations\n";
                write_json(c, path, to_json(r), -1);
                return kOk;
            }
            auto rep = verify_certificate(*r.chain, c.verify);
            json j = to_json(*r.chain);
            j["verify"] = to_json(rep);
            j["stop_reason"] = r.stop_reason;
            std::cout << "converged in " << r.iterations << " iterations, residual " << fmt(r.residual)
                      << ", certificate " << (rep.ok() ? "verifies" : "FAILS") << "\n";
            write_json(c, path, j, -1);
            return rep.ok() ? kOk : kVerifyFail;
        };
    });
    auto* pverify = perfect->add_subcommand("verify", "replay a certificate chain");
    pverify->add_option("chain", p_chain, "certificate chain JSON")->required();
    pverify->add_option("--out", p_out, "verification report");
    pverify->callback([&] {
        action = [&](const RunConfig& c) {
            auto chain = chain_from_json(read_json_file(p_chain));
            auto rep = verify_certificate(chain, c.verify);
            for (const auto& it : rep.items)
                std::cout << (it.ok ? "ok   " : "FAIL ") << it.name << ": " << fmt(it.value) << " <= " << fmt(it.bound)
                          << "\n";
            write_json(c, out_path(c, p_out, "chain_verify.json"), to_json(rep));
            return rep.ok() ? kOk : kVerifyFail;
        };
    });

    // ---- verify ----
    auto* verify = app.add_subcommand("verify", "invariant suites; exits 1 on any negative slack")->fallthrough();
    std::string v_suite = "all";
    verify->add_option("--suite", v_suite, "all | acceptance | <check name>")
        ->check(CLI::IsMember(suite::suite_names()));
    verify->callback([&] {
        action = [&](const RunConfig& c) {
            suite::SuiteOptions so;
            so.seed = c.seed;
            auto results = suite::run_suite(v_suite, so);
            bool ok = true;
            json arr = json::array();
            for (const auto& r : results) {
                ok = ok && r.passed;
                arr.push_back(suite::to_json(r));
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.summary << "\n";
            }
            write_json(c, out_path(c, "", "verify_report.json"),
                       {{"suite", v_suite}, {"seed", c.seed}, {"passed", ok}, {"results", arr}});
            write_csv(c, out_path(c, "", "verify_slacks.csv"), suite::slacks_csv(results));
            return ok ? kOk : kVerifyFail;
        };
    });

    // ---- emit-plots ----
    auto* plots = app.add_subcommand("emit-plots", "CSV tables for plotting")->fallthrough();
    std::string pl_sweep = "1,2,4,8";
    bool pl_skip_fix = false;
    plots->add_option("--sweep", pl_sweep, "A values for the reduction curve");
    plots->add_flag("--skip-fixpoint", pl_skip_fix, "omit the residual trace table");
    plots->callback([&] {
        action = [&](const RunConfig& c) {
            const auto alpha = parse_alpha(c.alpha);
            write_csv(c, out_path(c, "", "norm_reduction.csv"),
                      sweep_csv(suite::norm_reduction_curve(parse_int_list(pl_sweep), alpha)));
            write_csv(c, out_path(c, "", "tameness.csv"), tameness_csv(alpha));
            write_csv(c, out_path(c, "", "lcm_sandwich.csv"), lcm_csv(c.seed));
            if (!pl_skip_fix) {
                auto cfg = make_config(2, alpha, 4, c.tol);
                FixedPointOptions opt;
                opt.tol = c.tol_fixed;
                opt.max_iter = c.max_iter;
                auto r = fixed_point_search(calibrated_preset(alpha, 1e-3), cfg, opt);
                std::ostringstream s;
                s.precision(17);
                s << "iteration,residual\n";
                for (std::size_t i = 0; i < r.trace.size(); ++i) s << i + 1 << ',' << r.trace[i] << '\n';
                write_csv(c, out_path(c, "", "residual_trace.csv"), s.str());
            }
            return kOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        RunConfig cfg;
        if (!config_file.empty()) cli::apply_json(cfg, read_json_file(config_file));
        if (o_k->count()) cfg.k = flags.k;
        if (o_alpha->count()) cfg.alpha = flags.alpha;
        if (o_A->count()) cfg.A = flags.A;
        if (o_n->count()) cfg.grid_n = flags.grid_n;
        if (o_seed->count()) cfg.seed = flags.seed;
        if (o_out->count()) cfg.out = flags.out;
        if (o_iter->count()) cfg.max_iter = flags.max_iter;
        for (const auto& t : tol_flags)
            if (t.opt->count()) t.field(cfg) = t.field(flags);
        cli::validate(cfg);
        parse_alpha(cfg.alpha);
        return action(cfg);
    } catch (const InvalidArgument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvariantViolation& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kUsage;
    } catch (const json::exception& e) {
        std::cerr << "malformed json: " << e.what() << "\n";
        return kUsage;
    } catch (const PreconditionError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return kRefusal;
    } catch (const ConstructionError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return kRefusal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kVerifyFail;
    }
}
