#include "mather/perfect.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mather/error.hpp"
#include "mather/flow.hpp"
#include "mather/parallel.hpp"

namespace mather {

namespace {

constexpr int kMax = max_jet_order;
using Buf = std::array<double, kMax + 1>;

std::span<double> sp(Buf& b, int k) { return {b.data(), static_cast<std::size_t>(k + 1)}; }
std::span<const double> csp(const Buf& b, int k) { return {b.data(), static_cast<std::size_t>(k + 1)}; }

struct BlendProfile {
    double s, inner, R, w, c;
    std::vector<double> cum;  // integral of q from inner to inner + i h
    static constexpr double h = 1.0 / 64;

    // P falls on [inner, inner + w]; W rises on [inner + w, inner + 2w] and falls on [R - w, R]
    Taylor P(const Taylor& t) const { return smooth_step((inner + w - t) * (1.0 / w)); }
    Taylor W(const Taylor& t) const {
        return smooth_step((t - inner - w) * (1.0 / w)) * smooth_step((R - t) * (1.0 / w));
    }
    Taylor q(const Taylor& t) const { return 1.0 + (s - 1.0) * P(t) - c * W(t); }
    double q(double t) const { return q(Taylor(0, t)).value(); }
    double Pv(double t) const { return P(Taylor(0, t)).value(); }
    double Wv(double t) const { return W(Taylor(0, t)).value(); }

    void tabulate() {
        using boost::math::quadrature::gauss_kronrod;
        auto f = [this](double x) { return q(x); };
        const int m = static_cast<int>(std::ceil((R - inner) / h));
        cum.assign(m + 1, 0.0);
        for (int i = 0; i < m; ++i) {
            const double a = inner + h * i, b = std::min(R, a + h);
            cum[i + 1] = cum[i] + gauss_kronrod<double, 15>::integrate(f, a, b, 0);
        }
    }

    // Q(t) for t >= 0
    double Q(double t) const {
        using boost::math::quadrature::gauss_kronrod;
        if (t <= inner) return s * t;
        if (t >= R) return t;
        const int i = std::min(static_cast<int>((t - inner) / h), static_cast<int>(cum.size()) - 1);
        const double a = inner + h * i;
        auto f = [this](double x) { return q(x); };
        const double tail = t > a ? gauss_kronrod<double, 15>::integrate(f, a, t, 0) : 0.0;
        return s * inner + cum[i] + tail;
    }
};

double integral(const std::function<double(double)>& f, double lo, double hi) {
    using boost::math::quadrature::gauss_kronrod;
    double v = 0.0;
    for (double a = lo; a < hi; a += 1.0) v += gauss_kronrod<double, 15>::integrate(f, a, std::min(a + 1.0, hi), 10, 1e-15);
    return v;
}

bool inside(const Diffeo1& f, const Interval& I) {
    auto supp = support_interval(f);
    if (!supp) return true;
    const double cell = f.grid().step() * (1 + 1e-9);
    return supp->lo >= I.lo - cell && supp->hi <= I.hi + cell;
}

template <class F>
double max_over(double lo, double hi, int samples, F&& f) {
    std::vector<double> r(samples);
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
        r[i] = f(lo + (hi - lo) * static_cast<double>(i) / (samples - 1));
    });
    double m = 0.0;
    for (double v : r) m = std::max(m, v);
    return m;
}

double dk(const Diffeo1& a, const Diffeo1& b, int k) {
    MetricOptions o;
    o.k = k;
    return metric(a, b, MetricKind::Ck, nullptr, o);
}

double blend_residual(const Diffeo1& Q, const Diffeo1& fu, const Diffeo1& g) {
    const Interval C = Q.core();
    return max_over(C.lo, C.hi, 4001, [&](double x) { return std::abs(Q(fu(x)) - g(Q(x))); });
}

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
    const std::string p = std::string("theta_step[") + stage + "]: ";
    try {
        return f();
    } catch (const PreconditionError& e) {
        throw PreconditionError(p + e.what());
    } catch (const ConstructionError& e) {
        throw ConstructionError(p + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(p + e.what());
    }
}

}  // namespace

// ---- blend map ----

BlendMap make_Q(const Interval& D, const Interval& E, int k, const Resolution& res) {
    if (!(D.length() > 0) || !(E.length() > 0)) throw InvalidArgument("make_Q: empty interval");
    const double s = E.length() / D.length();
    const double inner = 2.0 * D.length();
    double R = 4.0 * std::max(D.length(), E.length());
    for (int attempt = 1; attempt <= 2; ++attempt, R *= 2.0) {
        const double w = std::min(D.length(), (R - inner) / 8.0);
        BlendProfile bp{s, inner, R, w, 0.0, {}};
        const double IP = inner + integral([&](double t) { return bp.Pv(t); }, inner, inner + w);
        const double IW = integral([&](double t) { return bp.Wv(t); }, inner + w, R);
        bp.c = (s - 1.0) * IP / IW;
        double qmin = 1.0;
        for (double t = 0.0; t <= R; t += 1.0 / 1024) qmin = std::min(qmin, bp.q(t));
        if (!(qmin > 0.0)) continue;
        bp.tabulate();
        NodeFn fn = [&](double x, std::span<double> out) {
            const int kk = static_cast<int>(out.size()) - 1;
            const double t = std::abs(x);
            const double Qv = x < 0 ? -bp.Q(t) : bp.Q(t);
            out[0] = Qv - x;
            if (kk == 0) return;
            Taylor T = Taylor::variable(kk - 1, x);
            if (x < 0) T = -T;
            auto d = bp.q(T).derivatives();
            // q is even in x: odd derivatives flip sign on the left
            for (int i = 0; i < kk; ++i) out[i + 1] = (x < 0 && i % 2 == 1) ? -d[i] : d[i];
            out[1] -= 1.0;
        };
        Diffeo1 Q = build_sampled(TailClass::Compact, -R, R, static_cast<int>(8 * R) + 1, k, fn, res);
        return BlendMap{std::move(Q), s, R, bp.c, attempt};
    }
    throw ConstructionError("make_Q: blend derivative not positive even with a doubled outer radius");
}

Diffeo1 conjugate_by(const BlendMap& Q, const Diffeo1& h, const Resolution& res) {
    if (h.tail_class() != TailClass::Compact) throw InvalidArgument("conjugate_by: compact map expected");
    const Interval C = h.core();
    const int k = std::min(h.order(), Q.Q.order());
    NodeFn fn = [&](double x, std::span<double> out) {
        Buf Qy{}, Qi{}, H{}, HQ{}, Qh{};
        const double y = Q.Q.inverse_value(x, 1e-16);
        Q.Q.evaluate_raw(y, sp(Qy, k));
        invert_raw(y, csp(Qy, k), sp(Qi, k));
        Qi[0] = y;
        h.evaluate_raw(y, sp(H, k));
        compose_raw(csp(H, k), csp(Qi, k), sp(HQ, k));
        HQ[0] = H[0];
        Q.Q.evaluate_raw(H[0], sp(Qh, k));
        compose_raw(csp(Qh, k), csp(HQ, k), out);
        out[0] = Qh[0] - x;
        if (k >= 1) out[1] -= 1.0;
    };
    return build_sampled(TailClass::Compact, Q.scale * C.lo, Q.scale * C.hi, h.grid().n, k, fn, res);
}

// ---- Theta ----

ThetaStage theta_step(const Diffeo1& u, const Diffeo1& f, const BlendMap& Q, const MatherConfig& cfg, double eps) {
    const Resolution res = cfg.resolution();
    Diffeo1 fu = staged("compose", [&] {
        if (!inside(f, cfg.D) || !inside(u, cfg.D)) throw PreconditionError("f and u must be supported in D");
        Diffeo1 r = compose(f, u, res);
        if (eps > 0.0) {
            const double n = k_alpha_norm(r, cfg.alpha, cfg.k);
            if (n > 3.0 * eps) throw PreconditionError("||f u||_{k,alpha} exceeds 3 eps");
        }
        return r;
    });
    Diffeo1 g = staged("blend", [&] { return conjugate_by(Q, fu, res); });
    Diffeo1 psi = staged("psi", [&] {
        Diffeo1 p = psi_reduce(g, cfg, true).psi;
        if (!inside(p, cfg.D)) throw ConstructionError("Psi g left D");
        return p;
    });
    return ThetaStage{std::move(fu), std::move(g), std::move(psi)};
}

CertificateChain assemble_chain(const Diffeo1& f, const Diffeo1& u0, const MatherConfig& cfg, int iterations,
                                std::vector<double> trace) {
    const int k = cfg.k;
    BlendMap Q = make_Q(cfg.D, cfg.E, k, cfg.resolution());
    ThetaStage st = theta_step(u0, f, Q, cfg);
    const PlateauField rho = make_rho(cfg.A);
    Chart chart = trajectory_chart(rho, k);
    Diffeo1 tau = time_t_map(rho, 1.0, k, cfg.resolution());
    ConjugacyCertificate C = conjugator(st.g, st.psi, chart, cfg, &tau);
    const double rb = blend_residual(Q.Q, st.fu, st.g);
    const double rc = dk(st.psi, u0, k);
    return CertificateChain{cfg,         f,           u0,         std::move(st.fu), std::move(Q.Q),
                            std::move(st.g), std::move(st.psi), std::move(C.tau), std::move(C.lambda),
                            C.b,         C.residual,  rb,         rc,               iterations,
                            std::move(trace)};
}

FixedPointResult fixed_point_search(const Diffeo1& f, const MatherConfig& cfg, const FixedPointOptions& opt) {
    if (f.tail_class() != TailClass::Compact) throw PreconditionError("fixed_point_search: compact map expected");
    if (f.order() < cfg.k) throw InvalidArgument("fixed_point_search: jet order below k");
    if (!inside(f, cfg.D)) throw PreconditionError("fixed_point_search: f must be supported in D");
    if (opt.eps > 0.0 && k_alpha_norm(f, cfg.alpha, cfg.k) > opt.eps)
        throw PreconditionError("fixed_point_search: f outside the eps-ball");
    BlendMap Q = make_Q(cfg.D, cfg.E, f.order(), cfg.resolution());
    FixedPointResult out;
    Diffeo1 u = Diffeo1::identity(TailClass::Compact, f.grid(), f.order());
    for (int n = 1; n <= opt.max_iter; ++n) {
        ThetaStage st = theta_step(u, f, Q, cfg, opt.eps);
        const double r = dk(st.psi, u, cfg.k);
        out.trace.push_back(r);
        out.iterations = n;
        out.residual = r;
        if (!std::isfinite(r)) {
            out.stop_reason = "non-finite residual";
            return out;
        }
        if (r <= opt.tol) {
            out.converged = true;
            out.stop_reason = "residual below tolerance";
            out.u0 = u;
            out.chain = assemble_chain(f, u, cfg, n, out.trace);
            return out;
        }
        u = std::move(st.psi);
    }
    out.stop_reason = "iteration budget exhausted";
    return out;
}

// ---- verification ----

bool VerifyReport::ok() const {
    if (items.empty()) return false;
    for (const auto& i : items)
        if (!i.ok) return false;
    return true;
}

VerifyReport verify_certificate(const CertificateChain& ch, const VerifyTolerances& tol) {
    VerifyReport rep;
    auto add = [&](std::string name, double v, double bound) {
        rep.items.push_back({std::move(name), v, bound, std::isfinite(v) && v <= bound});
    };
    const MatherConfig& cfg = ch.cfg;
    const int A = cfg.A, k = cfg.k;
    const PlateauField rho = make_rho(A);

    // (a) conjugacy through the plateau flow
    const double ra = conjugacy_residual(ch.tau, ch.lambda, ch.g, ch.psi, A);
    add("conjugacy: max |tau psi - lambda tau g lambda^-1|", ra, tol.conjugacy);
    add("conjugacy replay", ra, tol.replay_factor * ch.residual_conjugacy + 1e-12);
    const Interval S = rho.support();
    add("tau is the time-1 flow",
        max_over(S.lo, S.hi, 401, [&](double x) { return std::abs(ch.tau(x) - flow(rho, 1.0, x)); }), tol.flow);
    {
        auto supp = support_interval(ch.lambda);
        double out = 0.0;
        if (supp) {
            const double cell = ch.lambda.grid().step();
            out = std::max({0.0, -2.0 * A - cell - supp->lo, supp->hi - (2.0 * A + 1.0 + cell)});
        }
        add("lambda supported in [-2A, 2A+1]", out, 0.0);
    }
    {
        RollInfo ig = roll_info(ch.g), ip = roll_info(ch.psi);
        double dev = max_over(0.0, 1.0, 256, [&](double x) {
            return std::abs(gamma_value(ch.psi, ip, gamma_inverse_value(ch.g, ig, x)) - x - ch.b);
        });
        add("Gamma psi (Gamma g)^-1 = T(b)", dev, cfg.tol.tol_b);
        add("b = -Gamma g(0)", std::abs(ch.b + (gamma_value(ch.g, ig, 0.0) - 0.0)), cfg.tol.tol_b);
    }

    // (b) the blend conjugation
    const double rb = blend_residual(ch.Q, ch.fu, ch.g);
    add("blend: max |Q fu - g Q|", rb, tol.blend);
    add("blend replay", rb, tol.replay_factor * ch.residual_blend + 1e-12);
    add("fu = f o u0", max_over(cfg.D.lo - 1, cfg.D.hi + 1, 2001,
                                [&](double x) { return std::abs(ch.fu(x) - ch.f(ch.u0(x))); }),
        tol.blend);
    add("g supported in E", inside(ch.g, cfg.E) ? 0.0 : 1.0, 0.0);

    // (c) the fixed point
    double psi_gap = 0.0;
    try {
        Diffeo1 again = psi_reduce(ch.g, cfg, true).psi;
        MetricOptions o;
        o.k = 0;
        psi_gap = metric(again, ch.psi, MetricKind::C0, nullptr, o);
    } catch (const Error&) {
        psi_gap = std::numeric_limits<double>::infinity();
    }
    add("psi = Psi(g)", psi_gap, 1e-9);
    const double rc = dk(ch.psi, ch.u0, k);
    add("fixed point: d_k(psi, u0)", rc, tol.fixed);
    add("fixed point replay", rc, tol.replay_factor * ch.residual_fixed + 1e-12);
    add("u0 supported in D", inside(ch.u0, cfg.D) && inside(ch.f, cfg.D) ? 0.0 : 1.0, 0.0);
    return rep;
}

// ---- serialization ----

json to_json(const CertificateChain& c) {
    json j;
    j["format"] = "mather-certificate";
    j["version"] = 1;
    j["config"] = to_json(c.cfg);
    j["field"] = {{"A", c.cfg.A}};
    j["maps"] = {{"f", to_json(c.f)},     {"u0", to_json(c.u0)},   {"fu", to_json(c.fu)},
                 {"Q", to_json(c.Q)},     {"g", to_json(c.g)},     {"psi", to_json(c.psi)},
                 {"tau", to_json(c.tau)}, {"lambda", to_json(c.lambda)}};
    j["b"] = c.b;
    j["residuals"] = {{"conjugacy", c.residual_conjugacy}, {"blend", c.residual_blend}, {"fixed", c.residual_fixed}};
    j["iterations"] = c.iterations;
    j["trace"] = c.trace;
    return j;
}

CertificateChain chain_from_json(const json& j) {
    try {
        if (j.value("format", "") != "mather-certificate") throw InvalidArgument("not a certificate chain");
        MatherConfig cfg = config_from_json(j.at("config"));
        if (j.at("field").at("A").get<int>() != cfg.A) throw InvalidArgument("field parameter disagrees with config");
        const json& m = j.at("maps");
        const json& r = j.at("residuals");
        return CertificateChain{cfg,
                                diffeo_from_json(m.at("f")),
                                diffeo_from_json(m.at("u0")),
                                diffeo_from_json(m.at("fu")),
                                diffeo_from_json(m.at("Q")),
                                diffeo_from_json(m.at("g")),
                                diffeo_from_json(m.at("psi")),
                                diffeo_from_json(m.at("tau")),
                                diffeo_from_json(m.at("lambda")),
                                j.at("b").get<double>(),
                                r.at("conjugacy").get<double>(),
                                r.at("blend").get<double>(),
                                r.at("fixed").get<double>(),
                                j.at("iterations").get<int>(),
                                j.at("trace").get<std::vector<double>>()};
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed certificate chain: ") + e.what());
    } catch (const InvariantViolation& e) {
        throw InvalidArgument(std::string("malformed certificate chain: ") + e.what());
    }
}

json to_json(const VerifyReport& r) {
    json items = json::array();
    for (const auto& i : r.items) items.push_back({{"name", i.name}, {"value", i.value}, {"bound", i.bound}, {"ok", i.ok}});
    return {{"ok", r.ok()}, {"items", items}};
}

json to_json(const FixedPointResult& r) {
    json j = {{"converged", r.converged},
              {"iterations", r.iterations},
              {"residual", r.residual},
              {"trace", r.trace},
              {"stop_reason", r.stop_reason}};
    if (r.chain) j["chain"] = to_json(*r.chain);
    return j;
}

}  // namespace mather
