#include "suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "mather/error.hpp"
#include "mather/jet.hpp"
#include "mather/perfect.hpp"

namespace mather::suite {

namespace {

// Uniform doubles from the raw 64-bit stream, so reports do not depend on the
// standard library's distribution implementations.
class Rng {
public:
    Rng(std::uint64_t seed, int stream) : gen_(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(stream)) {}
    double uniform(double a, double b) { return a + (b - a) * static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    int integer(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    bool coin() { return (gen_() >> 63) != 0; }

private:
    std::mt19937_64 gen_;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void add(CheckResult& r, int trial, const std::string& q, double value, double bound) {
    r.slacks.push_back({r.name, trial, q, value, bound, bound - value});
}

double c0_gap(const std::function<double(double)>& f, const std::function<double(double)>& g, double lo,
              double hi, int samples = 1000) {
    double d = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double x = lo + (hi - lo) * i / samples;
        d = std::max(d, std::abs(f(x) - g(x)));
    }
    return d;
}

Diffeo1 bump_map(double eps, double c, double r, int k = 2, int n = 257) {
    PresetParams p;
    p.eps = eps;
    p.c = c;
    p.r = r;
    p.k = k;
    p.n = n;
    return from_preset("smooth_bump_displacement", p);
}

Diffeo1 random_bump(Rng& rng, double lo, double hi, double eps_max, int k = 2, int n = 257) {
    const double r = 0.3 + 0.4 * rng.uniform(0, 1) * (hi - lo) / 2;
    const double c = lo + r + rng.uniform(0, 1) * (hi - lo - 2 * r);
    const double e = eps_max * rng.uniform(0.2, 1.0) * (rng.coin() ? -1 : 1);
    return bump_map(e, c, r, k, n);
}

// three-mode periodic map with sup |u'| about `slope`
Diffeo1 random_wiggle(Rng& rng, int k, double slope, bool fix, int n = 257) {
    PresetParams p;
    p.amps.resize(3);
    p.phases.resize(3);
    double s = 0.0;
    for (int m = 0; m < 3; ++m) {
        p.amps[m] = rng.uniform(-1, 1) / (m + 1);
        p.phases[m] = rng.uniform(0, 2 * std::numbers::pi);
        s += std::abs(p.amps[m]) * 2 * std::numbers::pi * (m + 1);
    }
    for (double& a : p.amps) a *= slope / s;
    p.fix_origin = fix;
    p.k = k;
    p.n = n;
    return from_preset("periodic_wiggle", p);
}

// ---- polynomial oracle for jets ----

using Poly = std::vector<double>;

Poly mul(const Poly& a, const Poly& b, std::size_t cap = SIZE_MAX) {
    Poly r(std::min(a.size() + b.size() - 1, cap), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size() && i + j < r.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

Poly compose_poly(const Poly& f, const Poly& g) {
    Poly r{f.back()};
    for (std::size_t i = f.size() - 1; i-- > 0;) {
        r = mul(r, g);
        r[0] += f[i];
    }
    return r;
}

// derivatives 0..k of p at x by repeated symbolic differentiation
std::vector<double> derivs(Poly p, double x, int k) {
    std::vector<double> out(k + 1, 0.0);
    for (int m = 0; m <= k; ++m) {
        double v = 0.0;
        for (std::size_t i = p.size(); i-- > 0;) v = v * x + p[i];
        out[m] = v;
        Poly d(std::max<std::size_t>(p.size(), 2) - 1, 0.0);
        for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = p[i] * static_cast<double>(i);
        p = d;
    }
    return out;
}

// Taylor coefficients of p at x (shifted polynomial)
Poly shift(const Poly& p, double x) { return compose_poly(p, Poly{x, 1.0}); }

// series reversion: q with p(q(e)) = e mod e^{k+1}, for p(0) = 0, p'(0) > 0
Poly revert(const Poly& p, int k) {
    Poly a(k + 1, 0.0);
    for (int i = 0; i <= k && i < static_cast<int>(p.size()); ++i) a[i] = p[i];
    Poly q(k + 1, 0.0);
    if (k >= 1) q[1] = 1.0 / a[1];
    for (int it = 0; it < k; ++it) {
        Poly rest(k + 1, 0.0), pw = q;
        for (int i = 2; i <= k; ++i) {
            pw = mul(pw, q, k + 1);
            for (int j = 0; j <= k; ++j) rest[j] += a[i] * pw[j];
        }
        Poly next(k + 1, 0.0);
        next[1] = 1.0;
        for (int j = 0; j <= k; ++j) next[j] = (next[j] - rest[j]) / a[1];
        q = next;
    }
    return q;
}

Poly random_poly(Rng& rng, int deg) {
    Poly p(deg + 1);
    for (double& c : p) c = rng.uniform(-1, 1);
    return p;
}

Jet jet_from(std::vector<double> d, double base) {
    Jet j;
    j.base = base;
    j.d = std::move(d);
    return j;
}

std::int64_t bell(int n) {
    std::vector<std::int64_t> row{1};
    for (int i = 1; i <= n; ++i) {
        std::vector<std::int64_t> next{row.back()};
        for (auto v : row) next.push_back(next.back() + v);
        row = next;
    }
    return row.front();
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

// ---- checks ----

CheckResult check_jets(const SuiteOptions& opt) {
    CheckResult r{1, "jets"};
    Timer t;
    Rng rng(opt.seed, 1);
    double worst_c = 0.0, worst_i = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = rng.integer(1, 6);
        const Poly f = random_poly(rng, rng.integer(1, 6)), g = random_poly(rng, rng.integer(1, 6));
        const double x = rng.uniform(-1, 1);
        const auto gd = derivs(g, x, k);
        const auto want = derivs(compose_poly(f, g), x, k);
        const Jet got = compose_jets(jet_from(derivs(f, gd[0], k), gd[0]), jet_from(gd, x));
        double e = 0.0;
        for (int m = 0; m <= k; ++m) e = std::max(e, rel_err(got.d[m], want[m]));
        worst_c = std::max(worst_c, e);
        add(r, trial, "compose_rel_err", e, 1e-9);

        // invertible polynomial: slope at x forced into [0.5, 1.5]
        Poly h = random_poly(rng, rng.integer(1, 6));
        h.resize(std::max<std::size_t>(h.size(), 2), 0.0);
        h[1] += rng.uniform(0.5, 1.5) - derivs(h, x, 1)[1];
        const auto hd = derivs(h, x, k);
        Poly local = shift(h, x);
        local[0] = 0.0;
        const Poly q = revert(local, k);
        const Jet inv = invert_jet(jet_from(hd, x));
        double ei = rel_err(inv.d[0], x);
        double fact = 1.0;
        for (int m = 1; m <= k; ++m) {
            fact *= m;
            ei = std::max(ei, rel_err(inv.d[m], q[m] * fact));
        }
        worst_i = std::max(worst_i, ei);
        add(r, trial, "invert_rel_err", ei, 1e-9);
    }
    bool bell_ok = true;
    for (int k = 1; k <= 10; ++k) {
        const auto s = table(k).coefficient_sum();
        bell_ok = bell_ok && s == bell(k);
        add(r, k, "bell_sum_gap", std::abs(static_cast<double>(s - bell(k))), 0.0);
    }
    r.seconds = t.seconds();
    const double budget = 10.0 * opt.time_scale;
    r.passed = worst_c <= 1e-9 && worst_i <= 1e-9 && bell_ok && r.seconds < budget;
    r.metrics = {{"pairs", 1000}, {"compose_worst_rel", worst_c}, {"invert_worst_rel", worst_i}, {"bell_ok", bell_ok}};
    r.summary = "1000 pairs, compose rel " + fmt(worst_c) + ", invert rel " + fmt(worst_i) +
                (bell_ok ? ", Bell sums k<=10 exact" : ", Bell sums differ");
    return r;
}

CheckResult check_lcm(const SuiteOptions& opt) {
    CheckResult r{2, "lcm"};
    Timer t;
    Rng rng(opt.seed, 2);
    bool ok = true;
    int points = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.integer(100, 600);
        const double rough = rng.uniform(0.0, 1.0);
        std::vector<double> v(n);
        double walk = 0.0;
        for (int i = 0; i < n; ++i) {
            walk += rough * rng.uniform(-1, 1);
            v[i] = walk + std::sin(7.0 * rng.uniform(0.5, 1.5) * i / n);
        }
        const auto osc = oscillation_modulus(v, 0.0, 1.0);
        const auto m = least_concave_majorant(osc.t, osc.mu);
        double lo_slack = INFINITY, hi_slack = INFINITY;
        for (std::size_t i = 0; i < osc.t.size(); ++i) {
            const double b = m.beta0(osc.t[i]);
            ok = ok && osc.mu[i] <= b && b <= 2.0 * osc.mu[i];
            lo_slack = std::min(lo_slack, b - osc.mu[i]);
            hi_slack = std::min(hi_slack, 2.0 * osc.mu[i] - b);
            ++points;
        }
        add(r, trial, "beta0_minus_mu_min", -lo_slack, 0.0);
        add(r, trial, "two_mu_minus_beta0_min", -hi_slack, 0.0);
    }
    r.seconds = t.seconds();
    r.passed = ok && r.seconds < 1.0 * opt.time_scale;
    r.metrics = {{"profiles", 20}, {"abscissae", points}};
    r.summary = std::string("20 profiles, ") + std::to_string(points) + " abscissae, sandwich " +
                (ok ? "holds exactly" : "violated");
    return r;
}

CheckResult check_tameness(const SuiteOptions&) {
    CheckResult r{3, "tameness"};
    Timer t;
    const auto xs = geometric_grid(1e-9, 1e3, 512);
    const std::vector<double> ts{0.5, 0.25, 0.1, 0.01};
    bool ok = true;
    double worst_F = 0.0;
    int trial = 0;
    for (double s : {0.25, 0.5, 0.75}) {
        const auto a = holder(s);
        const auto v = classify_tameness(a, ts, xs);
        ok = ok && v.sup_tame.verdict == Verdict::Yes && v.sub_tame.verdict == Verdict::Yes;
        add(r, trial, "sup_tame_margin", -v.sup_tame.margin, 0.0);
        add(r, trial, "sub_tame_margin", -v.sub_tame.margin, 0.0);
        for (double tt : ts) {
            const double e = std::abs(tameness_F(a, tt, xs) - std::pow(tt, 1 - s));
            worst_F = std::max(worst_F, e);
            add(r, trial, "F_minus_power", e, 1e-10);
        }
        ++trial;
    }
    const auto lip = classify_tameness(holder(1.0), ts, xs);
    const bool lip_ok = lip.sub_tame.verdict == Verdict::Yes && lip.sup_tame.verdict == Verdict::Inconclusive;
    r.seconds = t.seconds();
    r.passed = ok && lip_ok && worst_F <= 1e-10;
    r.metrics = {{"holder_yes_yes", ok}, {"lipschitz_sub_yes_sup_inconclusive", lip_ok}, {"F_worst", worst_F}};
    r.summary = std::string("s in {0.25,0.5,0.75} ") + (ok ? "Yes/Yes" : "not Yes/Yes") + ", s = 1 " +
                (lip_ok ? "sub Yes, sup Inconclusive" : "unexpected verdicts") + ", |F - t^(1-s)| " + fmt(worst_F);
    return r;
}

CheckResult check_gamma(const SuiteOptions& opt) {
    CheckResult r{4, "gamma"};
    Timer t;
    Rng rng(opt.seed, 4);
    auto id = Diffeo1::identity(TailClass::Compact, {-1.0, 1.0, 33}, 2);
    const auto G0 = gamma_roll(id);
    bool id_exact = std::all_of(G0.jets().begin(), G0.jets().end(), [](double v) { return v == 0.0; });
    double worst_rs = 0.0, worst_equi = 0.0, worst_size = -INFINITY;
    for (int trial = 0; trial < 50; ++trial) {
        auto g = random_bump(rng, -2.0, 2.0, 0.05);
        auto info = roll_info(g);
        double rs = 0.0;
        for (int i = 0; i <= 500; ++i) {
            const double x = -1.5 + 4.0 * i / 500;
            const long rr = gamma_r(info, x);
            double a[3], b[3], c[3];
            gamma_word(g, x, rr, info.s, a);
            gamma_word(g, x, rr + 1, info.s + 1, b);
            gamma_word(g, x, rr - 1, info.s + 2, c);
            rs = std::max({rs, std::abs(a[0] - b[0]), std::abs(a[0] - c[0])});
        }
        worst_rs = std::max(worst_rs, rs);
        add(r, trial, "rs_independence", rs, 1e-9);

        auto G = gamma_roll(g);
        const double dev = c0_gap([&](double x) { return G(x); }, [](double x) { return x; }, 0.0, 1.0, 4000);
        const double bound = info.s * info.a;
        worst_size = std::max(worst_size, dev - bound * (1 + 1e-12));
        add(r, trial, "gamma_sup_dev", dev, bound * (1 + 1e-12));

        const double b = rng.uniform(-3, 3);
        auto Gb = gamma_roll(translate_conjugate(g, b));
        const double e =
            c0_gap([&](double x) { return Gb(x); }, [&](double x) { return b + G(x - b); }, -1.0, 2.0, 1000);
        worst_equi = std::max(worst_equi, e);
        add(r, trial, "equivariance", e, 1e-9);
    }
    r.seconds = t.seconds();
    r.passed = id_exact && worst_rs <= 1e-9 && worst_size <= 0.0 && worst_equi <= 1e-9;
    r.metrics = {{"identity_exact", id_exact}, {"rs_worst", worst_rs}, {"equivariance_worst", worst_equi},
                 {"size_excess_worst", worst_size}};
    r.summary = std::string("Gamma(Id) ") + (id_exact ? "exact" : "not exact") + ", (r,s) " + fmt(worst_rs) +
                ", size bound " + (worst_size <= 0 ? "holds" : "fails") + ", equivariance " + fmt(worst_equi) +
                " (50 maps)";
    return r;
}

CheckResult check_roundtrip(const SuiteOptions& opt) {
    CheckResult r{5, "roundtrip"};
    Timer t;
    Rng rng(opt.seed, 5);
    struct Case {
        int k, B;
    };
    double worst = 0.0;
    int trial = 0;
    for (Case c : {Case{2, 1}, Case{1, 2}, Case{1, 4}}) {
        auto cfg = make_config(c.k, holder(0.5), c.B);
        for (int i = 0; i < 20; ++i, ++trial) {
            auto g = random_wiggle(rng, c.k, cfg.eps0 * rng.uniform(0.05, 0.5), false);
            auto W = omega_spread(g, c.B, cfg);
            auto back = gamma_roll(W);
            auto h = recenter(g);
            const double e = c0_gap([&](double x) { return back(x); }, [&](double x) { return h(x); }, 0.0, 1.0);
            worst = std::max(worst, e);
            add(r, trial, "k" + std::to_string(c.k) + "_B" + std::to_string(c.B), e, 1e-6);
        }
    }
    r.seconds = t.seconds();
    r.passed = worst <= 1e-6;
    r.metrics = {{"maps", trial}, {"worst_c0", worst}};
    r.summary = "60 maps over (k,B) = (2,1), (1,2), (1,4), worst C0 " + fmt(worst);
    return r;
}

CheckResult check_curve(const SuiteOptions& opt) {
    CheckResult r{6, "curve"};
    Timer t;
    const std::vector<int> As{1, 2, 4, 8};
    const auto pts = norm_reduction_curve(As, holder(0.5));
    const double target = std::pow(2.0, -0.5), lo = 0.75 * target, hi = 1.25 * target;
    bool ok = true;
    json rows = json::array(), factors = json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        rows.push_back({{"A", pts[i].A}, {"ratio", pts[i].ratio}, {"norm_psi", pts[i].norm_psi},
                        {"norm_g", pts[i].norm_g}});
        if (i == 0) continue;
        const double f = pts[i].ratio / pts[i - 1].ratio;
        factors.push_back(f);
        ok = ok && f >= lo && f <= hi;
        add(r, static_cast<int>(i), "doubling_factor_above", lo - f, 0.0);
        add(r, static_cast<int>(i), "doubling_factor_below", f - hi, 0.0);
    }
    r.seconds = t.seconds();
    r.passed = ok && r.seconds < 120.0 * opt.time_scale;
    r.metrics = {{"points", rows}, {"doubling_factors", factors}, {"window", {lo, hi}}};
    std::string fs;
    for (const auto& f : factors) fs += (fs.empty() ? "" : ", ") + fmt(f.get<double>());
    r.summary = "doubling factors " + fs + " vs [" + fmt(lo) + ", " + fmt(hi) + "]";
    return r;
}

CheckResult check_conjugacy(const SuiteOptions& opt) {
    CheckResult r{7, "conjugacy"};
    Timer t;
    Rng rng(opt.seed, 7);
    double worst_res = 0.0, worst_supp = -INFINITY;
    int trial = 0;
    for (int A : {1, 2}) {
        auto cfg = make_config(2, holder(0.5), A);
        auto phi = trajectory_chart(make_rho(A), 2);
        auto tau = time_t_map(make_rho(A), 1.0, 2, cfg.resolution());
        for (int i = 0; i < 5; ++i, ++trial) {
            auto g = random_bump(rng, cfg.E.lo, cfg.E.hi, 5e-7);
            auto P = psi_reduce(g, cfg);
            auto C = conjugator(g, P.psi, phi, cfg, &tau);
            worst_res = std::max(worst_res, C.residual);
            add(r, trial, "residual", C.residual, 1e-5);
            auto supp = support_interval(C.lambda);
            if (supp) {
                const double cell = C.lambda.grid().step();
                const double out = std::max(-2.0 * A - cell - supp->lo, supp->hi - (2.0 * A + 1 + cell));
                worst_supp = std::max(worst_supp, out);
                add(r, trial, "support_excess", out, 0.0);
            }
        }
    }
    r.seconds = t.seconds();
    r.passed = worst_res <= 1e-5 && worst_supp <= 0.0;
    r.metrics = {{"pairs", trial}, {"worst_residual", worst_res}, {"worst_support_excess", worst_supp}};
    r.summary = "10 pairs (A = 1, 2), worst residual " + fmt(worst_res) + ", lambda support " +
                (worst_supp <= 0 ? "inside" : "outside") + " [-2A, 2A+1]";
    return r;
}

CheckResult check_fragment(const SuiteOptions& opt) {
    CheckResult r{8, "fragment"};
    Timer t;
    Rng rng(opt.seed, 8);
    double worst = 0.0;
    bool supp_ok = true;
    int rejected = 0;
    for (int trial = 0; trial < 20;) {
        const double c = rng.uniform(1.0, 3.0), rad = rng.uniform(0.4, 1.0);
        auto g = bump_map(rng.uniform(-5e-3, 5e-3), c, rad, 2, 257);
        const int m = rng.integer(2, 4);
        const double lo = c - rad - 0.2, hi = c + rad + 0.2, w = (hi - lo) / m;
        Cover cover;
        for (int i = 0; i < m; ++i) {
            const double ov = rng.uniform(0.15, 0.35) * w;
            cover.elements.push_back({lo + i * w - ov, lo + (i + 1) * w + ov});
        }
        Fragmentation fr;
        try {
            fr = fragment(g, cover);
        } catch (const PreconditionError&) {
            ++rejected;
            continue;
        }
        auto prod = compose_all(fr.fragments);
        const double e = c0_gap([&](double x) { return prod(x); }, [&](double x) { return g(x); }, lo - 1, hi + 1, 4000);
        worst = std::max(worst, e);
        add(r, trial, "reconstruction", e, 1e-8);
        for (std::size_t i = 0; i < fr.fragments.size(); ++i) {
            auto s = support_interval(fr.fragments[i], 1e-9);
            if (!s) continue;
            const double out = std::max(cover.elements[i].lo - s->lo, s->hi - cover.elements[i].hi);
            supp_ok = supp_ok && out <= 0.0;
            add(r, trial, "support_excess_" + std::to_string(i), out, 0.0);
        }
        ++trial;
    }
    r.seconds = t.seconds();
    r.passed = worst <= 1e-8 && supp_ok;
    r.metrics = {{"instances", 20}, {"resampled", rejected}, {"worst_c0", worst}, {"supports_ok", supp_ok}};
    r.summary = "20 instances, worst reconstruction " + fmt(worst) + ", supports " +
                (supp_ok ? "contained" : "escape");
    return r;
}

CheckResult check_isotopy(const SuiteOptions& opt) {
    CheckResult r{9, "isotopy"};
    Timer t;
    const auto alpha = holder(0.5);
    double fit[2] = {0.0, 0.0};
    const int grids[2] = {257, 513};
    struct Row {
        int trial, B;
        double excess, nh2;
    };
    std::vector<Row> rows;
    for (int g = 0; g < 2; ++g) {
        Rng rng(opt.seed, 9);  // same batch at both resolutions
        for (int trial = 0; trial < 100; ++trial) {
            auto h = random_wiggle(rng, 2, 1e-3 * std::pow(30.0, rng.uniform(0, 1)), true, grids[g]);
            const double nh = k_alpha_norm(h, alpha, 2);
            for (int B : {2, 4, 8}) {
                for (int i = 1; i <= B; ++i) {
                    const double m = k_alpha_norm(discrete_isotopy(h, B, i), alpha, 2);
                    fit[g] = std::max(fit[g], (m - nh / B) / (nh * nh));
                    if (g == 0) rows.push_back({trial, B, m - nh / B, nh * nh});
                }
            }
        }
    }
    for (const auto& row : rows)
        add(r, row.trial, "excess_over_linear_B" + std::to_string(row.B), row.excess, fit[0] * row.nh2);
    r.seconds = t.seconds();
    const double stab = fit[0] > 0 ? std::abs(fit[1] / fit[0] - 1.0) : (fit[1] > 0 ? INFINITY : 0.0);
    r.passed = std::isfinite(fit[0]) && std::isfinite(fit[1]) && stab <= 0.3;
    r.metrics = {{"maps", 100}, {"c_coarse", fit[0]}, {"c_fine", fit[1]}, {"relative_change", stab},
                 {"grids", {grids[0], grids[1]}}};
    r.summary = "100 maps, B in {2,4,8}: fitted c " + fmt(fit[0]) + " (n=257), " + fmt(fit[1]) +
                " (n=513), change " + fmt(100 * stab) + "%";
    return r;
}

Diffeo1 calibrated_bump(double target, const ConcaveModulus& alpha) {
    const double n = k_alpha_norm(bump_map(1e-3, 0.0, 1.5), alpha, 2);
    return bump_map(1e-3 * target / n, 0.0, 1.5);
}

CheckResult check_fixpoint(const SuiteOptions&) {
    CheckResult r{10, "fixpoint"};
    Timer t;
    auto cfg = make_config(2, holder(0.5), 4);
    auto f = calibrated_bump(1e-3, cfg.alpha);
    auto run = fixed_point_search(f, cfg);
    auto again = fixed_point_search(f, cfg);
    const bool deterministic = to_json(run).dump() == to_json(again).dump();
    bool verified = false, replayed = false;
    if (run.chain) {
        auto rep = verify_certificate(*run.chain);
        verified = rep.ok();
        for (const auto& it : rep.items) add(r, 0, it.name, it.value, it.bound);
        const auto text = to_json(*run.chain).dump();
        auto back = chain_from_json(json::parse(text));
        replayed = verify_certificate(back).ok() && to_json(back).dump() == text;
    }
    for (std::size_t i = 0; i < run.trace.size(); ++i) add(r, static_cast<int>(i), "trace", run.trace[i], 1e-6);
    r.seconds = t.seconds();
    const bool emitted_ok = run.converged ? (verified && replayed) : !run.trace.empty();
    r.passed = deterministic && emitted_ok;
    r.metrics = {{"converged", run.converged}, {"iterations", run.iterations}, {"residual", run.residual},
                 {"stop_reason", run.stop_reason}, {"verified", verified}, {"replayed", replayed},
                 {"deterministic", deterministic}};
    r.summary = run.converged ? "converged in " + std::to_string(run.iterations) + " iterations, residual " +
                                    fmt(run.residual) + ", certificate " + (verified ? "verifies" : "fails") +
                                    ", replay " + (replayed ? "verifies" : "fails")
                              : "no convergence (" + run.stop_reason + "), trace of " +
                                    std::to_string(run.trace.size());
    r.summary += deterministic ? ", deterministic" : ", runs differ";
    return r;
}

// norm lemmas and the rolling-up size bound
CheckResult check_lemmas(const SuiteOptions& opt) {
    CheckResult r{0, "lemmas"};
    Timer t;
    Rng rng(opt.seed, 11);
    const auto a = holder(0.5);
    double worst = INFINITY;
    auto take = [&](const SlackReport& rep, int trial, const std::string& tag) {
        for (const auto& e : rep.entries) {
            r.slacks.push_back({r.name, trial, tag + ":" + e.name, e.lhs, e.slack + e.lhs, e.slack});
            worst = std::min(worst, e.slack);
        }
    };
    const Interval J{0, 1};
    for (int trial = 0; trial < 10; ++trial) {
        auto g = bump_map(rng.uniform(-1e-2, 1e-2), rng.uniform(0.3, 0.7), rng.uniform(0.1, 0.3), 3, 129);
        auto h = bump_map(rng.uniform(-1e-2, 1e-2), rng.uniform(0.3, 0.7), rng.uniform(0.1, 0.3), 3, 129);
        for (int i = 0; i <= 2; ++i) take(verify_domination(g, h, J, i, a), trial, "domination_i" + std::to_string(i));
        take(verify_lip_met(g, J, a), trial, "lip_met");

        auto sample = [](const std::function<double(double)>& fn) {
            SampledMap m;
            for (int i = 0; i <= 200; ++i) {
                m.x.push_back(i / 200.0);
                m.y.push_back(fn(i / 200.0));
            }
            return m;
        };
        const double p = rng.uniform(-3, 3), q = rng.uniform(-3, 3), w = rng.uniform(-3, 3);
        auto f1 = sample([&](double x) { return std::sin(p * x) + 0.3 * x * x; });
        auto f2 = sample([&](double x) { return std::cos(q * x + w); });
        auto d = sample([&](double x) { return x + 0.05 * std::sin(2 * std::numbers::pi * x) / (1 + trial); });
        take(verify_derivation(f1, f2, d, a), trial, "derivation");
        take(verify_subadditivity({f1, f2, d}, a), trial, "subadditivity");
    }
    auto cfg = make_config(2, a, 1);
    for (int trial = 0; trial < 5; ++trial)
        take(gamma_norm_check(random_bump(rng, -2.0, 2.0, 5e-7), cfg), trial, "gamma_norm");
    const auto grid = geometric_grid(1e-8, 1e2, 200);
    int trial = 0;
    for (const auto& m : {holder(0.25), holder(0.5), omega_z(0.5, 0.3)}) {
        for (double C : {0.25, 3.0}) {
            auto law = check_modulus_laws(m, C, grid);
            r.slacks.push_back({r.name, trial, "modulus_lower", -law.worst_lower, 0.0, law.worst_lower});
            r.slacks.push_back({r.name, trial, "modulus_upper", -law.worst_upper, 0.0, law.worst_upper});
            worst = std::min({worst, law.worst_lower, law.worst_upper});
        }
        ++trial;
    }
    r.seconds = t.seconds();
    r.passed = worst >= 0.0;
    r.metrics = {{"rows", r.slacks.size()}, {"min_slack", worst}};
    r.summary = std::to_string(r.slacks.size()) + " inequalities, min slack " + fmt(worst);
    return r;
}

using CheckFn = CheckResult (*)(const SuiteOptions&);

struct Entry {
    const char* name;
    CheckFn fn;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> e = {
        {"jets", check_jets},         {"lcm", check_lcm},           {"tameness", check_tameness},
        {"gamma", check_gamma},       {"roundtrip", check_roundtrip}, {"curve", check_curve},
        {"conjugacy", check_conjugacy}, {"fragment", check_fragment}, {"isotopy", check_isotopy},
        {"fixpoint", check_fixpoint}, {"lemmas", check_lemmas},
    };
    return e;
}

}  // namespace

std::vector<std::string> check_names() {
    std::vector<std::string> out;
    for (const auto& e : registry()) out.emplace_back(e.name);
    return out;
}

std::vector<std::string> suite_names() {
    std::vector<std::string> out{"all", "acceptance"};
    for (const auto& n : check_names()) out.push_back(n);
    return out;
}

CheckResult run_check(const std::string& name, const SuiteOptions& opt) {
    for (const auto& e : registry())
        if (name == e.name) return e.fn(opt);
    throw InvalidArgument("unknown check '" + name + "'");
}

std::vector<CheckResult> run_suite(const std::string& name, const SuiteOptions& opt) {
    std::vector<CheckResult> out;
    if (name == "all" || name == "acceptance") {
        for (const auto& e : registry()) {
            if (name == "all" && e.fn == check_curve) continue;
            if (name == "acceptance" && e.fn == check_lemmas) continue;
            out.push_back(e.fn(opt));
        }
        return out;
    }
    out.push_back(run_check(name, opt));
    return out;
}

json to_json(const CheckResult& r) {
    return {{"criterion", r.criterion}, {"name", r.name},       {"passed", r.passed},
            {"summary", r.summary},     {"metrics", r.metrics}, {"slack_rows", r.slacks.size()}};
}

std::string slacks_csv(const std::vector<CheckResult>& results) {
    std::ostringstream s;
    s.precision(17);
    s << "check,trial,quantity,value,bound,slack\n";
    for (const auto& r : results)
        for (const auto& row : r.slacks)
            s << row.check << ',' << row.trial << ',' << row.quantity << ',' << row.value << ',' << row.bound << ','
              << row.slack << '\n';
    return s.str();
}

std::vector<CurvePoint> norm_reduction_curve(const std::vector<int>& As, const ConcaveModulus& alpha,
                                             const CurveOptions& opt) {
    PresetParams p;
    p.eps = opt.eps;
    p.r = opt.r;
    p.octaves = opt.octaves;
    p.k = 2;
    p.A = 1;
    p.n = 3 * opt.nodes_per_unit + 1;
    const double norm_h = k_alpha_norm(from_preset("scaled_family", p), alpha, 2);
    std::vector<CurvePoint> out;
    for (int A : As) {
        if (A < 1) throw InvalidArgument("norm_reduction_curve: A must be >= 1");
        auto cfg = make_config(2, alpha, A);
        p.A = A;
        p.n = 3 * A * opt.nodes_per_unit + 1;
        auto g = from_preset("scaled_family", p);
        auto P = psi_reduce(g, cfg, false);
        CurvePoint c;
        c.A = A;
        c.norm_g = P.norm_in;
        c.norm_h = norm_h;
        c.norm_gamma = k_alpha_norm(P.gamma, alpha, 2);
        c.norm_psi = P.norm_out;
        c.ratio = c.norm_psi / norm_h;
        out.push_back(c);
    }
    return out;
}

}  // namespace mather::suite
