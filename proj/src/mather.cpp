#include "mather/mather.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "mather/error.hpp"
#include "mather/parallel.hpp"

namespace mather {

namespace {

constexpr int kMax = max_jet_order;
using Buf = std::array<double, kMax + 1>;

std::span<double> sp(Buf& b, int k) { return {b.data(), static_cast<std::size_t>(k + 1)}; }
std::span<const double> csp(const Buf& b, int k) { return {b.data(), static_cast<std::size_t>(k + 1)}; }

Interval sup_region(const Diffeo1& f) {
    const Grid& g = f.grid();
    switch (f.tail_class()) {
        case TailClass::Compact: return {g.a, g.b};
        case TailClass::Periodic: return {g.a, g.a + 1.0};
        case TailClass::EventuallyPeriodic: return {g.a, g.b + 1.0};
    }
    return {g.a, g.b};
}

// sup |u^(order)| on a lattice eight times finer than the nodes
double sup_order(const Diffeo1& f, int order) {
    Interval R = sup_region(f);
    const double step = f.grid().step() / 8.0;
    const long N = std::lround(R.length() / step) + 1;
    double m = 0.0;
    Buf b{};
    for (long i = 0; i < N; ++i) {
        f.displacement(R.lo + step * i, sp(b, order));
        m = std::max(m, std::abs(b[order]));
    }
    return m;
}

Taylor from_derivatives(std::span<const double> d) {
    Taylor t(static_cast<int>(d.size()) - 1, 0.0);
    double fact = 1.0;
    for (std::size_t o = 0; o < d.size(); ++o) {
        if (o > 0) fact *= static_cast<double>(o);
        t[static_cast<int>(o)] = d[o] / fact;
    }
    return t;
}

bool is_constant(const Taylor& t, double c) {
    if (t.value() != c) return false;
    for (int i = 1; i <= t.order(); ++i)
        if (t[i] != 0.0) return false;
    return true;
}

// root of y + w(y) = x for a displacement w with |w| <= bound and w' > -1
double solve_shifted(const std::function<void(double, double&, double&)>& w, double x, double bound) {
    double lo = x - bound - 1e-12, hi = x + bound + 1e-12;
    double y = x, val = 0, der = 0;
    // bound is a node sup; the interpolant may exceed it between nodes
    for (int it = 0; it < 60; ++it) {
        w(lo, val, der);
        if (lo + val - x <= 0) break;
        lo -= hi - lo;
    }
    for (int it = 0; it < 60; ++it) {
        w(hi, val, der);
        if (hi + val - x >= 0) break;
        hi += hi - lo;
    }
    for (int it = 0; it < 200; ++it) {
        w(y, val, der);
        double F = y + val - x;
        if (F > 0) hi = y; else lo = y;
        double yn = y - F / (1.0 + der);
        if (!(yn >= lo && yn <= hi)) yn = 0.5 * (lo + hi);
        if (std::abs(yn - y) <= 1e-15 * std::max(1.0, std::abs(y))) return yn;
        y = yn;
    }
    return y;
}

int cells_for(double width, double step) { return std::max(1, static_cast<int>(std::ceil(width / step - 1e-9))); }

}  // namespace

// ---- configuration ----

MatherConfig make_config(int k, const ConcaveModulus& alpha, int A, const Tolerances& tol) {
    if (k < 1 || k > kMax) throw InvalidArgument("make_config: k must be in [1, 12]");
    if (A < 1) throw InvalidArgument("make_config: A must be >= 1");
    MatherConfig c;
    c.k = k;
    c.alpha = alpha;
    c.A = A;
    c.tol = tol;
    const double a2 = 2.0 * A;
    if (k >= 2) {
        c.D = {-2, 2};
        c.E = {-a2, a2};
        c.B = 1;
    } else {
        c.D = {-a2, a2};
        c.E = {-2, 2};
        c.B = A;
    }
    c.J = {-a2, a2};
    c.eps0 = 1.0 / (100.0 * (2.0 + zeta_slope_bound()));
    c.delta0 = k <= 2 ? 1e-3 : 1e-3 * std::pow(10.0, -(k - 2));
    return c;
}

Taylor zeta(const Taylor& x) {
    Taylor y = x - std::round(x.value());
    if (y.value() < 0) y = -y;
    const double d = y.value();
    if (d <= 0.1) return Taylor(x.order(), 1.0);
    if (d >= 0.4) return Taylor(x.order(), 0.0);
    return smooth_step((0.4 - y) * (1.0 / 0.3));
}

double zeta(double x) { return zeta(Taylor(0, x)).value(); }

double zeta_slope_bound() {
    static const double bound = [] {
        double m = 0.0;
        for (int i = 0; i <= 30000; ++i) {
            double x = 0.1 + 0.3 * i / 30000.0;
            m = std::max(m, std::abs(zeta(Taylor::variable(1, x))[1]));
        }
        return m;
    }();
    return bound;
}

// ---- rolling up ----

RollInfo roll_info(const Diffeo1& g) {
    if (g.tail_class() != TailClass::Compact) throw PreconditionError("rolling up needs a compactly supported map");
    RollInfo info;
    info.a = sup_order(g, 0);
    if (!(info.a < 1.0)) throw PreconditionError("rolling up needs sup |g - Id| < 1");
    auto supp = support_interval(g);
    info.identity = !supp.has_value();
    info.support = supp.value_or(g.core());
    info.s = static_cast<int>(std::ceil((info.support.length() + 1.0) / (1.0 - info.a)));
    return info;
}

long gamma_r(const RollInfo& info, double x) { return static_cast<long>(std::ceil(x - info.support.lo)); }

void gamma_word(const Diffeo1& g, double x, long r, long s, std::span<double> out) {
    const int k = static_cast<int>(out.size()) - 1;
    Buf P{}, U{}, N{};
    P[0] = x - static_cast<double>(r);
    if (k >= 1) P[1] = 1.0;
    double disp = 0.0;
    for (long j = 0; j < s; ++j) {
        g.displacement(P[0], sp(U, k));
        // jet of g at P[0]; the displacement sum carries the value exactly
        const double p = P[0];
        U[0] += p;
        if (k >= 1) U[1] += 1.0;
        compose_raw(csp(U, k), csp(P, k), sp(N, k));
        disp += U[0] - p;
        N[0] = U[0] + 1.0;
        P = N;
    }
    out[0] = disp;
    if (k >= 1) out[1] = P[1] - 1.0;
    for (int i = 2; i <= k; ++i) out[i] = P[i];
}

double gamma_value(const Diffeo1& g, const RollInfo& info, double x) {
    if (info.identity) return x;
    double v[1];
    gamma_word(g, x, gamma_r(info, x), info.s, std::span<double>(v, 1));
    return x + v[0];
}

double gamma_inverse_value(const Diffeo1& g, const RollInfo& info, double x) {
    if (info.identity) return x;
    const long r = static_cast<long>(std::ceil(info.support.hi - x));
    double p = x + static_cast<double>(r);
    double disp = 0.0;
    for (int j = 0; j < info.s; ++j) {
        double q = p - 1.0;
        double z = g.inverse_value(q, 1e-16);
        disp += z - q;
        p = z;
    }
    return x + disp;
}

Diffeo1 gamma_roll(const Diffeo1& g, const Resolution& res) {
    RollInfo info = roll_info(g);
    const int k = g.order();
    const int n0 = std::max(65, cells_for(1.0, g.grid().step()) + 1);
    if (info.identity) return Diffeo1::identity(TailClass::Periodic, {0.0, 1.0, n0}, k);
    NodeFn fn = [&](double x, std::span<double> out) { gamma_word(g, x, gamma_r(info, x), info.s, out); };
    return build_sampled(TailClass::Periodic, 0.0, 1.0, n0, k, fn, res);
}

SlackReport gamma_norm_check(const Diffeo1& f, const MatherConfig& cfg) {
    const double nf = k_alpha_norm(f, cfg.alpha, cfg.k);
    if (!(nf < cfg.delta0)) throw PreconditionError("gamma_norm_check: map outside the delta0-ball");
    RollInfo info = roll_info(f);
    Diffeo1 G = gamma_roll(f, cfg.resolution());
    const double ng = k_alpha_norm(G, cfg.alpha, cfg.k);
    const double len = info.identity ? 0.0 : info.support.length();
    SlackReport r;
    r.add("|Gamma f| <= 4(|I_f|+1)|f|", ng, 4.0 * (len + 1.0) * nf, cfg.tol.lemma_allowance);
    return r;
}

// ---- spreading ----

Diffeo1 recenter(const Diffeo1& g) {
    if (g.tail_class() != TailClass::Periodic) throw InvalidArgument("recenter: periodic map expected");
    const double g0 = g.displacement(0.0);
    std::vector<double> jets = g.jets();
    for (std::size_t i = 0; i < jets.size(); i += g.order() + 1) jets[i] -= g0;
    return Diffeo1(TailClass::Periodic, g.grid(), g.order(), std::move(jets));
}

Diffeo1 fraction_quotient(const Diffeo1& h, double c1, double c0, const Resolution& res) {
    if (h.tail_class() != TailClass::Periodic) throw InvalidArgument("fraction_quotient: periodic map expected");
    const int k = h.order();
    const Grid& g = h.grid();
    if (c1 == c0 || std::all_of(h.jets().begin(), h.jets().end(), [](double v) { return v == 0.0; }))
        return Diffeo1::identity(TailClass::Periodic, g, k);
    const double bound = std::abs(c0) * sup_order(h, 0);
    NodeFn fn = [&](double x, std::span<double> out) {
        Buf U{};
        if (c0 == 0.0) {
            h.displacement(x, sp(U, k));
            for (int i = 0; i <= k; ++i) out[i] = c1 * U[i];
            return;
        }
        auto w = [&](double y, double& v, double& d) {
            Buf b{};
            h.displacement(y, sp(b, std::min(k, 1)));
            v = c0 * b[0];
            d = k >= 1 ? c0 * b[1] : 0.0;
        };
        const double y = solve_shifted(w, x, bound);
        h.displacement(y, sp(U, k));
        Buf G0{}, G1{}, Inv{};
        for (int i = 0; i <= k; ++i) {
            G0[i] = c0 * U[i];
            G1[i] = c1 * U[i];
        }
        G0[0] += y;
        G1[0] += y;
        if (k >= 1) {
            G0[1] += 1.0;
            G1[1] += 1.0;
        }
        invert_raw(y, csp(G0, k), sp(Inv, k));
        Inv[0] = y;
        compose_raw(csp(G1, k), csp(Inv, k), out);
        out[0] = (y - x) + c1 * U[0];
        if (k >= 1) out[1] -= 1.0;
    };
    return build_sampled(TailClass::Periodic, g.a, g.a + 1.0, g.n, k, fn, res);
}

Diffeo1 discrete_isotopy(const Diffeo1& h, int B, int i, const Resolution& res) {
    if (h.tail_class() != TailClass::Periodic) throw InvalidArgument("discrete_isotopy: periodic map expected");
    if (B < 1 || i < 1 || i > B) throw InvalidArgument("discrete_isotopy: need 1 <= i <= B");
    if (h.order() >= 1 && !(sup_order(h, 1) < 1.0))
        throw PreconditionError("discrete_isotopy: needs |h' - 1| < 1");
    if (std::abs(h.displacement(0.0)) > 1e-10) throw PreconditionError("discrete_isotopy: h must fix 0");
    return fraction_quotient(h, static_cast<double>(i) / B, static_cast<double>(i - 1) / B, res);
}

namespace {

// pointwise pieces of the B = 1 spreading construction
struct Spread1 {
    const Diffeo1& g;
    double g0;
    int k;
    double bound;

    void uh(double y, std::span<double> out) const {
        g.displacement(y, out);
        out[0] -= g0;
    }

    // displacement jets of h0 at y; returns false where h0 = h
    bool u0(double y, std::span<double> out) const {
        Taylor Z = zeta(Taylor::variable(k, y));
        if (is_constant(Z, 0.0)) {
            std::fill(out.begin(), out.end(), 0.0);
            return true;
        }
        uh(y, out);
        if (is_constant(Z, 1.0)) return false;
        auto d = (Z * from_derivatives(out)).derivatives();
        std::copy(d.begin(), d.end(), out.begin());
        return true;
    }

    double h0_inverse(double x) const {
        auto w = [&](double y, double& v, double& d) {
            Buf b{};
            const int o = std::min(k, 1);
            Taylor Z = zeta(Taylor::variable(o, y));
            uh(y, sp(b, o));
            Taylor P = Z * from_derivatives(csp(b, o));
            v = P.value();
            d = o >= 1 ? P[1] : 0.0;
        };
        return solve_shifted(w, x, bound);
    }

    void u1(double x, std::span<double> out) const {
        const double y = h0_inverse(x);
        Buf H0{}, H{}, Inv{};
        if (!u0(y, sp(H0, k))) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        uh(y, sp(H, k));
        const double v0 = H0[0], vh = H[0];
        H0[0] += y;
        H[0] += y;
        if (k >= 1) {
            H0[1] += 1.0;
            H[1] += 1.0;
        }
        invert_raw(y, csp(H0, k), sp(Inv, k));
        Inv[0] = y;
        compose_raw(csp(H, k), csp(Inv, k), out);
        out[0] = vh - v0;
        if (k >= 1) out[1] -= 1.0;
    }
};

}  // namespace

Diffeo1 omega1_spread(const Diffeo1& g, const MatherConfig& cfg) {
    if (g.tail_class() != TailClass::Periodic) throw InvalidArgument("omega1_spread: periodic map expected");
    const int k = g.order();
    if (k < 1) throw InvalidArgument("omega1_spread: needs jets of order >= 1");
    const double slope = sup_order(g, 1);
    if (slope > cfg.eps0) throw PreconditionError("omega1_spread: |g' - 1| exceeds eps0");
    Spread1 S{g, g.displacement(0.0), k, 2.0 * sup_order(g, 0) + 1e-9};
    // the restrictions are only smooth when the windows are fixed to all orders
    Buf b{};
    double worst = 0.0;
    for (double x : {-1.5, -0.5}) {
        S.u0(x, sp(b, k));
        for (int i = 0; i <= k; ++i) worst = std::max(worst, std::abs(b[i]));
    }
    for (double x : {1.0, 2.0}) {
        S.u1(x, sp(b, k));
        for (int i = 0; i <= k; ++i) worst = std::max(worst, std::abs(b[i]));
    }
    if (worst > cfg.tol.surgery) throw ConstructionError("omega1_spread: window ends are not fixed; surgery refused");
    NodeFn fn = [&](double x, std::span<double> out) {
        if (x >= -1.5 && x <= -0.5) {
            S.u0(x, out);
        } else if (x >= 1.0 && x <= 2.0) {
            S.u1(x, out);
        } else {
            std::fill(out.begin(), out.end(), 0.0);
        }
    };
    const int n0 = 4 * cells_for(1.0, g.grid().step()) + 1;
    return build_sampled(TailClass::Compact, -2.0, 2.0, n0, k, fn, cfg.resolution());
}

Diffeo1 omega_spread(const Diffeo1& g, int B, const MatherConfig& cfg) {
    if (g.tail_class() != TailClass::Periodic) throw InvalidArgument("omega_spread: periodic map expected");
    if (B < 1) throw InvalidArgument("omega_spread: B must be >= 1");
    if (g.order() >= 1 && sup_order(g, 1) > cfg.eps0) throw PreconditionError("omega_spread: |g' - 1| exceeds eps0");
    const Diffeo1 h = recenter(g);
    std::vector<Diffeo1> pieces;
    double step = h.grid().step();
    for (int i = 1; i <= B; ++i) {
        pieces.push_back(omega1_spread(discrete_isotopy(h, B, i, cfg.resolution()), cfg));
        step = std::min(step, pieces.back().grid().step());
    }
    const int k = g.order();
    NodeFn fn = [&](double x, std::span<double> out) {
        int i = static_cast<int>(std::floor((x + 2.0 * B) / 4.0)) + 1;
        i = std::clamp(i, 1, B);
        const double c = -2.0 * B - 2.0 + 4.0 * i;
        pieces[i - 1].displacement(x - c, out);
    };
    const int n0 = cells_for(4.0 * B, step) + 1;
    (void)k;
    return build_sampled(TailClass::Compact, -2.0 * B, 2.0 * B, n0, g.order(), fn, cfg.resolution());
}

PsiResult psi_reduce(const Diffeo1& g, const MatherConfig& cfg, bool check_ball) {
    if (g.tail_class() != TailClass::Compact) throw PreconditionError("psi_reduce: compactly supported map expected");
    if (g.order() < cfg.k) throw InvalidArgument("psi_reduce: jet order below k");
    auto supp = support_interval(g);
    const double cell = g.grid().step() * (1 + 1e-9);
    if (supp && (supp->lo < cfg.E.lo - cell || supp->hi > cfg.E.hi + cell))
        throw PreconditionError("psi_reduce: support not inside E");
    const double nin = k_alpha_norm(g, cfg.alpha, cfg.k);
    if (check_ball && !(nin < cfg.delta0)) throw PreconditionError("psi_reduce: map outside the delta-ball");
    Diffeo1 G = gamma_roll(g, cfg.resolution());
    Diffeo1 P = omega_spread(G, cfg.B, cfg);
    const double nout = k_alpha_norm(P, cfg.alpha, cfg.k);
    return PsiResult{std::move(G), std::move(P), nin, nout};
}

// ---- conjugacy ----

LimitWord::LimitWord(const Diffeo1& u, const Diffeo1& v, const MatherConfig& cfg)
    : u_(u), v_(v), lo_(-2.0 * cfg.A), s_(0), cap_(cfg.tol.word_cap), a_(0.0) {
    for (const Diffeo1* m : {&u, &v}) {
        if (m->tail_class() != TailClass::Compact) throw PreconditionError("limit map: compactly supported maps expected");
        auto supp = support_interval(*m);
        const double cell = m->grid().step() * (1 + 1e-9);
        if (supp && (supp->lo < cfg.J.lo - cell || supp->hi > cfg.J.hi + cell))
            throw PreconditionError("limit map: support not inside J");
        a_ = std::max(a_, sup_order(*m, 0));
    }
    if (!(a_ < 1.0)) throw PreconditionError("limit map: needs d0({u, v}, Id) < 1");
    s_ = static_cast<int>(std::ceil((4.0 * cfg.A + 1.5) / (1.0 - a_)));
}

void LimitWord::jet(double x, std::span<double> out) const {
    const int k = static_cast<int>(out.size()) - 1;
    Buf P{}, F{}, Inv{}, N{};
    P[0] = x;
    if (k >= 1) P[1] = 1.0;
    if (x <= lo_) {
        std::copy_n(P.begin(), k + 1, out.begin());
        return;
    }
    int steps = 0;
    while (steps < s_ || P[0] > lo_) {
        if (steps >= cap_) throw ConstructionError("limit map: word length exceeds the cap");
        const double q = P[0] - 1.0;
        const double z = u_.inverse_value(q, 1e-16);
        u_.evaluate_raw(z, sp(F, k));
        invert_raw(z, csp(F, k), sp(Inv, k));
        P[0] = q;
        compose_raw(csp(Inv, k), csp(P, k), sp(N, k));
        N[0] = z;
        P = N;
        ++steps;
    }
    for (int j = 0; j < steps; ++j) {
        v_.evaluate_raw(P[0], sp(F, k));
        compose_raw(csp(F, k), csp(P, k), sp(N, k));
        N[0] = F[0] + 1.0;
        P = N;
    }
    std::copy_n(P.begin(), k + 1, out.begin());
}

double LimitWord::operator()(double x) const {
    double v[1];
    jet(x, std::span<double>(v, 1));
    return v[0];
}

Diffeo1 lambda_limit(const Diffeo1& u, const Diffeo1& v, const MatherConfig& cfg) {
    LimitWord W(u, v, cfg);
    const int k = std::min(u.order(), v.order());
    const double lo = -2.0 * cfg.A, hi = 2.0 * cfg.A + 1.5;
    // step 1/(2m) makes the seam 2A + 1/2 a node
    const double step = std::min(u.grid().step(), v.grid().step());
    const int m = static_cast<int>(std::ceil(1.0 / (2.0 * step) - 1e-9));
    const int n0 = static_cast<int>(std::lround((hi - lo) * 2.0 * m)) + 1;
    NodeFn fn = [&](double x, std::span<double> out) {
        W.jet(x, out);
        out[0] -= x;
        if (k >= 1) out[1] -= 1.0;
    };
    return build_sampled(TailClass::EventuallyPeriodic, lo, hi, n0, k, fn, cfg.resolution());
}

double conjugacy_residual(const Diffeo1& tau, const Diffeo1& lambda, const Diffeo1& u, const Diffeo1& v, int A,
                          int samples) {
    const double lo = -2.0 * A - 2.0, hi = 2.0 * A + 2.0;
    std::vector<double> r(samples);
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / (samples - 1);
        double lhs = tau(v(x));
        double rhs = lambda(tau(u(lambda.inverse_value(x))));
        r[i] = std::abs(lhs - rhs);
    });
    double m = 0.0;
    for (double v_ : r) m = std::max(m, v_);
    return m;
}

ConjugacyCertificate conjugator(const Diffeo1& u, const Diffeo1& v, const Chart& chart, const MatherConfig& cfg,
                                const Diffeo1* tau) {
    const int A = cfg.A;
    if (chart.field().A != A) throw InvalidArgument("conjugator: chart built for another A");
    const int k = std::min(u.order(), v.order());
    const PlateauField& rho = chart.field();

    // Gamma v (Gamma u)^{-1} must be a translation
    RollInfo iu = roll_info(u), iv = roll_info(v);
    const int M = 256;
    std::vector<double> d(M);
    for (int j = 0; j < M; ++j) {
        double x = static_cast<double>(j) / M;
        d[j] = gamma_value(v, iv, gamma_inverse_value(u, iu, x)) - x;
    }
    double b = 0.0;
    for (double e : d) b += e;
    b /= M;
    double dev = 0.0;
    for (double e : d) dev = std::max(dev, std::abs(e - b));
    if (dev > cfg.tol.tol_b) throw PreconditionError("conjugator: Gamma v (Gamma u)^{-1} is not a translation");

    LimitWord W(u, v, cfg);
    auto lambda0 = [&](double x, std::span<double> out) {
        const int o = static_cast<int>(out.size()) - 1;
        Buf Y{}, L{}, LY{}, P{};
        chart.inverse_jet(x, sp(Y, o));
        W.jet(Y[0], sp(L, o));
        compose_raw(csp(L, o), csp(Y, o), sp(LY, o));
        LY[0] = L[0];
        chart.jet(LY[0], sp(P, o));
        compose_raw(csp(P, o), csp(LY, o), out);
    };

    // the three pieces agree on their overlaps
    double left = 0.0, right = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double x = -2.0 * A - 1.0 + j / 101.0;
        double v0[1];
        lambda0(x, std::span<double>(v0, 1));
        left = std::max(left, std::abs(v0[0] - x));
        double y = 2.0 * A + 0.5 + 0.4 * j / 100.0;
        lambda0(y, std::span<double>(v0, 1));
        right = std::max(right, std::abs(v0[0] - flow(rho, b, y)));
    }
    if (left > cfg.tol.overlap || right > cfg.tol.overlap)
        throw ConstructionError("conjugator: pieces of lambda disagree on an overlap");

    NodeFn fn = [&](double x, std::span<double> out) {
        if (x <= -2.0 * A) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        if (x < 2.0 * A + 0.5) {
            lambda0(x, out);
        } else {
            flow_jet(rho, b, x, out);
        }
        out[0] -= x;
        if (k >= 1) out[1] -= 1.0;
    };
    const double step = std::min(u.grid().step(), v.grid().step());
    const double lo = -2.0 * A, hi = 2.0 * A + 1.0;
    Diffeo1 lam = build_sampled(TailClass::Compact, lo, hi, cells_for(hi - lo, step) + 1, k, fn, cfg.resolution());
    Diffeo1 t = tau ? *tau : time_t_map(rho, 1.0, k, cfg.resolution());
    const double res = conjugacy_residual(t, lam, u, v, A);
    return ConjugacyCertificate{A, std::move(t), std::move(lam), b, dev, left, right, res};
}

}  // namespace mather
