#include "mather/diffeo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "mather/error.hpp"
#include "mather/parallel.hpp"

namespace mather {

const char* to_string(TailClass c) {
    switch (c) {
        case TailClass::Compact: return "compact";
        case TailClass::Periodic: return "periodic";
        case TailClass::EventuallyPeriodic: return "ep";
    }
    return "?";
}

TailClass tail_class_from_string(const std::string& s) {
    if (s == "compact") return TailClass::Compact;
    if (s == "periodic") return TailClass::Periodic;
    if (s == "ep" || s == "eventually_periodic") return TailClass::EventuallyPeriodic;
    throw InvalidArgument("unknown tail class '" + s + "'");
}

namespace {

// ---- two-point Hermite interpolation ----
//
// On a cell of width h with local coordinate t in [0, 1] the interpolant is
// p(t) = sum_{j <= 2k+1} c_j t^j. The lower coefficients come from the left
// jets; the upper ones solve a fixed (k+1)x(k+1) system, inverted once per k.

constexpr int kMax = max_jet_order;

struct HermiteBasis {
    int k = 0;
    // inv[i][j]: inverse of M with M[i][j] = ff(k+1+j, i)
    std::array<std::array<double, kMax + 1>, kMax + 1> inv{};
    // ff[j][i] = j! / (j-i)!
    std::array<std::array<double, 2 * kMax + 2>, 2 * kMax + 2> ff{};
    std::array<double, kMax + 1> inv_fact{};
};

HermiteBasis make_basis(int k) {
    HermiteBasis hb;
    hb.k = k;
    const int deg = 2 * k + 1;
    for (int j = 0; j <= deg; ++j)
        for (int i = 0; i <= deg; ++i) {
            double v = i <= j ? 1.0 : 0.0;
            for (int q = 0; q < i && i <= j; ++q) v *= static_cast<double>(j - q);
            hb.ff[j][i] = v;
        }
    double f = 1.0;
    for (int i = 0; i <= k; ++i) {
        if (i > 0) f *= i;
        hb.inv_fact[i] = 1.0 / f;
    }
    // Gauss-Jordan on M
    const int m = k + 1;
    std::array<std::array<double, 2 * (kMax + 1)>, kMax + 1> aug{};
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) aug[i][j] = hb.ff[k + 1 + j][i];
        aug[i][m + i] = 1.0;
    }
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(aug[r][col]) > std::abs(aug[piv][col])) piv = r;
        std::swap(aug[col], aug[piv]);
        double p = aug[col][col];
        for (int j = 0; j < 2 * m; ++j) aug[col][j] /= p;
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            double fac = aug[r][col];
            if (fac == 0.0) continue;
            for (int j = 0; j < 2 * m; ++j) aug[r][j] -= fac * aug[col][j];
        }
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) hb.inv[i][j] = aug[i][m + j];
    return hb;
}

const HermiteBasis& basis(int k) {
    static const std::array<HermiteBasis, kMax + 1> all = [] {
        std::array<HermiteBasis, kMax + 1> b{};
        for (int k = 0; k <= kMax; ++k) b[k] = make_basis(k);
        return b;
    }();
    return all[k];
}

// Interpolated derivatives 0..out.size()-1 at local t in a cell of width h.
void hermite_eval(int k, const double* left, const double* right, double h, double t,
                  std::span<double> out) {
    const HermiteBasis& hb = basis(k);
    const int deg = 2 * k + 1;
    std::array<double, 2 * kMax + 2> c{};
    double hp = 1.0;
    std::array<double, kMax + 1> rhs{};
    for (int i = 0; i <= k; ++i) {
        c[i] = left[i] * hp * hb.inv_fact[i];
        rhs[i] = right[i] * hp;
        hp *= h;
    }
    for (int i = 0; i <= k; ++i) {
        double s = rhs[i];
        for (int j = i; j <= k; ++j) s -= c[j] * hb.ff[j][i];
        rhs[i] = s;
    }
    for (int i = 0; i <= k; ++i) {
        double s = 0.0;
        for (int j = 0; j <= k; ++j) s += hb.inv[i][j] * rhs[j];
        c[k + 1 + i] = s;
    }
    const int m_max = static_cast<int>(out.size()) - 1;
    double hinv = 1.0 / h, scale = 1.0;
    for (int m = 0; m <= m_max; ++m) {
        // Horner on sum_j c_j ff(j,m) t^(j-m)
        double s = 0.0;
        for (int j = deg; j >= m; --j) s = s * t + c[j] * hb.ff[j][m];
        out[m] = s * scale;
        scale *= hinv;
    }
}

double max_abs_order(const std::vector<double>& jets, int k, int order) {
    double m = 0.0;
    for (std::size_t i = order; i < jets.size(); i += k + 1) m = std::max(m, std::abs(jets[i]));
    return m;
}

}  // namespace

// ---- Diffeo1 ----

Diffeo1::Diffeo1(TailClass cls, Grid grid, int k, std::vector<double> jets, double tol)
    : cls_(cls), grid_(grid), k_(k), jets_(std::move(jets)) {
    if (k_ < 0 || k_ > kMax) throw InvalidArgument("Diffeo1: jet order outside [0,12]");
    if (grid_.n < 2 || !(grid_.b > grid_.a)) throw InvalidArgument("Diffeo1: degenerate grid");
    if (jets_.size() != static_cast<std::size_t>(grid_.n) * (k_ + 1))
        throw InvalidArgument("Diffeo1: jet array size does not match grid");
    for (double v : jets_)
        if (!std::isfinite(v)) throw InvariantViolation("Diffeo1: non-finite jet value");
    if (k_ >= 1)
        for (int i = 0; i < grid_.n; ++i)
            if (!(1.0 + node_jet(i)[1] > 0.0))
                throw InvariantViolation("Diffeo1: not orientation preserving at node " +
                                         std::to_string(i));
    auto scaled = [&](int order) { return tol * (1.0 + max_abs_order(jets_, k_, order)); };
    auto vanish = [&](int node, const char* what) {
        auto j = node_jet(node);
        for (int o = 0; o <= k_; ++o)
            if (std::abs(j[o]) > scaled(o))
                throw InvariantViolation(std::string("Diffeo1: displacement does not vanish at ") + what);
    };
    switch (cls_) {
        case TailClass::Compact:
            vanish(0, "left core end");
            vanish(grid_.n - 1, "right core end");
            break;
        case TailClass::Periodic: {
            if (std::abs(grid_.b - grid_.a - 1.0) > 1e-12)
                throw InvariantViolation("Diffeo1: periodic core must have unit length");
            auto l = node_jet(0), r = node_jet(grid_.n - 1);
            for (int o = 0; o <= k_; ++o)
                if (std::abs(l[o] - r[o]) > scaled(o))
                    throw InvariantViolation("Diffeo1: periodic seam mismatch");
            break;
        }
        case TailClass::EventuallyPeriodic: {
            if (grid_.b - grid_.a < 1.0 - 1e-12)
                throw InvariantViolation("Diffeo1: eventually periodic core shorter than 1");
            vanish(0, "left core end");
            std::vector<double> w(k_ + 1);
            displacement(grid_.b - 1.0, w);
            auto r = node_jet(grid_.n - 1);
            for (int o = 0; o <= k_; ++o)
                if (std::abs(w[o] - r[o]) > scaled(o))
                    throw InvariantViolation("Diffeo1: eventually periodic window seam mismatch");
            break;
        }
    }
}

Diffeo1 Diffeo1::identity(TailClass cls, Grid grid, int k) {
    return Diffeo1(cls, grid, k, std::vector<double>(static_cast<std::size_t>(grid.n) * (k + 1), 0.0));
}

double Diffeo1::reduce(double x) const {
    const double a = grid_.a, b = grid_.b;
    switch (cls_) {
        case TailClass::Compact:
            if (x <= a || x >= b) return std::numeric_limits<double>::quiet_NaN();
            return x;
        case TailClass::Periodic: {
            double y = x - a;
            y -= std::floor(y);
            return a + y;
        }
        case TailClass::EventuallyPeriodic:
            if (x <= a) return std::numeric_limits<double>::quiet_NaN();
            if (x > b) return x - std::ceil(x - b);
            return x;
    }
    return x;
}

void Diffeo1::displacement(double x, std::span<double> out) const {
    const double y = reduce(x);
    if (std::isnan(y)) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const double h = grid_.step();
    double s = (y - grid_.a) / h;
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, grid_.n - 2);
    double t = s - i;
    const double* L = jets_.data() + static_cast<std::size_t>(i) * (k_ + 1);
    hermite_eval(k_, L, L + (k_ + 1), h, t, out);
}

double Diffeo1::displacement(double x) const {
    double v[1];
    displacement(x, std::span<double>(v, 1));
    return v[0];
}

void Diffeo1::evaluate_raw(double x, std::span<double> out) const {
    displacement(x, out);
    out[0] += x;
    if (out.size() > 1) out[1] += 1.0;
}

Jet Diffeo1::evaluate(double x, int order) const {
    if (order < 0) order = k_;
    if (order > k_) throw InvalidArgument("evaluate: order exceeds stored jet order");
    Jet j;
    j.base = x;
    j.d.resize(order + 1);
    evaluate_raw(x, j.d);
    return j;
}

double Diffeo1::inverse_value(double y, double tol) const {
    // u is bounded, so the root lies within max|u| of y
    double bound = 0.0;
    for (std::size_t i = 0; i < jets_.size(); i += k_ + 1) bound = std::max(bound, std::abs(jets_[i]));
    bound = 1.5 * bound + 1e-9;
    double lo = y - bound, hi = y + bound;
    auto F = [&](double x) { return x + displacement(x) - y; };
    double x = y - displacement(y);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    std::array<double, 2> d{};
    for (int it = 0; it < 200; ++it) {
        if (k_ >= 1) {
            displacement(x, d);
        } else {
            d[0] = displacement(x);
            d[1] = 0.0;
        }
        double fx = x + d[0] - y;
        if (fx > 0.0) hi = x; else lo = x;
        double step = fx / (1.0 + d[1]);
        double xn = x - step;
        if (!(xn > lo && xn < hi) || k_ == 0) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) <= tol * std::max(1.0, std::abs(x))) return xn;
        x = xn;
        if (hi - lo <= tol * std::max(1.0, std::abs(x))) return 0.5 * (lo + hi);
    }
    if (std::abs(F(x)) > 1e-10) throw ConstructionError("inverse_value: root finding failed");
    return x;
}

// ---- building ----

namespace {

void finalize_tail(TailClass cls, double a, double b, int n, int k, std::vector<double>& jets) {
    const std::size_t w = k + 1;
    if (cls == TailClass::Periodic)
        std::copy(jets.begin(), jets.begin() + w, jets.begin() + (n - 1) * w);
    if (cls == TailClass::Compact) {
        std::fill(jets.begin(), jets.begin() + w, 0.0);
        std::fill(jets.end() - w, jets.end(), 0.0);
    }
    if (cls == TailClass::EventuallyPeriodic) {
        std::fill(jets.begin(), jets.begin() + w, 0.0);
        // when b - 1 is a node, the last node must repeat it exactly
        double cells_per_unit = (n - 1) / (b - a);
        double m = (n - 1) - cells_per_unit;
        long mi = std::lround(m);
        if (mi >= 0 && std::abs(m - static_cast<double>(mi)) < 1e-9)
            std::copy_n(jets.begin() + mi * w, w, jets.end() - w);
    }
}

void sample(const NodeFn& fn, double a, double h, int first, int count, int stride, int k,
            std::vector<double>& dst) {
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t j) {
        int idx = first + static_cast<int>(j) * stride;
        double x = a + h * idx;
        fn(x, std::span<double>(dst.data() + j * (k + 1), k + 1));
    });
}

}  // namespace

Diffeo1 build_fixed(TailClass cls, double a, double b, int n, int k, const NodeFn& node_fn) {
    if (n < 2) n = 2;
    std::vector<double> jets(static_cast<std::size_t>(n) * (k + 1));
    const double h = (b - a) / (n - 1);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        double x = i + 1 == static_cast<std::size_t>(n) ? b : a + h * i;
        node_fn(x, std::span<double>(jets.data() + i * (k + 1), k + 1));
    });
    finalize_tail(cls, a, b, n, k, jets);
    return Diffeo1(cls, {a, b, n}, k, std::move(jets));
}

Diffeo1 build_sampled(TailClass cls, double a, double b, int n0, int k, const NodeFn& node_fn,
                      const Resolution& res) {
    int n = std::max(n0, 2);
    const std::size_t w = k + 1;
    std::vector<double> jets(n * w);
    double h = (b - a) / (n - 1);
    sample(node_fn, a, h, 0, n, 1, k, jets);
    finalize_tail(cls, a, b, n, k, jets);
    while (true) {
        const int cells = n - 1;
        std::vector<double> mid(cells * w);
        parallel_for(static_cast<std::size_t>(cells), [&](std::size_t i) {
            node_fn(a + h * (i + 0.5), std::span<double>(mid.data() + i * w, w));
        });
        double worst = 0.0;
        for (int i = 0; i < cells; ++i) {
            double v[1];
            hermite_eval(k, jets.data() + i * w, jets.data() + (i + 1) * w, h, 0.5, std::span<double>(v, 1));
            worst = std::max(worst, std::abs(v[0] - mid[i * w]));
        }
        if (worst <= res.residual_tol || 2 * n - 1 > res.node_cap) break;
        // refined grid = old nodes interleaved with the midpoints
        std::vector<double> next((2 * n - 1) * w);
        for (int i = 0; i < n; ++i) std::copy_n(jets.begin() + i * w, w, next.begin() + 2 * i * w);
        for (int i = 0; i < cells; ++i) std::copy_n(mid.begin() + i * w, w, next.begin() + (2 * i + 1) * w);
        jets = std::move(next);
        n = 2 * n - 1;
        h = (b - a) / (n - 1);
    }
    return Diffeo1(cls, {a, b, n}, k, std::move(jets));
}

namespace {

int nodes_for(double width, double step) {
    return std::max(2, static_cast<int>(std::ceil(width / step - 1e-9)) + 1);
}

// EP outputs: a step dividing 1 and a core whose length is a multiple of it,
// so the window start b - 1 is a node
int ep_align(Interval& core, double step) {
    double s = 1.0 / std::ceil(1.0 / step - 1e-9);
    int cells = static_cast<int>(std::ceil(core.length() / s - 1e-9));
    core.hi = core.lo + cells * s;
    return cells + 1;
}

double min_displacement(const Diffeo1& f) {
    double m = 0.0;
    auto& j = f.jets();
    for (std::size_t i = 0; i < j.size(); i += f.order() + 1) m = std::min(m, j[i]);
    return m;
}

double max_displacement(const Diffeo1& f) {
    double m = 0.0;
    auto& j = f.jets();
    for (std::size_t i = 0; i < j.size(); i += f.order() + 1) m = std::max(m, j[i]);
    return m;
}

// window [a, b] of an eventually periodic view; compact maps are eventually
// periodic with a zero tail
Interval ep_core(const Diffeo1& f) {
    Interval c = f.core();
    if (f.tail_class() == TailClass::Compact) c.hi = std::max(c.hi, c.lo + 1.0);
    return c;
}

}  // namespace

Diffeo1 compose(const Diffeo1& f, const Diffeo1& g, const Resolution& res) {
    if (f.order() != g.order()) throw InvalidArgument("compose: jet orders differ");
    const int k = f.order();
    const TailClass cf = f.tail_class(), cg = g.tail_class();
    const bool fp = cf == TailClass::Periodic, gp = cg == TailClass::Periodic;
    if (fp != gp) throw InvalidArgument("compose: periodic maps compose only with periodic maps");
    TailClass cls;
    Interval core;
    if (fp) {
        cls = TailClass::Periodic;
        core = {g.grid().a, g.grid().a + 1.0};
    } else if (cf == TailClass::Compact && cg == TailClass::Compact) {
        cls = TailClass::Compact;
        core = {std::min(f.grid().a, g.grid().a), std::max(f.grid().b, g.grid().b)};
    } else {
        cls = TailClass::EventuallyPeriodic;
        Interval F = ep_core(f), G = ep_core(g);
        // periodicity of f o g holds once x >= b_g and g(x) >= b_f
        double start = std::max(G.hi, F.hi - min_displacement(g));
        core = {std::min(F.lo, G.lo), start + 1.0};
    }
    const double step = std::min(f.grid().step(), g.grid().step());
    const int n0 = cls == TailClass::EventuallyPeriodic ? ep_align(core, step) : nodes_for(core.length(), step);
    NodeFn fn = [&](double x, std::span<double> out) {
        std::array<double, kMax + 1> gj{}, fj{};
        std::span<double> G(gj.data(), k + 1), F(fj.data(), k + 1);
        g.evaluate_raw(x, G);
        f.evaluate_raw(G[0], F);
        compose_raw(F, G, out);
        // displacement without cancellation: u_g(x) + u_f(g(x))
        out[0] = (G[0] - x) + (F[0] - G[0]);
        if (k >= 1) out[1] -= 1.0;
    };
    return build_sampled(cls, core.lo, core.hi, n0, k, fn, res);
}

Diffeo1 compose_all(const std::vector<Diffeo1>& maps, const Resolution& res) {
    if (maps.empty()) throw InvalidArgument("compose_all: empty list");
    Diffeo1 acc = maps.back();
    for (std::size_t i = maps.size() - 1; i-- > 0;) acc = compose(maps[i], acc, res);
    return acc;
}

Diffeo1 inverse(const Diffeo1& f, const Resolution& res) {
    const int k = f.order();
    Interval core = f.core();
    if (f.tail_class() == TailClass::EventuallyPeriodic) {
        // f^{-1}(y+1) = f^{-1}(y) + 1 once y >= f(b - 1)
        core.hi = core.hi + std::max(0.0, max_displacement(f)) + 1.0;
    }
    const int n0 = f.tail_class() == TailClass::EventuallyPeriodic ? ep_align(core, f.grid().step())
                                                                    : nodes_for(core.length(), f.grid().step());
    NodeFn fn = [&](double y, std::span<double> out) {
        double x = f.inverse_value(y);
        std::array<double, kMax + 1> fj{};
        std::span<double> F(fj.data(), k + 1);
        f.evaluate_raw(x, F);
        invert_raw(x, F, out);
        out[0] = -(F[0] - x);
        if (k >= 1) out[1] -= 1.0;
    };
    return build_sampled(f.tail_class(), core.lo, core.hi, n0, k, fn, res);
}

std::optional<Interval> support_interval(const Diffeo1& f, double slack) {
    if (f.tail_class() == TailClass::Periodic) return std::nullopt;
    const Grid& g = f.grid();
    const int k = f.order();
    auto nonzero = [&](int i) {
        auto j = f.node_jet(i);
        for (int o = 0; o <= k; ++o)
            if (std::abs(j[o]) > slack) return true;
        return false;
    };
    int first = -1, last = -1;
    for (int i = 0; i < g.n; ++i)
        if (nonzero(i)) {
            if (first < 0) first = i;
            last = i;
        }
    if (f.tail_class() == TailClass::Compact) {
        if (first < 0) return std::nullopt;
        return Interval{g.node(std::max(first - 1, 0)), g.node(std::min(last + 1, g.n - 1))};
    }
    // eventually periodic: tail law u(x+1) = u(x); walk left from b-1 while it holds
    double right = g.b - 1.0;
    const double h = g.step();
    std::vector<double> u0(k + 1), u1(k + 1);
    for (double x = g.b - 1.0; x >= g.a; x -= h) {
        f.displacement(x, u0);
        f.displacement(x + 1.0, u1);
        bool same = true;
        for (int o = 0; o <= k; ++o)
            if (std::abs(u0[o] - u1[o]) > slack) same = false;
        if (!same) break;
        right = x;
    }
    if (first < 0) return std::nullopt;
    double left = g.node(std::max(first - 1, 0));
    return Interval{left, std::max(left, right)};
}

Diffeo1 translate_conjugate(const Diffeo1& f, double b) {
    Grid g = f.grid();
    g.a += b;
    g.b += b;
    Diffeo1 out(f.tail_class(), g, f.order(), f.jets());
    out.modulus_tag = f.modulus_tag;
    return out;
}

// ---- presets ----

Taylor bump(const Taylor& x, double c, double r) {
    Taylor s = (x - c) * (1.0 / r);
    if (std::abs(s.value()) >= 1.0) return Taylor(x.order(), 0.0);
    Taylor q = 1.0 - s * s;
    if (q.value() < 1.0 / 700.0) return Taylor(x.order(), 0.0);
    return exp(1.0 - 1.0 / q);
}

namespace {

Taylor scaled_profile(const Taylor& y, const PresetParams& p) {
    // chi(y) * V(y), V'' = sum_j 2^{-j/2} cos(2^j pi y)
    Taylor chi = bump(y, 0.0, p.r);
    if (chi.value() == 0.0 && std::abs(y.value()) >= p.r) return chi;
    Taylor V(y.order(), 0.0);
    for (int j = 0; j <= p.octaves; ++j) {
        double w = std::ldexp(std::numbers::pi, j);
        Taylor s, c;
        sincos(y * w, s, c);
        V -= c * (std::pow(2.0, -0.5 * j) / (w * w));
    }
    return chi * V;
}

}  // namespace

void preset_displacement(const std::string& name, const PresetParams& p, double x,
                         std::span<double> out) {
    const int k = static_cast<int>(out.size()) - 1;
    Taylor X = Taylor::variable(k, x);
    Taylor u;
    if (name == "smooth_bump_displacement") {
        u = bump(X, p.c, p.r) * p.eps;
    } else if (name == "scaled_family") {
        u = scaled_profile(X * (1.0 / p.A), p) * (p.A * p.eps);
    } else if (name == "periodic_wiggle") {
        u = Taylor(k, 0.0);
        double base = 0.0;
        for (std::size_t m = 0; m < p.amps.size(); ++m) {
            double ph = m < p.phases.size() ? p.phases[m] : 0.0;
            double w = 2.0 * std::numbers::pi * static_cast<double>(m + 1);
            Taylor s, c;
            sincos(X * w + ph, s, c);
            u += s * p.amps[m];
            base += p.amps[m] * std::sin(ph);
        }
        if (p.fix_origin) u += -base;
    } else {
        throw InvalidArgument("unknown preset '" + name + "'");
    }
    auto d = u.derivatives();
    std::copy(d.begin(), d.end(), out.begin());
}

Diffeo1 from_preset(const std::string& name, const PresetParams& p) {
    if (p.k < 0 || p.k > kMax) throw InvalidArgument("from_preset: k outside [0,12]");
    TailClass cls;
    double a, b;
    if (name == "smooth_bump_displacement") {
        if (!(p.r > 0.0)) throw InvalidArgument("smooth_bump_displacement: r must be positive");
        cls = TailClass::Compact;
        a = p.c - p.r;
        b = p.c + p.r;
    } else if (name == "scaled_family") {
        if (!(p.r > 0.0) || !(p.A > 0.0)) throw InvalidArgument("scaled_family: r and A must be positive");
        cls = TailClass::Compact;
        a = -p.r * p.A;
        b = p.r * p.A;
    } else if (name == "periodic_wiggle") {
        cls = TailClass::Periodic;
        a = 0.0;
        b = 1.0;
    } else {
        throw InvalidArgument("unknown preset '" + name + "'");
    }
    NodeFn fn = [&](double x, std::span<double> out) { preset_displacement(name, p, x, out); };
    try {
        return build_fixed(cls, a, b, p.n, p.k, fn);
    } catch (const InvariantViolation& e) {
        throw InvalidArgument(std::string("preset parameters rejected: ") + e.what());
    }
}

// ---- fragmentation ----

namespace {

// phi_i = b_i / sum_j b_j with normalized bumps b_i on the cover elements
std::vector<Taylor> partition_at(const Cover& cover, double x, int k) {
    Taylor X = Taylor::variable(k, x);
    std::vector<Taylor> b;
    Taylor sum(k, 0.0);
    for (const auto& e : cover.elements) {
        b.push_back(bump(X, 0.5 * (e.lo + e.hi), 0.5 * (e.hi - e.lo)));
        sum += b.back();
    }
    if (sum.value() <= 0.0) {
        for (auto& t : b) t = Taylor(k, 0.0);
        return b;
    }
    for (auto& t : b) t = t / sum;
    return b;
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

bool all_zero(const Taylor& t) {
    for (int i = 0; i <= t.order(); ++i)
        if (t[i] != 0.0) return false;
    return true;
}

}  // namespace

Fragmentation fragment(const Diffeo1& g, const Cover& cover, const Resolution& res) {
    if (g.tail_class() != TailClass::Compact) throw InvalidArgument("fragment: g must be compactly supported");
    if (cover.elements.empty()) throw InvalidArgument("fragment: empty cover");
    const int k = g.order();
    const int m = static_cast<int>(cover.elements.size());
    Fragmentation out;

    auto supp = support_interval(g);
    if (!supp) {
        for (int i = 0; i < m; ++i) out.fragments.push_back(Diffeo1::identity(TailClass::Compact, g.grid(), k));
        out.K = 2.0;
        return out;
    }
    const int checks = 4 * g.grid().n;
    for (int i = 0; i <= checks; ++i) {
        double x = supp->lo + supp->length() * i / checks;
        bool inside = false;
        for (const auto& e : cover.elements) inside = inside || (x > e.lo && x < e.hi);
        if (!inside && std::abs(g.displacement(x)) > 1e-12)
            throw PreconditionError("fragment: cover does not contain the support");
    }
    // K = 2 + sum_i sup |phi_i'| over the union of the cover
    double lo = supp->lo, hi = supp->hi;
    for (const auto& e : cover.elements) lo = std::min(lo, e.lo), hi = std::max(hi, e.hi);
    std::vector<double> dphi(m, 0.0);
    const int samples = 8192;
    for (int s = 1; s < samples; ++s) {
        auto phi = partition_at(cover, lo + (hi - lo) * s / samples, 1);
        for (int i = 0; i < m; ++i) dphi[i] = std::max(dphi[i], std::abs(phi[i][1]));
    }
    out.K = 2.0;
    for (double d : dphi) out.K += d;
    std::vector<double> u(std::max(2, k + 1));
    for (int s = 0; s <= 4 * (g.grid().n - 1); ++s) {
        g.displacement(g.grid().a + g.grid().step() * s / 4.0, std::span<double>(u.data(), 2));
        out.eps_measured = std::max({out.eps_measured, std::abs(u[0]), std::abs(u[1])});
    }
    if (!(out.eps_measured < 1.0 / (2.0 * out.K))) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "fragment: eps %.3g not below 1/(2K) with K = %.6g", out.eps_measured, out.K);
        throw PreconditionError(buf);
    }

    // g_j = Id + (phi_1 + ... + phi_j) u_g as a pointwise Taylor map
    auto partial = [&](int j, double x, int order) {
        std::vector<double> ug(order + 1);
        g.displacement(x, ug);
        Taylor U = from_derivatives(ug);
        if (j >= m) return U;
        if (j <= 0) return Taylor(order, 0.0);
        auto phi = partition_at(cover, x, order);
        Taylor s(order, 0.0);
        for (int i = 0; i < j; ++i) s += phi[i];
        return s * U;
    };
    out.min_partial_slope = 1.0;
    for (int j = 1; j <= m; ++j)
        for (int s = 0; s <= 4 * (g.grid().n - 1); ++s) {
            double x = g.grid().a + g.grid().step() * s / 4.0;
            out.min_partial_slope = std::min(out.min_partial_slope, 1.0 + partial(j, x, 1)[1]);
        }

    // fragment j = g_{j-1}^{-1} o g_j, exactly the identity off supp phi_j
    for (int j = 1; j <= m; ++j) {
        const auto& e = cover.elements[j - 1];
        double a = std::max(e.lo, g.grid().a), b = std::min(e.hi, g.grid().b);
        if (!(b > a)) {
            out.fragments.push_back(Diffeo1::identity(TailClass::Compact, g.grid(), k));
            continue;
        }
        NodeFn fn = [&, j](double x, std::span<double> dst) {
            const int kk = std::max(k, 1);
            auto phi = partition_at(cover, x, kk);
            if (j < m && all_zero(phi[j - 1])) {
                std::fill(dst.begin(), dst.end(), 0.0);
                return;
            }
            Taylor Gj = partial(j, x, kk);
            double y = x + Gj.value();
            // solve z + u_{j-1}(z) = y by Newton
            double z = x;
            for (int it = 0; it < 100; ++it) {
                Taylor P = partial(j - 1, z, 1);
                double step = (z + P.value() - y) / (1.0 + P[1]);
                z -= step;
                if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
            }
            std::vector<double> pj = partial(j - 1, z, kk).derivatives();
            pj[0] += z;
            pj[1] += 1.0;
            std::vector<double> inv(kk + 1), gj = Gj.derivatives(), res_j(kk + 1);
            gj[0] += x;
            gj[1] += 1.0;
            invert_raw(z, pj, inv);
            compose_raw(inv, gj, res_j);
            res_j[0] = z - x;
            res_j[1] -= 1.0;
            std::copy_n(res_j.begin(), dst.size(), dst.begin());
        };
        out.fragments.push_back(build_sampled(TailClass::Compact, a, b, nodes_for(b - a, g.grid().step()), k, fn, res));
    }
    return out;
}

Diffeo1 restrict_to_window(const Diffeo1& f, double c, double w, double tol) {
    const int k = f.order();
    std::vector<double> l(k + 1), r(k + 1);
    f.displacement(c, l);
    f.displacement(c + w, r);
    for (int o = 0; o <= k; ++o)
        if (std::abs(l[o]) > tol || std::abs(r[o]) > tol)
            throw PreconditionError("restrict_to_window: map does not fix the window ends");
    const int n = nodes_for(w, f.grid().step());
    NodeFn fn = [&](double x, std::span<double> out) { f.displacement(x, out); };
    Diffeo1 out = build_fixed(TailClass::Compact, c, c + w, n, k, fn);
    out.modulus_tag = f.modulus_tag;
    return out;
}

}  // namespace mather
