#include "mather/flow.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "mather/error.hpp"
#include "mather/parallel.hpp"

namespace mather {

namespace {
constexpr int kMax = max_jet_order;
}

// ---- plateau field ----

PlateauField make_rho(int A) {
    if (A < 1) throw InvalidArgument("make_rho: A must be >= 1");
    return PlateauField{A};
}

double PlateauField::operator()(double x) const {
    double r = std::abs(x);
    if (r <= 2.0 * A) return 1.0;
    if (r >= 2.0 * A + 1.0) return 0.0;
    auto S = [](double t) { return t > 1.0 / 700.0 ? std::exp(-1.0 / t) : 0.0; };
    double a = S(2.0 * A + 1.0 - r), b = S(r - 2.0 * A);
    return a / (a + b);
}

Taylor PlateauField::operator()(const Taylor& x) const {
    double r = std::abs(x.value());
    if (r <= 2.0 * A) return Taylor(x.order(), 1.0);
    if (r >= 2.0 * A + 1.0) return Taylor(x.order(), 0.0);
    Taylor ax = x.value() < 0 ? -x : x;
    Taylor a = flat_step(2.0 * A + 1.0 - ax), b = flat_step(ax - 2.0 * A);
    if (a.value() == 0.0) return Taylor(x.order(), 0.0);
    return a / (a + b);
}

void PlateauField::jet(double x, std::span<double> out) const {
    const int k = static_cast<int>(out.size()) - 1;
    auto d = (*this)(Taylor::variable(k, x)).derivatives();
    std::copy(d.begin(), d.end(), out.begin());
}

// ---- flow ----

void flow_jet(const PlateauField& rho, double t, double x, std::span<double> out, const FlowOptions& opt) {
    const int k = static_cast<int>(out.size()) - 1;
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = x;
    if (k >= 1) out[1] = 1.0;
    if (t == 0.0 || rho(x) == 0.0) return;
    namespace ode = boost::numeric::odeint;
    using State = std::vector<double>;
    State y(out.begin(), out.end());
    auto rhs = [&](const State& s, State& dsdt, double) {
        std::array<double, kMax + 1> r{};
        std::span<double> R(r.data(), k + 1);
        rho.jet(s[0], R);
        compose_raw(R, std::span<const double>(s.data(), k + 1), std::span<double>(dsdt.data(), k + 1));
    };
    auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>());
    try {
        ode::integrate_adaptive(stepper, rhs, y, 0.0, t, t / 64.0);
    } catch (const std::exception& e) {
        throw ConstructionError(std::string("flow: integration failed: ") + e.what());
    }
    std::copy(y.begin(), y.end(), out.begin());
}

double flow(const PlateauField& rho, double t, double x, const FlowOptions& opt) {
    double v[1];
    flow_jet(rho, t, x, std::span<double>(v, 1), opt);
    return v[0];
}

Diffeo1 time_t_map(const PlateauField& rho, double t, int k, const Resolution& res, const FlowOptions& opt) {
    Interval S = rho.support();
    NodeFn fn = [&](double x, std::span<double> out) {
        flow_jet(rho, t, x, out, opt);
        out[0] -= x;
        if (k >= 1) out[1] -= 1.0;
    };
    int n0 = 16 * static_cast<int>(S.length()) + 1;
    return build_sampled(TailClass::Compact, S.lo, S.hi, n0, k, fn, res);
}

// ---- chart ----

Chart::Chart(PlateauField rho, int k, double horizon) : rho_(rho), k_(k), horizon_(horizon) {
    if (k < 0 || k > kMax) throw InvalidArgument("Chart: jet order out of range");
}

Chart trajectory_chart(const PlateauField& rho, int k) { return Chart(rho, k, 8.0 * (2 * rho.A + 1)); }

double Chart::theta(double z) const {
    const double a = 2.0 * rho_.A;
    if (z <= a) return 0.0;
    if (rho_(z) == 0.0) return std::numeric_limits<double>::infinity();
    // 1/rho = 1 + exp(1/(1-s) - 1/s) with s = z - 2A; substituting q = 1/(1-s)
    // leaves an integrand growing like e^q, integrated over unit q-intervals
    using boost::math::quadrature::gauss_kronrod;
    const double s = z - a;
    const double Q = 1.0 / (1.0 - s);
    auto g = [](double q) { return std::exp(q - q / (q - 1.0)) / (q * q); };
    double sum = 0.0;
    for (double lo = 1.0; lo < Q; lo += 1.0)
        sum += gauss_kronrod<double, 15>::integrate(g, lo, std::min(lo + 1.0, Q), 8, 1e-14);
    return s + sum;
}

double Chart::theta_inverse(double T) const {
    const double a = 2.0 * rho_.A;
    double lo = a, hi = a + 1.0;
    double z = a + std::min(T, 0.5);
    for (int it = 0; it < 200; ++it) {
        double th = theta(z);
        if (th > T) hi = z; else lo = z;
        double r = rho_(z);
        double zn = z - (th - T) * r;
        if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
        if (std::abs(zn - z) <= 1e-15 * a || hi - lo <= 1e-15 * a) return zn;
        z = zn;
    }
    return z;
}

double Chart::forward_positive(double y) const {
    const double a = 2.0 * rho_.A;
    const double T = y - a;
    if (T <= horizon_) return flow(rho_, T, a);
    return theta_inverse(T);
}

double Chart::operator()(double y) const {
    const double a = 2.0 * rho_.A;
    if (std::abs(y) <= a) return y;
    if (std::isinf(y)) return y > 0 ? a + 1.0 : -(a + 1.0);
    return y > 0 ? forward_positive(y) : -forward_positive(-y);
}

// phi' = rho(phi), so every derivative of phi at y depends only on z = phi(y)
void Chart::jet_at_value(double z, std::span<double> out) const {
    const int k = static_cast<int>(out.size()) - 1;
    out[0] = z;
    if (k == 0) return;
    std::array<double, kMax + 1> r{}, c{};
    rho_.jet(z, std::span<double>(r.data(), k + 1));
    out[1] = r[0];
    for (int m = 1; m < k; ++m) {
        compose_raw(std::span<const double>(r.data(), m + 1), std::span<const double>(out.data(), m + 1),
                    std::span<double>(c.data(), m + 1));
        out[m + 1] = c[m];
    }
}

void Chart::jet(double y, std::span<double> out) const { jet_at_value((*this)(y), out); }

double Chart::inverse(double x) const {
    const double a = 2.0 * rho_.A;
    if (!(std::abs(x) < a + 1.0)) throw InvalidArgument("Chart::inverse: outside the chart range");
    if (std::abs(x) <= a) return x;
    double t = theta(std::abs(x));
    return x > 0 ? a + t : -(a + t);
}

void Chart::inverse_jet(double x, std::span<double> out) const {
    const int k = static_cast<int>(out.size()) - 1;
    std::array<double, kMax + 1> p{};
    jet_at_value(x, std::span<double>(p.data(), k + 1));
    invert_raw(inverse(x), std::span<const double>(p.data(), k + 1), out);
}

double Chart::shift(double x, double b) const {
    if (b == 0.0) return x;
    double y = inverse(x);
    if (std::isinf(y)) return x;
    return (*this)(y + b);
}

double verify_chart_conjugation(const Chart& chart, double b, int samples, const FlowOptions& opt) {
    const Interval S = chart.field().support();
    std::vector<double> r(samples);
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
        double x = S.lo + S.length() * (i + 0.5) / samples;
        r[i] = std::abs(chart.shift(x, b) - flow(chart.field(), b, x, opt));
    });
    double m = 0.0;
    for (double v : r) m = std::max(m, v);
    return m;
}

double verify_chart_fixes(const Chart& chart, const Diffeo1& u, int samples) {
    const Interval S = chart.field().support();
    std::vector<double> r(samples);
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
        double x = S.lo + S.length() * (i + 0.5) / samples;
        double y = chart.inverse(x);
        double lhs = std::isinf(y) ? x : chart(u(y));
        r[i] = std::abs(lhs - u(x));
    });
    double m = 0.0;
    for (double v : r) m = std::max(m, v);
    return m;
}

}  // namespace mather
