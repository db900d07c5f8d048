#include "mather/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mather/error.hpp"

namespace mather {

namespace {

// closed form of the omega_z family, valid for 0 < x < 1/e
double omega_z_closed(double sigma, double tau, double x) {
    if (x <= 0.0) return 0.0;
    double L = std::log(1.0 / x);
    return std::exp(-sigma * L - tau * L / std::log(L));
}

double omega_z_closed_slope(double sigma, double tau, double x) {
    double L = std::log(1.0 / x);
    double lL = std::log(L);
    return omega_z_closed(sigma, tau, x) / x * (sigma + tau * (1.0 / lL - 1.0 / (lL * lL)));
}

double sampled_eval(const SampledKind& k, double x) {
    const auto& t = k.abscissae;
    const auto& v = k.values;
    if (x <= 0.0) return 0.0;
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = static_cast<std::size_t>(it - t.begin());
    if (i >= t.size()) i = t.size() - 1;  // extrapolate with the final segment
    double t0 = t[i - 1], t1 = t[i];
    return v[i - 1] + (v[i] - v[i - 1]) * (x - t0) / (t1 - t0);
}

double sampled_slope(const SampledKind& k, double x) {
    const auto& t = k.abscissae;
    const auto& v = k.values;
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = static_cast<std::size_t>(it - t.begin());
    if (i >= t.size()) i = t.size() - 1;
    if (i == 0) i = 1;
    return (v[i] - v[i - 1]) / (t[i] - t[i - 1]);
}

}  // namespace

ConcaveModulus::ConcaveModulus(Kind kind) : kind_(std::move(kind)) {
    if (auto* s = std::get_if<SampledKind>(&kind_)) {
        if (s->abscissae.size() < 2 || s->abscissae.size() != s->values.size())
            throw InvalidArgument("sampled modulus needs >= 2 matching samples");
        if (s->abscissae[0] != 0.0 || s->values[0] != 0.0)
            throw InvalidArgument("sampled modulus must start at (0, 0)");
        for (std::size_t i = 1; i < s->abscissae.size(); ++i)
            if (!(s->abscissae[i] > s->abscissae[i - 1]))
                throw InvalidArgument("sampled modulus abscissae must increase");
    }
}

double ConcaveModulus::operator()(double x) const {
    if (x <= 0.0) return 0.0;
    return std::visit(
        [x](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, HolderKind>) {
                return k.s == 1.0 ? x : std::pow(x, k.s);
            } else if constexpr (std::is_same_v<K, OmegaZKind>) {
                if (x <= k.delta) return omega_z_closed(k.sigma, k.tau, x);
                return k.ext_a * std::sqrt(x) + k.ext_b;
            } else {
                return sampled_eval(k, x);
            }
        },
        kind_);
}

double ConcaveModulus::slope(double x) const {
    return std::visit(
        [x](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, HolderKind>) {
                return k.s * std::pow(x, k.s - 1.0);
            } else if constexpr (std::is_same_v<K, OmegaZKind>) {
                if (x <= k.delta) return omega_z_closed_slope(k.sigma, k.tau, x);
                return 0.5 * k.ext_a / std::sqrt(x);
            } else {
                return sampled_slope(k, x);
            }
        },
        kind_);
}

std::string ConcaveModulus::name() const {
    return std::visit(
        [](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            char buf[96];
            if constexpr (std::is_same_v<K, HolderKind>) {
                std::snprintf(buf, sizeof buf, "holder(%g)", k.s);
            } else if constexpr (std::is_same_v<K, OmegaZKind>) {
                std::snprintf(buf, sizeof buf, "omega_z(%g,%g)", k.sigma, k.tau);
            } else {
                std::snprintf(buf, sizeof buf, "sampled(%zu)", k.abscissae.size());
            }
            return buf;
        },
        kind_);
}

ConcaveModulus::Limits ConcaveModulus::limits(double t) const {
    return std::visit(
        [t](const auto& k) -> Limits {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, HolderKind>) {
                double F = std::pow(t, 1.0 - k.s), G = std::pow(t, k.s);
                return {F, F, G, G};
            } else if constexpr (std::is_same_v<K, OmegaZKind>) {
                // at 0 the loglog correction vanishes; at infinity the sqrt extension rules
                double r = std::sqrt(t);
                return {std::pow(t, 1.0 - k.sigma), r, std::pow(t, k.sigma), r};
            } else {
                // linear through the origin near 0, final-slope line at infinity
                double m = sampled_slope(k, std::numeric_limits<double>::max());
                if (m > 0.0) return {1.0, 1.0, t, t};
                return {1.0, t, t, 1.0};
            }
        },
        kind_);
}

ConcaveModulus holder(double s) {
    if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("holder: exponent must lie in (0,1]");
    return ConcaveModulus(HolderKind{s});
}

ConcaveModulus omega_z(double sigma, double tau) {
    bool admissible = (sigma > 0.0 && sigma < 1.0) || (sigma == 0.0 && tau > 0.0) ||
                      (sigma == 1.0 && tau <= 0.0);
    if (!admissible)
        throw InvalidArgument("omega_z: (sigma, tau) must lie lexicographically in (0,1]");
    // Scan downward from L = e until 64 consecutive negative second differences.
    const double ratio = 0.9;
    const double floor_x = 1e-12;
    double x = std::exp(-std::exp(1.0));
    int run = 0;
    double run_start = 0.0;
    double found = 0.0;
    auto f = [&](double y) { return omega_z_closed(sigma, tau, y); };
    while (x > floor_x) {
        double lo = x * ratio, hi = x / ratio;
        // chord test on the geometric triple (lo, x, hi)
        double chord = f(lo) + (f(hi) - f(lo)) * (x - lo) / (hi - lo);
        double second = chord - f(x);
        if (second < 0.0) {
            if (run == 0) run_start = x;
            if (++run >= 64) {
                found = run_start;
                break;
            }
        } else {
            run = 0;
        }
        x *= ratio;
    }
    if (found == 0.0)
        throw ConstructionError("omega_z: no concavity threshold above 1e-12");
    OmegaZKind k{sigma, tau, 0.5 * found, 0.0, 0.0};
    double w = omega_z_closed(sigma, tau, k.delta);
    double dw = omega_z_closed_slope(sigma, tau, k.delta);
    k.ext_a = 2.0 * std::sqrt(k.delta) * dw;
    k.ext_b = w - k.ext_a * std::sqrt(k.delta);
    return ConcaveModulus(k);
}

Majorant least_concave_majorant(const std::vector<double>& t, const std::vector<double>& mu) {
    if (t.size() != mu.size() || t.size() < 2)
        throw InvalidArgument("least_concave_majorant: need >= 2 matching samples");
    if (t[0] != 0.0 || mu[0] != 0.0)
        throw InvalidArgument("least_concave_majorant: samples must start at (0, 0)");
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) throw InvalidArgument("least_concave_majorant: abscissae must increase");
        if (mu[i] < mu[i - 1]) throw InvalidArgument("least_concave_majorant: decreasing samples");
    }
    // monotone chain, upper hull; collinear points are dropped (the earlier one stays)
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < t.size(); ++i) {
        while (hull.size() >= 2) {
            std::size_t a = hull[hull.size() - 2], b = hull.back();
            double cross = (t[b] - t[a]) * (mu[i] - mu[a]) - (mu[b] - mu[a]) * (t[i] - t[a]);
            if (cross >= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    // Evaluate the hull at every sample abscissa, never below the sample
    // itself (rounding in the hull interpolation could dip under mu_i).
    SampledKind b0{t, std::vector<double>(t.size())};
    std::size_t h = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        while (h + 1 < hull.size() && t[hull[h + 1]] < t[i]) ++h;
        double v;
        if (h + 1 >= hull.size()) {
            v = mu[hull[h]];
        } else {
            std::size_t a = hull[h], b = hull[h + 1];
            v = mu[a] + (mu[b] - mu[a]) * (t[i] - t[a]) / (t[b] - t[a]);
        }
        b0.values[i] = std::max(v, mu[i]);
    }
    b0.values[0] = 0.0;
    SampledKind b{t, b0.values};
    for (std::size_t i = 0; i < t.size(); ++i) b.values[i] += t[i];
    return {ConcaveModulus(std::move(b0)), ConcaveModulus(std::move(b))};
}

OscillationSamples oscillation_modulus(const std::vector<double>& values, double lo, double hi) {
    const std::size_t n = values.size();
    if (n < 2) throw InvalidArgument("oscillation_modulus: need >= 2 samples");
    double step = (hi - lo) / static_cast<double>(n - 1);
    OscillationSamples out;
    out.t.resize(n);
    out.mu.assign(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) out.t[m] = step * static_cast<double>(m);
    for (std::size_t m = 1; m < n; ++m) {
        double s = 0.0;
        for (std::size_t i = 0; i + m < n; ++i) s = std::max(s, std::abs(values[i + m] - values[i]));
        out.mu[m] = std::max(s, out.mu[m - 1]);
    }
    return out;
}

double tameness_F(const ConcaveModulus& alpha, double t, const std::vector<double>& x_grid) {
    double s = 0.0;
    for (double x : x_grid) s = std::max(s, t * alpha(x) / alpha(t * x));
    return s;
}

double tameness_G(const ConcaveModulus& alpha, double t, const std::vector<double>& x_grid) {
    double s = 0.0;
    for (double x : x_grid) s = std::max(s, alpha(t * x) / alpha(x));
    return s;
}

TamenessVerdict classify_tameness(const ConcaveModulus& alpha, const std::vector<double>& t_grid,
                                  const std::vector<double>& x_grid, double min_margin) {
    TamenessVerdict v;
    v.sup_tame.sup = v.sub_tame.sup = std::numeric_limits<double>::infinity();
    for (double t : t_grid) {
        if (!(t > 0.0)) continue;
        auto lim = alpha.limits(t);
        double F = std::max({tameness_F(alpha, t, x_grid), lim.F0, lim.Finf});
        double G = std::max({tameness_G(alpha, t, x_grid), lim.G0, lim.Ginf});
        if (F < v.sup_tame.sup) v.sup_tame = {Verdict::Inconclusive, t, F, 1.0 - F};
        if (G < v.sub_tame.sup) v.sub_tame = {Verdict::Inconclusive, t, G, 1.0 - G};
    }
    if (v.sup_tame.margin >= min_margin) v.sup_tame.verdict = Verdict::Yes;
    if (v.sub_tame.margin >= min_margin) v.sub_tame.verdict = Verdict::Yes;
    return v;
}

ModulusLawReport check_modulus_laws(const ConcaveModulus& alpha, double C,
                                    const std::vector<double>& grid) {
    ModulusLawReport r;
    r.worst_lower = r.worst_upper = r.worst_ratio = std::numeric_limits<double>::infinity();
    double prev = -1.0;
    for (double x : grid) {
        double a = alpha(x), ac = alpha(C * x);
        // relative tolerance for rounding in pow/exp
        double tol = 1e-12 * std::max(a, ac);
        r.worst_lower = std::min(r.worst_lower, ac - std::min(C, 1.0) * a + tol);
        r.worst_upper = std::min(r.worst_upper, std::max(C, 1.0) * a - ac + tol);
        if (x > 0.0) {
            double q = x / a;
            if (prev >= 0.0) r.worst_ratio = std::min(r.worst_ratio, q - prev + 1e-12 * q);
            prev = q;
        }
    }
    r.ok = r.worst_lower >= 0.0 && r.worst_upper >= 0.0 && r.worst_ratio >= 0.0;
    return r;
}

double concavity_defect(const ConcaveModulus& alpha, const std::vector<double>& grid) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        double x1 = grid[i - 1], x2 = grid[i], x3 = grid[i + 1];
        double y1 = alpha(x1), y2 = alpha(x2), y3 = alpha(x3);
        double chord = y1 + (y3 - y1) * (x2 - x1) / (x3 - x1);
        double scale = std::max({std::abs(y1), std::abs(y2), std::abs(y3), 1e-300});
        worst = std::max(worst, (chord - y2) / scale);
    }
    return worst;
}

std::vector<double> geometric_grid(double lo, double hi, int n) {
    if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw InvalidArgument("geometric_grid: bad range");
    std::vector<double> g(n);
    double r = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) g[i] = lo * std::exp(r * i);
    g.back() = hi;
    return g;
}

}  // namespace mather
