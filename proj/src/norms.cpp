#include "mather/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mather/error.hpp"
#include "mather/parallel.hpp"

namespace mather {

namespace {

// derivatives 0..k of the displacement at lo + j*s, j = 0..N-1, by order
std::vector<std::vector<double>> sample_orders(const Diffeo1& f, double lo, double s, int N, int k) {
    std::vector<std::vector<double>> out(k + 1, std::vector<double>(N));
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t j) {
        double buf[max_jet_order + 1];
        f.displacement(lo + s * static_cast<double>(j), std::span<double>(buf, k + 1));
        for (int o = 0; o <= k; ++o) out[o][j] = buf[o];
    });
    return out;
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> stride2(const std::vector<double>& v) {
    std::vector<double> r;
    r.reserve(v.size() / 2 + 1);
    for (std::size_t i = 0; i < v.size(); i += 2) r.push_back(v[i]);
    return r;
}

Interval sample_region(const Diffeo1& f) {
    const Grid& g = f.grid();
    switch (f.tail_class()) {
        case TailClass::Compact: return {g.a, g.b};
        case TailClass::Periodic: return {g.a, g.a + 2.0};
        case TailClass::EventuallyPeriodic: return {g.a, g.b + 1.0};
    }
    return {g.a, g.b};
}

bool class_in(TailClass query, TailClass have) {
    if (query == have) return true;
    // compactly supported and periodic maps are eventually periodic
    return query == TailClass::EventuallyPeriodic;
}

}  // namespace

double NormReport::refinement_ratio() const {
    if (holder_dev.empty() || holder_coarse.back() == 0.0) return 1.0;
    return holder_dev.back() / holder_coarse.back();
}

double holder_estimate(const std::vector<double>& F, double step, const ConcaveModulus& alpha, int scales) {
    const std::size_t N = F.size();
    if (N < 2) return 0.0;
    std::vector<std::size_t> ms;
    for (std::size_t m = 1; m < N && static_cast<int>(ms.size()) < scales; m *= 2) ms.push_back(m);
    if (ms.back() != N - 1) ms.push_back(N - 1);
    double best = 0.0;
    for (std::size_t m : ms) {
        double d = 0.0;
        for (std::size_t i = 0; i + m < N; ++i) d = std::max(d, std::abs(F[i + m] - F[i]));
        best = std::max(best, d / alpha(step * static_cast<double>(m)));
    }
    return best;
}

double holder_all_pairs(const std::vector<double>& x, const std::vector<double>& F, const ConcaveModulus& alpha) {
    double best = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            best = std::max(best, std::abs(F[j] - F[i]) / alpha(x[j] - x[i]));
    return best;
}

NormReport norm_report(const Diffeo1& f, const ConcaveModulus& alpha, int k, const NormOptions& opt,
                       const std::vector<BallQuery>& balls) {
    if (k < 0) k = f.order();
    if (k > f.order()) throw InvalidArgument("norm_report: order exceeds stored jets");
    Interval R = sample_region(f);
    const double s = f.grid().step() / opt.eval_density;
    const int N = static_cast<int>(std::llround(R.length() / s)) + 1;
    auto S = sample_orders(f, R.lo, s, N, k);
    NormReport r;
    r.k = k;
    for (int i = 0; i <= k; ++i) r.sup_dev.push_back(sup_abs(S[i]));
    for (int i = 1; i <= k; ++i) {
        r.holder_dev.push_back(holder_estimate(S[i], s, alpha, opt.scales));
        r.holder_coarse.push_back(holder_estimate(stride2(S[i]), 2 * s, alpha, opt.scales));
    }
    for (int i = 1; i <= k; ++i) r.M_k = std::max(r.M_k, r.sup_dev[i]);
    for (const auto& q : balls)
        r.balls.push_back({q.cls, q.delta, class_in(q.cls, f.tail_class()) && r.k_alpha() < q.delta});
    return r;
}

double k_alpha_norm(const Diffeo1& f, const ConcaveModulus& alpha, int k, const NormOptions& opt) {
    if (k > f.order() || k < 1) throw InvalidArgument("k_alpha_norm: order out of range");
    Interval R = sample_region(f);
    const double s = f.grid().step() / opt.eval_density;
    const int N = static_cast<int>(std::llround(R.length() / s)) + 1;
    auto S = sample_orders(f, R.lo, s, N, k);
    return holder_estimate(S[k], s, alpha, opt.scales);
}

double metric(const Diffeo1& f, const Diffeo1& g, MetricKind kind, const ConcaveModulus* alpha,
              const MetricOptions& opt) {
    const bool fp = f.tail_class() == TailClass::Periodic, gp = g.tail_class() == TailClass::Periodic;
    if (fp != gp) throw InvalidArgument("metric: periodic maps are only compared with periodic maps");
    if (kind == MetricKind::CkAlpha && !alpha) throw InvalidArgument("metric: modulus required");
    int k = opt.k < 0 ? std::min(f.order(), g.order()) : opt.k;
    if (kind == MetricKind::C0) k = 0;
    if (k > std::min(f.order(), g.order())) throw InvalidArgument("metric: order exceeds stored jets");
    double s = opt.lattice;
    if (s <= 0.0) {
        double h = std::min(f.grid().step(), g.grid().step()) / 8.0;
        s = std::ldexp(1.0, static_cast<int>(std::floor(std::log2(h))));
    }
    Interval R;
    if (fp) {
        R = {0.0, 2.0};
    } else {
        Interval a = sample_region(f), b = sample_region(g);
        R = {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
    }
    double lo = std::floor(R.lo / s) * s, hi = std::ceil(R.hi / s) * s;
    const int N = static_cast<int>(std::llround((hi - lo) / s)) + 1;
    auto F = sample_orders(f, lo, s, N, k), G = sample_orders(g, lo, s, N, k);
    double d = 0.0;
    std::vector<std::vector<double>> diff(k + 1, std::vector<double>(N));
    for (int o = 0; o <= k; ++o)
        for (int j = 0; j < N; ++j) {
            diff[o][j] = F[o][j] - G[o][j];
            d = std::max(d, std::abs(diff[o][j]));
        }
    if (kind == MetricKind::C0) {
        Diffeo1 fi = inverse(f), gi = inverse(g);
        Interval a = sample_region(fi), b = sample_region(gi);
        if (fp) a = b = {0.0, 2.0};
        double ilo = std::floor(std::min(a.lo, b.lo) / s) * s, ihi = std::ceil(std::max(a.hi, b.hi) / s) * s;
        const int M = static_cast<int>(std::llround((ihi - ilo) / s)) + 1;
        auto FI = sample_orders(fi, ilo, s, M, 0), GI = sample_orders(gi, ilo, s, M, 0);
        for (int j = 0; j < M; ++j) d = std::max(d, std::abs(FI[0][j] - GI[0][j]));
    }
    if (kind == MetricKind::CkAlpha)
        for (int o = 1; o <= k; ++o) d = std::max(d, holder_estimate(diff[o], s, *alpha, opt.scales));
    return d;
}

// ---- slack reports ----

double SlackReport::min_slack() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) m = std::min(m, e.slack);
    return m;
}

void SlackReport::add(std::string name, double lhs, double rhs, double allowance) {
    entries.push_back({std::move(name), lhs, rhs, (1.0 + allowance) * rhs - lhs});
}

SlackReport verify_domination(const Diffeo1& f, const Diffeo1& g, const Interval& J, int i,
                              const ConcaveModulus& alpha, double allowance) {
    if (i < 0 || i + 1 > std::min(f.order(), g.order()))
        throw InvalidArgument("verify_domination: need jets of order i+1");
    for (const Diffeo1* m : {&f, &g}) {
        if (m->tail_class() == TailClass::Periodic)
            throw PreconditionError("verify_domination: maps must be eventually periodic with I_f in J");
        auto I = support_interval(*m);
        double h = m->grid().step() * (1 + 1e-9);
        if (I && (I->lo < J.lo - h || I->hi > J.hi + h))
            throw PreconditionError("verify_domination: I_f not contained in J");
    }
    if (i == 0 && (std::abs(f(J.lo) - g(J.lo)) > 1e-12 || std::abs(f(J.hi) - g(J.hi)) > 1e-12))
        throw PreconditionError("verify_domination: maps differ on the ends of J");
    const double s = std::min(f.grid().step(), g.grid().step()) / default_tolerances().eval_density;
    const double hi = J.hi + 1.0;
    const int N = static_cast<int>(std::llround((hi - J.lo) / s)) + 1;
    auto F = sample_orders(f, J.lo, s, N, i + 1), G = sample_orders(g, J.lo, s, N, i + 1);
    std::vector<double> ai(N), ai1(N);
    for (int j = 0; j < N; ++j) {
        ai[j] = F[i][j] - G[i][j];
        ai1[j] = F[i + 1][j] - G[i + 1][j];
    }
    const double l = J.length() + 2.0;
    double sup_i = sup_abs(ai), sup_i1 = sup_abs(ai1), hol_i = holder_estimate(ai, s, alpha);
    SlackReport r;
    r.add("sup_i <= l sup_{i+1}", sup_i, l * sup_i1, allowance);
    r.add("holder_i <= l/alpha(l) sup_{i+1}", hol_i, l / alpha(l) * sup_i1, allowance);
    return r;
}

double SampledMap::operator()(double t) const {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    return y[i - 1] + (y[i] - y[i - 1]) * (t - x[i - 1]) / (x[i] - x[i - 1]);
}

double SampledMap::sup() const { return sup_abs(y); }

double SampledMap::lipschitz() const {
    double m = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) m = std::max(m, std::abs(y[i] - y[i - 1]) / (x[i] - x[i - 1]));
    return m;
}

SlackReport verify_derivation(const SampledMap& f, const SampledMap& g, const SampledMap& diffeo,
                              const ConcaveModulus& alpha) {
    if (f.x != g.x) throw InvalidArgument("verify_derivation: f and g must share abscissae");
    for (std::size_t i = 1; i < diffeo.y.size(); ++i)
        if (!(diffeo.y[i] > diffeo.y[i - 1])) throw InvalidArgument("verify_derivation: map is not increasing");
    SlackReport r;
    const double hf = holder_all_pairs(f.x, f.y, alpha), hg = holder_all_pairs(g.x, g.y, alpha);
    std::vector<double> fg(f.x.size()), fgf(f.x.size());
    for (std::size_t i = 0; i < f.x.size(); ++i) {
        fg[i] = f.y[i] * g.y[i];
        fgf[i] = fg[i] * f.y[i];
    }
    r.add("[fg] <= [f]|g| + |f|[g]", holder_all_pairs(f.x, fg, alpha), hf * g.sup() + f.sup() * hg, 0.0);
    double amax = std::max(f.sup(), g.sup());
    r.add("[f g f] <= max|a|^2 sum [a]", holder_all_pairs(f.x, fgf, alpha), amax * amax * (2 * hf + hg), 0.0);
    // f o diffeo is piecewise linear on diffeo's nodes plus preimages of f's nodes
    std::vector<double> bx = diffeo.x;
    for (double v : f.x) {
        if (v <= diffeo.y.front() || v >= diffeo.y.back()) continue;
        auto it = std::upper_bound(diffeo.y.begin(), diffeo.y.end(), v);
        std::size_t i = static_cast<std::size_t>(it - diffeo.y.begin());
        double t = (v - diffeo.y[i - 1]) / (diffeo.y[i] - diffeo.y[i - 1]);
        bx.push_back(diffeo.x[i - 1] + t * (diffeo.x[i] - diffeo.x[i - 1]));
    }
    std::sort(bx.begin(), bx.end());
    bx.erase(std::unique(bx.begin(), bx.end()), bx.end());
    std::vector<double> comp(bx.size());
    for (std::size_t i = 0; i < bx.size(); ++i) comp[i] = f(diffeo(bx[i]));
    r.add("[f o g] <= [f] max(|g|_1, 1)", holder_all_pairs(bx, comp, alpha),
          hf * std::max(diffeo.lipschitz(), 1.0), 0.0);
    return r;
}

SlackReport verify_subadditivity(const std::vector<SampledMap>& terms, const ConcaveModulus& alpha) {
    SlackReport r;
    if (terms.empty()) return r;
    std::vector<double> sum(terms[0].x.size(), 0.0);
    double bound = 0.0;
    for (std::size_t n = 0; n < terms.size(); ++n) {
        if (terms[n].x != terms[0].x) throw InvalidArgument("verify_subadditivity: terms must share abscissae");
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += terms[n].y[i];
        bound += holder_all_pairs(terms[n].x, terms[n].y, alpha);
        // summation order differs from the bound's; allow rounding
        r.add("partial sum " + std::to_string(n + 1), holder_all_pairs(terms[0].x, sum, alpha), bound, 1e-12);
    }
    return r;
}

CompositionFit verify_composition_bound(const std::vector<std::pair<Diffeo1, Diffeo1>>& pairs,
                                        const ConcaveModulus& alpha, double eps, int k, const NormOptions& opt) {
    CompositionFit fit;
    for (const auto& [f, g] : pairs) {
        double nf = k_alpha_norm(f, alpha, k, opt), ng = k_alpha_norm(g, alpha, k, opt);
        if (!(nf < eps) || !(ng < eps))
            throw PreconditionError("verify_composition_bound: map outside the eps-ball");
        double nfg = k_alpha_norm(compose(f, g), alpha, k, opt);
        fit.max_norm = std::max({fit.max_norm, nf, ng});
        if (nf * ng > 0.0) fit.C = std::max(fit.C, (nfg - nf - ng) / (nf * ng));
        ++fit.pairs;
    }
    return fit;
}

double lip_met_constant(double length, const ConcaveModulus& alpha) {
    return length + alpha(length) + length / alpha(length);
}

SlackReport verify_lip_met(const Diffeo1& f, const Interval& J, const ConcaveModulus& alpha, double allowance,
                           const NormOptions& opt) {
    if (f.tail_class() != TailClass::Compact) throw PreconditionError("verify_lip_met: f must be compactly supported");
    auto I = support_interval(f);
    double h = f.grid().step() * (1 + 1e-9);
    if (I && (I->lo < J.lo - h || I->hi > J.hi + h)) throw PreconditionError("verify_lip_met: supp f not in J");
    const int k = f.order();
    const double s = f.grid().step() / opt.eval_density;
    const double lo = std::min(J.lo, f.grid().a), hi = std::max(J.hi, f.grid().b);
    const int N = static_cast<int>(std::llround((hi - lo) / s)) + 1;
    auto S = sample_orders(f, lo, s, N, k);
    const double K = lip_met_constant(J.length(), alpha);
    SlackReport r;
    for (int i = 0; i <= k; ++i) {
        double sup_i = sup_abs(S[i]), hol_i = holder_estimate(S[i], s, alpha, opt.scales);
        r.add("sup_" + std::to_string(i) + " <= K holder_" + std::to_string(i), sup_i, K * hol_i, allowance);
        if (i < k) {
            double sup_i1 = sup_abs(S[i + 1]);
            r.add("sup_" + std::to_string(i) + " <= K sup_" + std::to_string(i + 1), sup_i, K * sup_i1, allowance);
            r.add("holder_" + std::to_string(i) + " <= K sup_" + std::to_string(i + 1), hol_i, K * sup_i1, allowance);
        }
    }
    return r;
}

}  // namespace mather
