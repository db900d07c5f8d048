#include "mather/jet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>

#include "mather/error.hpp"

namespace mather {

Jet Jet::identity(double x, int order) {
    Jet j;
    j.base = x;
    j.d.assign(order + 1, 0.0);
    j.d[0] = x;
    if (order >= 1) j.d[1] = 1.0;
    return j;
}

std::vector<const CompositionRow*> CompositionTable::interior() const {
    std::vector<const CompositionRow*> out;
    for (const auto& r : rows)
        if (r.blocks > 1 && r.blocks < order) out.push_back(&r);
    return out;
}

std::int64_t CompositionTable::coefficient_sum() const {
    std::int64_t s = 0;
    for (const auto& r : rows) s += r.coeff;
    return s;
}

namespace {

using Term = std::pair<int, std::vector<int>>;

CompositionTable to_table(int k, const std::map<Term, std::int64_t>& terms) {
    CompositionTable t;
    t.order = k;
    for (const auto& [key, c] : terms) t.rows.push_back({key.first, key.second, c});
    // extreme rows first: (f^(k) o g)(g')^k, then (f' o g) g^(k)
    std::stable_sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) {
        return a.blocks > b.blocks;
    });
    return t;
}

}  // namespace

CompositionTable build_table(int k) {
    if (k < 1 || k > max_jet_order)
        throw InvalidArgument("build_table: order " + std::to_string(k) + " outside [1,12]");
    std::map<Term, std::int64_t> terms{{{1, {1}}, 1}};
    for (int m = 2; m <= k; ++m) {
        std::map<Term, std::int64_t> next;
        for (const auto& [key, c] : terms) {
            const auto& [i, parts] = key;
            // d/dx hits the outer derivative: f^(i+1) o g picks up a g'
            auto grown = parts;
            grown.insert(grown.begin(), 1);
            next[{i + 1, grown}] += c;
            // d/dx hits one of the inner factors g^(p)
            for (std::size_t t = 0; t < parts.size(); ++t) {
                auto bumped = parts;
                bumped[t] += 1;
                std::sort(bumped.begin(), bumped.end());
                next[{i, bumped}] += c;
            }
        }
        terms = std::move(next);
    }
    return to_table(k, terms);
}

namespace {

struct FlatTables {
    // For each order m: rows as (coeff, i, parts...) flattened.
    struct Row {
        double coeff;
        int blocks;
        std::array<int, max_jet_order> parts;
    };
    std::array<CompositionTable, max_jet_order + 1> tables;
    std::array<std::vector<Row>, max_jet_order + 1> flat;

    FlatTables() {
        for (int m = 1; m <= max_jet_order; ++m) {
            tables[m] = build_table(m);
            for (const auto& r : tables[m].rows) {
                Row fr{static_cast<double>(r.coeff), r.blocks, {}};
                std::copy(r.parts.begin(), r.parts.end(), fr.parts.begin());
                flat[m].push_back(fr);
            }
        }
    }
};

const FlatTables& flat_tables() {
    static const FlatTables t;
    return t;
}

}  // namespace

const CompositionTable& table(int k) {
    if (k < 1 || k > max_jet_order)
        throw InvalidArgument("table: order " + std::to_string(k) + " outside [1,12]");
    return flat_tables().tables[k];
}

void compose_raw(std::span<const double> f, std::span<const double> g, std::span<double> out) {
    const int k = static_cast<int>(g.size()) - 1;
    const auto& ft = flat_tables();
    std::array<double, max_jet_order + 1> res{};
    res[0] = f[0];
    for (int m = 1; m <= k; ++m) {
        double s = 0.0;
        for (const auto& r : ft.flat[m]) {
            double p = r.coeff * f[r.blocks];
            for (int t = 0; t < r.blocks; ++t) p *= g[r.parts[t]];
            s += p;
        }
        res[m] = s;
    }
    std::copy(res.begin(), res.begin() + k + 1, out.begin());
}

Jet compose_jets(const Jet& f_jet, const Jet& g_jet) {
    if (f_jet.order() != g_jet.order())
        throw InvalidArgument("compose_jets: order mismatch");
    if (std::abs(f_jet.base - g_jet.d[0]) > 1e-9 * std::max(1.0, std::abs(g_jet.d[0])))
        throw InvalidArgument("compose_jets: f jet is not based at g(x)");
    Jet out;
    out.base = g_jet.base;
    out.d.resize(g_jet.d.size());
    compose_raw(f_jet.d, g_jet.d, out.d);
    return out;
}

void invert_raw(double x, std::span<const double> f, std::span<double> out) {
    const int k = static_cast<int>(f.size()) - 1;
    if (k >= 1 && !(f[1] > 0.0))
        throw InvalidArgument("invert_jet: first derivative must be positive");
    const auto& ft = flat_tables();
    std::array<double, max_jet_order + 1> F{};
    F[0] = x;
    if (k >= 1) F[1] = 1.0 / f[1];
    for (int m = 2; m <= k; ++m) {
        // F^(m) = -F' [ f^(m) (F')^m + sum over interior rows C f^(i) prod F^(j_t) ]
        double s = f[m] * std::pow(F[1], m);
        for (const auto& r : ft.flat[m]) {
            if (r.blocks <= 1 || r.blocks >= m) continue;
            double p = r.coeff * f[r.blocks];
            for (int t = 0; t < r.blocks; ++t) p *= F[r.parts[t]];
            s += p;
        }
        F[m] = -F[1] * s;
    }
    std::copy(F.begin(), F.begin() + k + 1, out.begin());
}

Jet invert_jet(const Jet& f_jet) {
    Jet out;
    out.base = f_jet.d.empty() ? 0.0 : f_jet.d[0];
    out.d.resize(f_jet.d.size());
    invert_raw(f_jet.base, f_jet.d, out.d);
    return out;
}

// ---- Taylor arithmetic ----

Taylor::Taylor(int order, double value) : c_(order + 1, 0.0) { c_[0] = value; }

Taylor Taylor::variable(int order, double x0) {
    Taylor t(order, x0);
    if (order >= 1) t.c_[1] = 1.0;
    return t;
}

std::vector<double> Taylor::derivatives() const {
    std::vector<double> d(c_.size());
    double fact = 1.0;
    for (std::size_t i = 0; i < c_.size(); ++i) {
        if (i > 0) fact *= static_cast<double>(i);
        d[i] = c_[i] * fact;
    }
    return d;
}

Taylor& Taylor::operator+=(const Taylor& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Taylor& Taylor::operator-=(const Taylor& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Taylor& Taylor::operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
}

Taylor operator-(const Taylor& a) { return a * -1.0; }

Taylor operator-(double s, const Taylor& a) { return (-a) + s; }

Taylor operator*(const Taylor& a, const Taylor& b) {
    const int n = a.order();
    Taylor r(n, 0.0);
    for (int i = 0; i <= n; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += a.c_[j] * b.c_[i - j];
        r.c_[i] = s;
    }
    return r;
}

Taylor operator/(const Taylor& a, const Taylor& b) {
    const int n = a.order();
    Taylor q(n, 0.0);
    for (int i = 0; i <= n; ++i) {
        double s = a.c_[i];
        for (int j = 0; j < i; ++j) s -= q.c_[j] * b.c_[i - j];
        q.c_[i] = s / b.c_[0];
    }
    return q;
}

Taylor operator/(double s, const Taylor& b) { return Taylor(b.order(), s) / b; }

Taylor exp(const Taylor& a) {
    const int n = a.order();
    Taylor e(n, std::exp(a.c_[0]));
    for (int i = 1; i <= n; ++i) {
        double s = 0.0;
        for (int j = 1; j <= i; ++j) s += j * a.c_[j] * e.c_[i - j];
        e.c_[i] = s / i;
    }
    return e;
}

Taylor log(const Taylor& a) {
    const int n = a.order();
    Taylor l(n, std::log(a.c_[0]));
    for (int i = 1; i <= n; ++i) {
        double s = a.c_[i];
        for (int j = 1; j < i; ++j) s -= static_cast<double>(j) / i * l.c_[j] * a.c_[i - j];
        l.c_[i] = s / a.c_[0];
    }
    return l;
}

Taylor pow(const Taylor& a, double r) {
    const int n = a.order();
    Taylor p(n, std::pow(a.c_[0], r));
    for (int i = 1; i <= n; ++i) {
        double s = 0.0;
        for (int j = 1; j <= i; ++j) s += ((r + 1.0) * j - i) * a.c_[j] * p.c_[i - j];
        p.c_[i] = s / (i * a.c_[0]);
    }
    return p;
}

void sincos(const Taylor& a, Taylor& s, Taylor& c) {
    const int n = a.order();
    s = Taylor(n, std::sin(a.c_[0]));
    c = Taylor(n, std::cos(a.c_[0]));
    for (int i = 1; i <= n; ++i) {
        double ss = 0.0, cc = 0.0;
        for (int j = 1; j <= i; ++j) {
            ss += j * a.c_[j] * c.c_[i - j];
            cc -= j * a.c_[j] * s.c_[i - j];
        }
        s.c_[i] = ss / i;
        c.c_[i] = cc / i;
    }
}

Taylor flat_step(const Taylor& t) {
    // below t ~ 1/700 every derivative underflows anyway
    if (!(t.value() > 1.0 / 700.0)) return Taylor(t.order(), 0.0);
    return exp(-(1.0 / t));
}

Taylor smooth_step(const Taylor& t) {
    if (t.value() <= 0.0) return Taylor(t.order(), 0.0);
    if (t.value() >= 1.0) return Taylor(t.order(), 1.0);
    Taylor a = flat_step(t);
    Taylor b = flat_step(1.0 - t);
    return a / (a + b);
}

}  // namespace mather
