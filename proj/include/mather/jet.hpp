#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mather {

/// Values of a scalar map and its derivatives at one point:
/// d[i] is the i-th derivative at `base`.
struct Jet {
    double base = 0.0;
    std::vector<double> d;

    int order() const { return static_cast<int>(d.size()) - 1; }

    /// Jet of the identity map at x.
    static Jet identity(double x, int order);
};

/// One term C * (f^(i) o g) * g^(j_1) ... g^(j_i) of the k-th derivative of f o g.
struct CompositionRow {
    int blocks = 0;
    std::vector<int> parts;  // nondecreasing, sums to the table order
    std::int64_t coeff = 0;
};

struct CompositionTable {
    int order = 0;
    std::vector<CompositionRow> rows;

    /// Rows with 1 < blocks < order; the two extreme rows are excluded.
    std::vector<const CompositionRow*> interior() const;
    std::int64_t coefficient_sum() const;
};

constexpr int max_jet_order = 12;

/// Builds the order-k table by differentiating the order-(k-1) one.
/// Throws InvalidArgument unless 1 <= k <= 12.
CompositionTable build_table(int k);

/// Cached table; built once per process.
const CompositionTable& table(int k);

/// Jet of f o g at x from the jet of f at g(x) and the jet of g at x.
/// Orders must agree; f_jet.base must equal g_jet.d[0] to 1e-9.
Jet compose_jets(const Jet& f_jet, const Jet& g_jet);

/// Raw variant: f and g hold derivatives 0..k, out receives 0..k.
/// No base check; used in inner loops.
void compose_raw(std::span<const double> f, std::span<const double> g, std::span<double> out);

/// Jet of f^{-1} at f(x) from the jet of f at x. Requires d[1] > 0.
Jet invert_jet(const Jet& f_jet);

/// Raw variant of invert_jet; x is the base point of f, so out[0] = x.
void invert_raw(double x, std::span<const double> f, std::span<double> out);

/// Truncated Taylor arithmetic. c[i] holds f^(i)(x0)/i!.
/// Used for closed-form jets of bumps, cutoffs and the plateau field.
class Taylor {
public:
    Taylor() = default;
    Taylor(int order, double value);
    /// The variable x expanded at x0.
    static Taylor variable(int order, double x0);

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double value() const { return c_[0]; }
    double operator[](int i) const { return c_[i]; }
    double& operator[](int i) { return c_[i]; }

    /// Derivatives f^(i)(x0) for i = 0..order.
    std::vector<double> derivatives() const;

    Taylor& operator+=(const Taylor& o);
    Taylor& operator-=(const Taylor& o);
    Taylor& operator*=(double s);
    Taylor& operator+=(double s) { c_[0] += s; return *this; }

    friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
    friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
    friend Taylor operator+(Taylor a, double s) { return a += s; }
    friend Taylor operator+(double s, Taylor a) { return a += s; }
    friend Taylor operator-(Taylor a, double s) { return a += -s; }
    friend Taylor operator-(double s, const Taylor& a);
    friend Taylor operator*(Taylor a, double s) { return a *= s; }
    friend Taylor operator*(double s, Taylor a) { return a *= s; }
    friend Taylor operator*(const Taylor& a, const Taylor& b);
    friend Taylor operator/(const Taylor& a, const Taylor& b);
    friend Taylor operator/(double s, const Taylor& b);
    friend Taylor operator-(const Taylor& a);

    friend Taylor exp(const Taylor& a);
    friend Taylor log(const Taylor& a);
    friend Taylor pow(const Taylor& a, double r);
    friend void sincos(const Taylor& a, Taylor& s, Taylor& c);

private:
    std::vector<double> c_;
};

Taylor exp(const Taylor& a);
Taylor log(const Taylor& a);
Taylor pow(const Taylor& a, double r);
void sincos(const Taylor& a, Taylor& s, Taylor& c);

/// exp(-1/t) for t > 0, identically zero otherwise.
Taylor flat_step(const Taylor& t);

/// Smooth transition: 0 for t <= 0, 1 for t >= 1, flat_step ratio between.
Taylor smooth_step(const Taylor& t);

}  // namespace mather
