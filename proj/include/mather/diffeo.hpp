#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mather/config.hpp"
#include "mather/jet.hpp"

namespace mather {

enum class TailClass { Compact, Periodic, EventuallyPeriodic };

const char* to_string(TailClass c);
TailClass tail_class_from_string(const std::string& s);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    bool contains(const Interval& o) const { return o.lo >= lo && o.hi <= hi; }
};

/// Uniform grid a = x_0 < ... < x_{n-1} = b.
struct Grid {
    double a = 0.0;
    double b = 1.0;
    int n = 2;
    double step() const { return (b - a) / (n - 1); }
    double node(int i) const { return i == n - 1 ? b : a + step() * i; }
};

/// An orientation preserving C^k diffeomorphism of the line, stored as jets
/// of the displacement u = f - Id at the nodes of a uniform core grid and
/// interpolated by two-point Hermite polynomials of degree 2k+1.
///
/// Tail rules outside the core:
///  - Compact: u = 0 outside [a, b].
///  - Periodic: b = a + 1 and u is 1-periodic.
///  - EventuallyPeriodic: u = 0 left of a; right of b, u repeats its values
///    on the last unit window [b-1, b].
class Diffeo1 {
public:
    /// Validates the invariants of the tail class (throws InvariantViolation).
    Diffeo1(TailClass cls, Grid grid, int k, std::vector<double> jets,
            double tol = default_tolerances().invariant);

    static Diffeo1 identity(TailClass cls, Grid grid, int k);

    TailClass tail_class() const { return cls_; }
    const Grid& grid() const { return grid_; }
    int order() const { return k_; }
    std::span<const double> node_jet(int i) const {
        return {jets_.data() + static_cast<std::size_t>(i) * (k_ + 1), static_cast<std::size_t>(k_ + 1)};
    }
    const std::vector<double>& jets() const { return jets_; }

    /// Displacement derivatives 0..out.size()-1 at x (out.size() <= k+1).
    void displacement(double x, std::span<double> out) const;
    double displacement(double x) const;

    /// Jet of f at x up to `order` (default k).
    Jet evaluate(double x, int order = -1) const;
    /// Raw jet of f at x written to out (size <= k+1).
    void evaluate_raw(double x, std::span<double> out) const;
    double operator()(double x) const { return x + displacement(x); }

    /// f^{-1}(y) by safeguarded Newton.
    double inverse_value(double y, double tol = default_tolerances().root) const;

    /// Region where the map can differ from its tail law.
    Interval core() const { return {grid_.a, grid_.b}; }

    std::optional<std::string> modulus_tag;

private:
    TailClass cls_;
    Grid grid_;
    int k_;
    std::vector<double> jets_;

    double reduce(double x) const;  // map x into the stored window, or NaN for u = 0
};

/// Computes displacement jets (orders 0..k) at a point.
using NodeFn = std::function<void(double x, std::span<double> out)>;

struct Resolution {
    double residual_tol = default_tolerances().interp_residual;
    int node_cap = default_tolerances().node_cap;
};

/// Samples node_fn on a uniform grid over [a, b], doubling the node count
/// while the midpoint residual of the interpolant exceeds the tolerance.
/// Periodic outputs get their seam node copied from the first node.
Diffeo1 build_sampled(TailClass cls, double a, double b, int n0, int k, const NodeFn& node_fn,
                      const Resolution& res = {});

/// Same, without refinement.
Diffeo1 build_fixed(TailClass cls, double a, double b, int n, int k, const NodeFn& node_fn);

/// f o g.
Diffeo1 compose(const Diffeo1& f, const Diffeo1& g, const Resolution& res = {});

/// Compose a list right to left: maps[0] o maps[1] o ... .
Diffeo1 compose_all(const std::vector<Diffeo1>& maps, const Resolution& res = {});

Diffeo1 inverse(const Diffeo1& f, const Resolution& res = {});

/// Smallest closed interval outside which the tail law holds at grid
/// resolution; nullopt for periodic maps and for the identity.
std::optional<Interval> support_interval(const Diffeo1& f, double slack = 1e-10);

/// T_b f T_{-b}: shifted grid, same jets.
Diffeo1 translate_conjugate(const Diffeo1& f, double b);

/// Analytic constructions.
///  smooth_bump_displacement: eps, c, r, n, k
///  scaled_family: eps, A, octaves, r, n, k   (lacunary profile A*u(x/A))
///  periodic_wiggle: amps[], phases[], fix_origin, n, k
struct PresetParams {
    double eps = 1e-3;
    double c = 0.0;
    double r = 1.0;
    double A = 1.0;
    int octaves = 8;
    std::vector<double> amps;
    std::vector<double> phases;
    bool fix_origin = false;
    int n = 257;
    int k = 2;
};

Diffeo1 from_preset(const std::string& name, const PresetParams& p);

/// Closed-form displacement jets of a preset at x (orders 0..k).
void preset_displacement(const std::string& name, const PresetParams& p, double x,
                         std::span<double> out);

/// Normalized exp-bump exp(1 - 1/(1 - s^2)), s = (x - c)/r; jets in Taylor form.
Taylor bump(const Taylor& x, double c, double r);

struct Cover {
    std::vector<Interval> elements;  // open intervals
};

struct Fragmentation {
    std::vector<Diffeo1> fragments;  // g = fragments[0] o fragments[1] o ...
    double K = 0.0;                  // 2 + sum sup|phi_i'|
    double eps_measured = 0.0;       // max(|g - Id|, |g' - 1|)
    double min_partial_slope = 1.0;  // min over j, x of g_j'(x)
};

/// Splits a compactly supported g into maps supported in the cover elements.
/// Throws PreconditionError when eps >= 1/(2K) or the cover misses supp g.
Fragmentation fragment(const Diffeo1& g, const Cover& cover, const Resolution& res = {});

/// Compact restriction of a map fixing the window [c, c + w]: agrees with f
/// on the window and is the identity elsewhere. Throws PreconditionError
/// when the displacement jets do not vanish at the window ends.
Diffeo1 restrict_to_window(const Diffeo1& f, double c, double w,
                           double tol = default_tolerances().surgery);

}  // namespace mather
