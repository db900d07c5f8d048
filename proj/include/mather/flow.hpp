#pragma once

#include <span>

#include "mather/config.hpp"
#include "mather/diffeo.hpp"
#include "mather/jet.hpp"

namespace mather {

/// Even plateau field rho(x) = S(2A+1-|x|) / (S(2A+1-|x|) + S(|x|-2A)),
/// S(t) = exp(-1/t) for t > 0. rho = 1 on [-2A, 2A], 0 off (-2A-1, 2A+1).
struct PlateauField {
    int A = 1;

    double operator()(double x) const;
    Taylor operator()(const Taylor& x) const;
    /// Derivatives 0..out.size()-1 of rho at x.
    void jet(double x, std::span<double> out) const;

    Interval plateau() const { return {-2.0 * A, 2.0 * A}; }
    Interval support() const { return {-2.0 * A - 1.0, 2.0 * A + 1.0}; }
};

PlateauField make_rho(int A);

struct FlowOptions {
    double abs_tol = default_tolerances().ode_abs;
    double rel_tol = default_tolerances().ode_rel;
};

/// Phi(t, x) and its x-derivatives up to out.size()-1, from the variational
/// system integrated alongside the trajectory.
void flow_jet(const PlateauField& rho, double t, double x, std::span<double> out,
              const FlowOptions& opt = {});
double flow(const PlateauField& rho, double t, double x, const FlowOptions& opt = {});

/// Time-t map as a compactly supported map with core [-2A-1, 2A+1].
Diffeo1 time_t_map(const PlateauField& rho, double t, int k, const Resolution& res = {},
                   const FlowOptions& opt = {});

/// The trajectory chart phi(y) = Phi(y, 0), a diffeomorphism from the line
/// onto (-2A-1, 2A+1). Evaluated pointwise: identity on the plateau, the flow
/// for moderate times and the inverse of the time coordinate
/// theta(z) = int_{2A}^z dw / rho(w) beyond `horizon`.
class Chart {
public:
    Chart(PlateauField rho, int k, double horizon);

    const PlateauField& field() const { return rho_; }
    int order() const { return k_; }
    double horizon() const { return horizon_; }

    double operator()(double y) const;
    /// Jet of phi at y (orders 0..out.size()-1).
    void jet(double y, std::span<double> out) const;

    /// phi^{-1}(x); +-infinity where rho(x) underflows to zero.
    double inverse(double x) const;
    void inverse_jet(double x, std::span<double> out) const;

    /// phi(phi^{-1}(x) + b); x itself where phi^{-1}(x) is infinite.
    double shift(double x, double b) const;

    /// Time coordinate theta(z) for z in [2A, 2A+1).
    double theta(double z) const;

private:
    PlateauField rho_;
    int k_;
    double horizon_;

    double forward_positive(double y) const;  // y > 2A
    double theta_inverse(double T) const;     // z with theta(z) = T
    void jet_at_value(double z, std::span<double> out) const;
};

/// W = 8(2A+1) as the switch between integration and the time coordinate.
Chart trajectory_chart(const PlateauField& rho, int k);

/// max over `samples` midpoints of (-2A-1, 2A+1) of |phi(phi^{-1}(x) + b) - tau_b(x)|.
double verify_chart_conjugation(const Chart& chart, double b, int samples, const FlowOptions& opt = {});

/// max over samples of |phi(u(phi^{-1}(x))) - u(x)| for u supported in the plateau.
double verify_chart_fixes(const Chart& chart, const Diffeo1& u, int samples);

}  // namespace mather
