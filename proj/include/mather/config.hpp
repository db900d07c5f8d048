#pragma once

namespace mather {

/// Numerical tolerances. Every threshold used by the library lives here so
/// that a run can be reproduced from its echoed configuration.
struct Tolerances {
    double interp_residual = 1e-9;   // midpoint residual before grid doubling
    int node_cap = 1 << 16;          // max nodes in a core grid
    double root = 1e-13;             // inverse root finding
    double invariant = 1e-9;         // representation checks (tails, periodic seam)
    double surgery = 1e-9;           // window fixing in the spreading step
    double ode_abs = 1e-12;
    double ode_rel = 1e-12;
    double tol_b = 1e-7;             // translation test for the limit map
    double overlap = 1e-7;           // piece agreement in the conjugator
    double lemma_allowance = 0.01;   // relative slack allowed in lemma checks
    int eval_density = 8;            // evaluation points per grid cell in norms
    int holder_scales = 24;          // dyadic scales in the Hölder estimator
    int word_cap = 100000;           // max word length in rolling up / limit map
};

/// Process-wide default tolerances.
inline const Tolerances& default_tolerances() {
    static const Tolerances t{};
    return t;
}

}  // namespace mather
