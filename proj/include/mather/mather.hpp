#pragma once

#include <span>
#include <vector>

#include "mather/config.hpp"
#include "mather/diffeo.hpp"
#include "mather/flow.hpp"
#include "mather/modulus.hpp"
#include "mather/norms.hpp"

namespace mather {

/// Interval rule: k >= 2 gives D = [-2,2], E = [-2A,2A], B = 1;
/// k = 1 gives D = [-2A,2A], E = [-2,2], B = A. J = [-2A, 2A] always.
struct MatherConfig {
    int k = 2;
    ConcaveModulus alpha = holder(0.5);
    int A = 1;
    int B = 1;
    Interval D{-2, 2};
    Interval E{-2, 2};
    Interval J{-2, 2};
    double eps0 = 0.0;    // 1 / (100 (1 + |zeta| + |zeta'|))
    double delta0 = 0.0;  // ball radius for inputs of Psi, Gamma checks and the limit map
    Tolerances tol = default_tolerances();

    Resolution resolution() const { return {tol.interp_residual, tol.node_cap}; }
};

MatherConfig make_config(int k, const ConcaveModulus& alpha, int A, const Tolerances& tol = default_tolerances());

/// 1-periodic cutoff: 1 on [-1/10, 1/10] + Z, 0 on 1/2 + [-1/10, 1/10] + Z.
Taylor zeta(const Taylor& x);
double zeta(double x);
/// sup |zeta'| on a fine lattice.
double zeta_slope_bound();

// ---- rolling up ----

struct RollInfo {
    double a = 0.0;       // sup |g - Id|
    Interval support;     // I_g
    int s = 0;            // ceil((|I_g| + 1) / (1 - a))
    bool identity = false;
};

/// Measures the quantities that fix the word length. Throws PreconditionError
/// unless g is compactly supported with sup |g - Id| < 1.
RollInfo roll_info(const Diffeo1& g);

/// Displacement jets of T^{r-s} (Tg)^s T^{-r} at x, for explicit r, s.
void gamma_word(const Diffeo1& g, double x, long r, long s, std::span<double> out);
/// r chosen with inf I_g - 1 < x - r <= inf I_g.
long gamma_r(const RollInfo& info, double x);

/// Gamma g as a periodic map on the window [0, 1].
Diffeo1 gamma_roll(const Diffeo1& g, const Resolution& res = {});
/// (Gamma g)^{-1}(x) from the word T^{s-r} (Tg)^{-s} T^r.
double gamma_inverse_value(const Diffeo1& g, const RollInfo& info, double x);
double gamma_value(const Diffeo1& g, const RollInfo& info, double x);

/// ||Gamma f||_{k,alpha} <= 4 (|I_f| + 1) ||f||_{k,alpha}. Throws
/// PreconditionError when ||f||_{k,alpha} >= delta0.
SlackReport gamma_norm_check(const Diffeo1& f, const MatherConfig& cfg);

// ---- spreading ----

/// (Id + c1 u) o (Id + c0 u)^{-1} for a periodic map Id + u.
Diffeo1 fraction_quotient(const Diffeo1& h, double c1, double c0, const Resolution& res = {});

/// i-th factor g_i o g_{i-1}^{-1} of the linear isotopy from Id to h at times i/B.
Diffeo1 discrete_isotopy(const Diffeo1& h, int B, int i, const Resolution& res = {});

/// T(-g(0)) g on the same grid.
Diffeo1 recenter(const Diffeo1& g);

/// (h1 restricted to [1,2]) o (h0 restricted to [-3/2,-1/2]) with h = T(-g(0))g,
/// h0 = zeta h + (1 - zeta) Id, h1 = h o h0^{-1}. Compact on [-2, 2].
Diffeo1 omega1_spread(const Diffeo1& g, const MatherConfig& cfg);

/// Product over i of T(c_i) Omega_1(DI_B^i(T(-g(0))g)) T(-c_i), c_i = -2B - 2 + 4i.
Diffeo1 omega_spread(const Diffeo1& g, int B, const MatherConfig& cfg);

struct PsiResult {
    Diffeo1 gamma;
    Diffeo1 psi;
    double norm_in = 0.0;
    double norm_out = 0.0;
};

/// Psi g = Omega_B(Gamma g). Throws PreconditionError when g is not supported
/// in E or has ||g||_{k,alpha} >= delta0 (unless check_ball is false).
PsiResult psi_reduce(const Diffeo1& g, const MatherConfig& cfg, bool check_ball = true);

// ---- conjugacy ----

/// Lambda(x) = (Tv)^s (Tu)^{-s}(x), with s grown per point until
/// (Tu)^{-s}(x) <= -2A.
class LimitWord {
public:
    LimitWord(const Diffeo1& u, const Diffeo1& v, const MatherConfig& cfg);

    int base_s() const { return s_; }
    double a() const { return a_; }
    /// Jet of Lambda at x (orders 0..out.size()-1).
    void jet(double x, std::span<double> out) const;
    double operator()(double x) const;

private:
    Diffeo1 u_;
    Diffeo1 v_;
    double lo_;
    int s_;
    int cap_;
    double a_;
};

/// Eventually periodic Lambda with core [-2A, 2A + 3/2].
Diffeo1 lambda_limit(const Diffeo1& u, const Diffeo1& v, const MatherConfig& cfg);

struct ConjugacyCertificate {
    int A = 1;
    Diffeo1 tau;
    Diffeo1 lambda;
    double b = 0.0;
    double translation_dev = 0.0;  // deviation of Gamma v (Gamma u)^{-1} - Id from its mean
    double overlap_left = 0.0;
    double overlap_right = 0.0;
    double residual = 0.0;         // max |tau v - lambda tau u lambda^{-1}|
};

/// max over `samples` points of [-2A-2, 2A+2] of |tau(v(x)) - lambda(tau(u(lambda^{-1}(x))))|.
double conjugacy_residual(const Diffeo1& tau, const Diffeo1& lambda, const Diffeo1& u, const Diffeo1& v,
                          int A, int samples = 2001);

/// Builds lambda = phi Lambda phi^{-1} between -2A and 2A + 1/2, tau_b beyond,
/// Id to the left. Throws PreconditionError when Gamma v (Gamma u)^{-1} is not a
/// translation within tol_b, ConstructionError on an overlap mismatch.
/// `tau` may carry a precomputed time-1 map of the chart's field.
ConjugacyCertificate conjugator(const Diffeo1& u, const Diffeo1& v, const Chart& chart, const MatherConfig& cfg,
                                const Diffeo1* tau = nullptr);

}  // namespace mather
