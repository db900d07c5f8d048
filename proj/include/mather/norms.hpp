#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mather/config.hpp"
#include "mather/diffeo.hpp"
#include "mather/modulus.hpp"

namespace mather {

struct NormOptions {
    int eval_density = default_tolerances().eval_density;  // samples per grid cell
    int scales = default_tolerances().holder_scales;
};

struct BallQuery {
    TailClass cls;
    double delta;
};

struct BallMembership {
    TailClass cls;
    double delta;
    bool member;  // class matches and ||f - Id||_{k,alpha} < delta
};

struct NormReport {
    int k = 0;
    std::vector<double> sup_dev;        // ||f - Id||_i, i = 0..k
    std::vector<double> holder_dev;     // [f^(i) - Id^(i)]_alpha, i = 1..k (index i-1)
    std::vector<double> holder_coarse;  // same at half the sampling density
    double M_k = 0.0;
    std::vector<BallMembership> balls;

    /// ||f - Id||_{k,alpha} = [u^(k)]_alpha.
    double k_alpha() const { return holder_dev.empty() ? 0.0 : holder_dev.back(); }
    /// holder_dev / holder_coarse for the top order (>= 1).
    double refinement_ratio() const;
};

/// Sup norms and Hölder seminorms of the displacement, sampled on a lattice
/// `eval_density` times finer than the node grid.
NormReport norm_report(const Diffeo1& f, const ConcaveModulus& alpha, int k = -1,
                       const NormOptions& opt = {}, const std::vector<BallQuery>& balls = {});

/// ||f - Id||_{k,alpha} alone.
double k_alpha_norm(const Diffeo1& f, const ConcaveModulus& alpha, int k, const NormOptions& opt = {});

/// Dyadic multi-scale estimate of [F]_alpha for samples F on a uniform grid.
/// Scales m = 1, 2, 4, ... (at most `scales` of them) plus the full width.
double holder_estimate(const std::vector<double>& F, double step, const ConcaveModulus& alpha,
                       int scales = default_tolerances().holder_scales);

/// Exact seminorm of the piecewise linear interpolant of (x_i, F_i).
double holder_all_pairs(const std::vector<double>& x, const std::vector<double>& F,
                        const ConcaveModulus& alpha);

enum class MetricKind { C0, Ck, CkAlpha };

struct MetricOptions {
    int k = -1;              // default: common jet order
    double lattice = 0.0;    // sample spacing; 0 = automatic power of two
    int scales = default_tolerances().holder_scales;
};

/// d_0, d_k or d_{k,alpha}. Samples on multiples of a power-of-two spacing so
/// that distances between any three maps use consistent point sets.
double metric(const Diffeo1& f, const Diffeo1& g, MetricKind kind, const ConcaveModulus* alpha = nullptr,
              const MetricOptions& opt = {});

struct SlackEntry {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // (1 + allowance) * rhs - lhs
};

struct SlackReport {
    std::vector<SlackEntry> entries;
    double min_slack() const;
    bool ok() const { return min_slack() >= 0.0; }
    void add(std::string name, double lhs, double rhs, double allowance);
};

/// f, g with I_f, I_g inside J. Checks ||a||_i <= l ||a||_{i+1} and
/// [a^(i)]_alpha <= (l / alpha(l)) ||a||_{i+1} for a = f - g, l = |J| + 2.
/// For i = 0 the maps must agree on the ends of J.
SlackReport verify_domination(const Diffeo1& f, const Diffeo1& g, const Interval& J, int i,
                              const ConcaveModulus& alpha,
                              double allowance = default_tolerances().lemma_allowance);

/// Piecewise linear map sampled on increasing abscissae.
struct SampledMap {
    std::vector<double> x;
    std::vector<double> y;
    double operator()(double t) const;
    double sup() const;
    double lipschitz() const;  // max cell slope
};

/// Product rule, m-fold product rule and precomposition bound for piecewise
/// linear maps. Every seminorm is exact, so no allowance is needed.
SlackReport verify_derivation(const SampledMap& f, const SampledMap& g, const SampledMap& diffeo,
                              const ConcaveModulus& alpha);

/// Partial sums [sum f_i]_alpha <= sum [f_i]_alpha on a common abscissa set.
SlackReport verify_subadditivity(const std::vector<SampledMap>& terms, const ConcaveModulus& alpha);

struct CompositionFit {
    double C = 0.0;       // smallest C making every pair satisfy the bound
    int pairs = 0;
    double max_norm = 0.0;
};

/// ||f o g||_{k,alpha} <= ||f|| + ||g|| + C ||f|| ||g|| over a batch.
/// Throws PreconditionError when a map lies outside the eps-ball.
CompositionFit verify_composition_bound(const std::vector<std::pair<Diffeo1, Diffeo1>>& pairs,
                                        const ConcaveModulus& alpha, double eps, int k,
                                        const NormOptions& opt = {});

/// f compact with support in J. With K = |J| + alpha(|J|) + |J|/alpha(|J|):
/// ||u||_i <= K [u^(i)]_alpha, ||u||_i <= K ||u||_{i+1}, [u^(i)]_alpha <= K ||u||_{i+1}.
SlackReport verify_lip_met(const Diffeo1& f, const Interval& J, const ConcaveModulus& alpha,
                           double allowance = default_tolerances().lemma_allowance,
                           const NormOptions& opt = {});

/// K = |J| + alpha(|J|) + |J|/alpha(|J|).
double lip_met_constant(double length, const ConcaveModulus& alpha);

}  // namespace mather
