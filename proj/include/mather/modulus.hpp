#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mather {

/// x^s, 0 < s <= 1.
struct HolderKind {
    double s = 1.0;
};

/// exp(-sigma L - tau L / log L) with L = log(1/x) on (0, delta],
/// a*sqrt(x) + b beyond delta.
struct OmegaZKind {
    double sigma = 0.0;
    double tau = 0.0;
    double delta = 0.0;
    double ext_a = 0.0;
    double ext_b = 0.0;
};

/// Piecewise linear through (abscissae[i], values[i]), abscissae[0] = 0.
/// Linear extrapolation with the final slope.
struct SampledKind {
    std::vector<double> abscissae;
    std::vector<double> values;
};

/// A concave homeomorphism of [0, inf) used as a modulus of continuity.
class ConcaveModulus {
public:
    using Kind = std::variant<HolderKind, OmegaZKind, SampledKind>;

    explicit ConcaveModulus(Kind kind);

    double operator()(double x) const;
    /// Derivative from the right; used by the omega_z extension.
    double slope(double x) const;

    const Kind& kind() const { return kind_; }
    std::string name() const;

    /// Asymptotic value of F(t) = sup t alpha(x)/alpha(tx) and
    /// G(t) = sup alpha(tx)/alpha(x) as x -> 0+ and x -> inf, when known
    /// in closed form. Used to complement finite grids in classification.
    struct Limits {
        double F0, Finf, G0, Ginf;
    };
    Limits limits(double t) const;

private:
    Kind kind_;
};

/// x^s. Throws InvalidArgument unless 0 < s <= 1.
ConcaveModulus holder(double s);

/// The exp(-sigma log(1/x) - tau log(1/x)/loglog(1/x)) family.
/// (sigma, tau) must be lexicographically in (0, 1]: sigma in (0,1), or
/// sigma = 0 and tau > 0, or sigma = 1 and tau <= 0.
/// Throws ConstructionError when no concavity threshold is found above 1e-12.
ConcaveModulus omega_z(double sigma, double tau);

struct Majorant {
    ConcaveModulus beta0;  // upper concave hull of the samples
    ConcaveModulus beta;   // beta0 + Id
};

/// Least concave majorant of samples (t_i, mu_i) with t_0 = 0, mu_0 = 0.
/// Throws InvalidArgument on decreasing samples.
Majorant least_concave_majorant(const std::vector<double>& t, const std::vector<double>& mu);

struct OscillationSamples {
    std::vector<double> t;   // separations m*step, m = 0..n-1
    std::vector<double> mu;  // sup |f(x)-f(y)| over |x-y| <= t
};

/// Oscillation modulus of uniformly sampled values on [lo, hi].
OscillationSamples oscillation_modulus(const std::vector<double>& values, double lo, double hi);

enum class Verdict { Yes, Inconclusive };

struct TamenessSide {
    Verdict verdict = Verdict::Inconclusive;
    double t0 = 0.0;
    double sup = 0.0;     // measured sup at t0
    double margin = 0.0;  // 1 - sup
};

struct TamenessVerdict {
    TamenessSide sup_tame;
    TamenessSide sub_tame;
};

/// sup over x of t alpha(x) / alpha(t x).
double tameness_F(const ConcaveModulus& alpha, double t, const std::vector<double>& x_grid);
/// sup over x of alpha(t x) / alpha(x).
double tameness_G(const ConcaveModulus& alpha, double t, const std::vector<double>& x_grid);

/// Positive tameness test. Yes when some t0 gives sup <= 1 - 1e-3.
TamenessVerdict classify_tameness(const ConcaveModulus& alpha, const std::vector<double>& t_grid,
                                  const std::vector<double>& x_grid, double min_margin = 1e-3);

struct ModulusLawReport {
    double worst_lower = 0.0;  // min over x of alpha(Cx) - min(C,1) alpha(x)
    double worst_upper = 0.0;  // min over x of max(C,1) alpha(x) - alpha(Cx)
    double worst_ratio = 0.0;  // min over consecutive x of x2/alpha(x2) - x1/alpha(x1)
    bool ok = false;
};

ModulusLawReport check_modulus_laws(const ConcaveModulus& alpha, double C,
                                    const std::vector<double>& grid);

/// Worst relative chord violation over consecutive triples of the grid;
/// nonpositive means concave on the grid.
double concavity_defect(const ConcaveModulus& alpha, const std::vector<double>& grid);

/// n geometrically spaced points on [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, int n);

}  // namespace mather
