#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mather/mather.hpp"
#include "mather/serialize.hpp"

namespace mather {

/// Odd blend Q with Q' = q = 1 + (s-1) P - c W, s = |E|/|D|. P is 1 on
/// [-2|D|, 2|D|] and falls to 0 over a unit ramp; W is a plateau further out
/// whose weight c makes Q(R) = R, so Q = Id outside [-R, R].
struct BlendMap {
    Diffeo1 Q;
    double scale = 1.0;
    double R = 0.0;
    double c = 0.0;
    int attempts = 1;
};

/// R starts at 4 max(|D|, |E|) and doubles once if q fails to stay positive;
/// a second failure throws ConstructionError.
BlendMap make_Q(const Interval& D, const Interval& E, int k, const Resolution& res = {});

/// Q h Q^{-1} for h supported where Q is the pure scaling, built on s * core(h).
Diffeo1 conjugate_by(const BlendMap& Q, const Diffeo1& h, const Resolution& res = {});

struct ThetaStage {
    Diffeo1 fu;
    Diffeo1 g;
    Diffeo1 psi;
};

/// Theta(u) = Psi(Q f u Q^{-1}). Refusals carry the failing stage in the message.
/// eps > 0 enforces ||f u||_{k,alpha} <= 3 eps.
ThetaStage theta_step(const Diffeo1& u, const Diffeo1& f, const BlendMap& Q, const MatherConfig& cfg,
                      double eps = 0.0);

/// Everything needed to replay the homology witness for f.
struct CertificateChain {
    MatherConfig cfg;
    Diffeo1 f;
    Diffeo1 u0;
    Diffeo1 fu;      // f o u0
    Diffeo1 Q;
    Diffeo1 g;       // Q fu Q^{-1}
    Diffeo1 psi;     // Psi g = Theta u0
    Diffeo1 tau;     // time-1 map of the plateau field
    Diffeo1 lambda;  // tau psi = lambda tau g lambda^{-1}
    double b = 0.0;
    double residual_conjugacy = 0.0;  // (a)
    double residual_blend = 0.0;      // (b) max |Q fu - g Q|
    double residual_fixed = 0.0;      // (c) d_k(psi, u0)
    int iterations = 0;
    std::vector<double> trace;
};

struct FixedPointOptions {
    double tol = 1e-6;
    int max_iter = 200;
    double eps = 0.0;  // ball radius for ||f u||; 0 skips the check
};

struct FixedPointResult {
    bool converged = false;
    std::optional<Diffeo1> u0;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> trace;  // d_k(u_{n+1}, u_n)
    std::string stop_reason;
    std::optional<CertificateChain> chain;
};

/// u_{n+1} = Theta(u_n) from u_0 = Id. On convergence the certificate chain is
/// assembled; otherwise the trace is returned with converged = false.
FixedPointResult fixed_point_search(const Diffeo1& f, const MatherConfig& cfg, const FixedPointOptions& opt = {});

/// Certificate for an already-found u0.
CertificateChain assemble_chain(const Diffeo1& f, const Diffeo1& u0, const MatherConfig& cfg, int iterations,
                                std::vector<double> trace);

struct VerifyItem {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool ok = false;
};

struct VerifyReport {
    std::vector<VerifyItem> items;
    bool ok() const;
};

struct VerifyTolerances {
    double conjugacy = 1e-5;
    double blend = 1e-8;
    double fixed = 1e-6;
    double flow = 1e-8;
    double replay_factor = 2.0;
};

/// Recomputes every identity of the chain from its maps and the recorded
/// field parameter; stored residuals are only compared, never trusted.
VerifyReport verify_certificate(const CertificateChain& chain, const VerifyTolerances& tol = {});

json to_json(const CertificateChain& c);
/// Throws InvalidArgument on a malformed document.
CertificateChain chain_from_json(const json& j);

json to_json(const VerifyReport& r);
json to_json(const FixedPointResult& r);

}  // namespace mather
