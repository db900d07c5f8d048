#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mather/error.hpp"
#include "mather/modulus.hpp"

using namespace mather;
using Catch::Approx;

namespace {

// brute force: is v the smallest concave function above the samples? check
// every sample lies under every chord-free hull by testing all pairs.
bool hull_brute(const std::vector<double>& t, const std::vector<double>& mu, const std::vector<double>& v) {
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        // hull value at t_i: max over pairs a <= i <= b of chord at t_i
        double best = mu[i];
        for (std::size_t a = 0; a <= i; ++a)
            for (std::size_t b = i; b < n; ++b) {
                if (a == b) continue;
                double c = mu[a] + (mu[b] - mu[a]) * (t[i] - t[a]) / (t[b] - t[a]);
                best = std::max(best, c);
            }
        if (std::abs(best - v[i]) > 1e-12 * std::max(1.0, best)) return false;
    }
    return true;
}

std::vector<double> values_at(const ConcaveModulus& m, const std::vector<double>& t) {
    std::vector<double> v;
    for (double x : t) v.push_back(m(x));
    return v;
}

}  // namespace

TEST_CASE("holder evaluation") {
    CHECK(holder(0.5)(4.0) == 2.0);
    CHECK(holder(1.0)(7.0) == 7.0);
    CHECK(holder(0.3)(10.0) == Approx(1.9952623149688795).epsilon(1e-14));
    CHECK(holder(0.5)(0.0) == 0.0);
    CHECK_THROWS_AS(holder(0.0), InvalidArgument);
    CHECK_THROWS_AS(holder(1.5), InvalidArgument);
}

TEST_CASE("omega_z reduces to the square root") {
    auto w = omega_z(0.5, 0.0);
    CHECK(w(0.25) == Approx(0.5).epsilon(1e-14));
    CHECK(w(1e-6) == Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("omega_z closed form at exp(-e^e)") {
    auto w = omega_z(0.0, 1.0);
    const double e = std::exp(1.0);
    double x = std::exp(-std::exp(e));
    // L = e^e, log L = e, value exp(-e^e / e)
    CHECK(w(x) == Approx(std::exp(-std::exp(e - 1.0))).epsilon(1e-12));
    CHECK(w(x) == Approx(3.7917e-3).epsilon(1e-4));
}

TEST_CASE("omega_z admissibility") {
    CHECK_THROWS_AS(omega_z(1.0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(omega_z(0.0, -1.0), InvalidArgument);
    CHECK_NOTHROW(omega_z(1.0, -1.0));
    // x^0.2 exp(2L/log L) is not even increasing above 1e-12
    CHECK_THROWS_AS(omega_z(0.2, -2.0), ConstructionError);
}

TEST_CASE("constructed moduli are concave and satisfy the scaling laws") {
    auto grid = geometric_grid(1e-10, 1e2, 400);
    for (const auto& m : {holder(0.25), holder(0.5), holder(1.0), omega_z(0.5, 0.3), omega_z(0.0, 1.0),
                          omega_z(1.0, -1.0), omega_z(0.7, -0.5)}) {
        INFO(m.name());
        CHECK(concavity_defect(m, grid) <= 1e-12);
        for (double C : {0.5, 4.0}) CHECK(check_modulus_laws(m, C, grid).ok);
    }
}

TEST_CASE("laws example: sqrt with C = 4") {
    auto r = check_modulus_laws(holder(0.5), 4.0, {1.0});
    CHECK(r.worst_lower == Approx(1.0));
    CHECK(r.worst_upper == Approx(2.0));
    // identity: the side with the larger factor is tight
    auto up = check_modulus_laws(holder(1.0), 3.0, {0.5, 1.0, 2.0});
    CHECK(up.worst_upper == Approx(0.0).margin(1e-11));
    auto down = check_modulus_laws(holder(1.0), 0.25, {0.5, 1.0, 2.0});
    CHECK(down.worst_lower == Approx(0.0).margin(1e-11));
}

TEST_CASE("majorant of zero samples") {
    std::vector<double> t{0, 0.5, 1.0, 1.5}, mu(4, 0.0);
    auto m = least_concave_majorant(t, mu);
    for (double x : t) {
        CHECK(m.beta0(x) == 0.0);
        CHECK(m.beta(x) == Approx(x));
    }
}

TEST_CASE("majorant of an already concave sample set") {
    std::vector<double> t, mu;
    for (int i = 0; i <= 40; ++i) {
        t.push_back(0.05 * i);
        mu.push_back(std::min(t.back(), 1.0));
    }
    auto m = least_concave_majorant(t, mu);
    auto v = values_at(m.beta0, t);
    CHECK(hull_brute(t, mu, v));
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(v[i] == Approx(mu[i]).margin(1e-15));
}

TEST_CASE("majorant of the oscillation of x^2") {
    const int n = 1001;
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = std::pow(i / double(n - 1), 2);
    auto osc = oscillation_modulus(f, 0.0, 1.0);
    // analytic oscillation 2t - t^2
    for (std::size_t i = 0; i < osc.t.size(); ++i)
        CHECK(osc.mu[i] == Approx(2 * osc.t[i] - osc.t[i] * osc.t[i]).margin(1e-12));
    auto m = least_concave_majorant(osc.t, osc.mu);
    for (std::size_t i = 0; i < osc.t.size(); ++i) {
        double b = m.beta0(osc.t[i]);
        CHECK(osc.mu[i] <= b);
        CHECK(b <= 2 * osc.mu[i] + 1e-15);
    }
}

TEST_CASE("majorant rejects decreasing samples") {
    CHECK_THROWS_AS(least_concave_majorant({0, 1, 2}, {0, 1, 0.5}), InvalidArgument);
}

TEST_CASE("majorant matches brute force on random data (property)") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> t{0.0}, mu{0.0};
        for (int i = 1; i < 60; ++i) {
            t.push_back(t.back() + 0.01 + U(rng));
            mu.push_back(mu.back() + (U(rng) < 0.3 ? 0.0 : U(rng)));
        }
        auto m = least_concave_majorant(t, mu);
        auto v = values_at(m.beta0, t);
        CHECK(hull_brute(t, mu, v));
        CHECK(concavity_defect(m.beta0, t) <= 1e-12);
    }
}

TEST_CASE("oscillation examples") {
    auto c = oscillation_modulus(std::vector<double>(11, 3.0), 0, 1);
    for (double v : c.mu) CHECK(v == 0.0);
    std::vector<double> id;
    for (int i = 0; i <= 10; ++i) id.push_back(i / 10.0);
    auto o = oscillation_modulus(id, 0, 1);
    CHECK(o.mu[5] == Approx(0.5));
    std::vector<double> sq;
    for (int i = 0; i <= 10; ++i) sq.push_back(std::pow(i / 10.0, 2));
    CHECK(oscillation_modulus(sq, 0, 1).mu[5] == Approx(0.75));
}

TEST_CASE("holder tameness functionals are exact") {
    auto xs = geometric_grid(1e-9, 1e3, 512);
    for (double s : {0.25, 0.5, 0.75}) {
        auto a = holder(s);
        for (double t : {0.5, 0.1, 0.01}) {
            CHECK(std::abs(tameness_F(a, t, xs) - std::pow(t, 1 - s)) <= 1e-10);
            CHECK(std::abs(tameness_G(a, t, xs) - std::pow(t, s)) <= 1e-10);
        }
    }
}

TEST_CASE("tameness verdicts") {
    auto xs = geometric_grid(1e-9, 1e3, 512);
    std::vector<double> ts{0.5, 0.25, 0.1, 0.01};
    auto v = classify_tameness(holder(0.5), ts, xs);
    CHECK(v.sup_tame.verdict == Verdict::Yes);
    CHECK(v.sub_tame.verdict == Verdict::Yes);
    auto lip = classify_tameness(holder(1.0), ts, xs);
    CHECK(lip.sub_tame.verdict == Verdict::Yes);
    CHECK(lip.sup_tame.verdict == Verdict::Inconclusive);
    auto z = classify_tameness(omega_z(1.0, -1.0), ts, xs);
    CHECK(z.sup_tame.verdict == Verdict::Inconclusive);
}

TEST_CASE("Yes verdicts survive a finer grid") {
    auto xs = geometric_grid(1e-9, 1e3, 64);
    auto fine = geometric_grid(1e-9, 1e3, 640);
    std::vector<double> ts{0.5, 0.1};
    for (const auto& a : {holder(0.3), omega_z(0.5, 0.2), omega_z(0.0, 1.0)}) {
        auto v = classify_tameness(a, ts, xs);
        if (v.sup_tame.verdict == Verdict::Yes) CHECK(tameness_F(a, v.sup_tame.t0, fine) < 1.0);
        if (v.sub_tame.verdict == Verdict::Yes) CHECK(tameness_G(a, v.sub_tame.t0, fine) < 1.0);
    }
}
