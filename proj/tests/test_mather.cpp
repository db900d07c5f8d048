#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "mather/error.hpp"
#include "mather/mather.hpp"

using namespace mather;
using Catch::Approx;

namespace {

Diffeo1 bump_map(double eps, double c, double r, int k = 2, int n = 257) {
    PresetParams p;
    p.eps = eps;
    p.c = c;
    p.r = r;
    p.k = k;
    p.n = n;
    return from_preset("smooth_bump_displacement", p);
}

Diffeo1 wiggle(std::vector<double> amps, std::vector<double> phases, int k = 2, bool fix = true, int n = 257) {
    PresetParams p;
    p.amps = std::move(amps);
    p.phases = std::move(phases);
    p.fix_origin = fix;
    p.k = k;
    p.n = n;
    return from_preset("periodic_wiggle", p);
}

// small periodic map with |u'| well below eps0
Diffeo1 random_wiggle(std::mt19937& rng, int k, double slope = 6e-4) {
    std::uniform_real_distribution<double> U(-1.0, 1.0), ph(0.0, 2 * std::numbers::pi);
    std::vector<double> amps(3), phases(3);
    double s = 0.0;
    for (int m = 0; m < 3; ++m) {
        amps[m] = U(rng) / (m + 1);
        phases[m] = ph(rng);
        s += std::abs(amps[m]) * 2 * std::numbers::pi * (m + 1);
    }
    for (double& a : amps) a *= slope / s;
    return wiggle(amps, phases, k, false);
}

Diffeo1 random_bump(std::mt19937& rng, double lo, double hi, double eps_max, int k = 2) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double r = 0.3 + 0.4 * U(rng) * (hi - lo) / 2;
    double c = lo + r + U(rng) * (hi - lo - 2 * r);
    return bump_map(eps_max * (0.2 + 0.8 * U(rng)) * (U(rng) < 0.5 ? -1 : 1), c, r, k);
}

double c0_gap(const std::function<double(double)>& f, const std::function<double(double)>& g, double lo, double hi,
              int samples = 1000) {
    double d = 0.0;
    for (int i = 0; i <= samples; ++i) {
        double x = lo + (hi - lo) * i / samples;
        d = std::max(d, std::abs(f(x) - g(x)));
    }
    return d;
}

double sup_disp(const Diffeo1& f, double lo, double hi) {
    return c0_gap([&](double x) { return f(x); }, [](double x) { return x; }, lo, hi, 4000);
}

}  // namespace

TEST_CASE("config rule") {
    auto c2 = make_config(2, holder(0.5), 4);
    CHECK(c2.B == 1);
    CHECK(c2.D.lo == -2);
    CHECK(c2.E.hi == 8);
    CHECK(c2.J.lo == -8);
    CHECK(c2.eps0 < 0.01);
    CHECK(c2.delta0 == 1e-3);
    auto c1 = make_config(1, holder(0.5), 4);
    CHECK(c1.B == 4);
    CHECK(c1.D.hi == 8);
    CHECK(c1.E.hi == 2);
    CHECK(make_config(4, holder(0.5), 1).delta0 == Approx(1e-5));
    CHECK_THROWS_AS(make_config(2, holder(0.5), 0), InvalidArgument);
}

TEST_CASE("zeta cutoff") {
    for (double x : {0.0, 0.05, -0.1, 1.08, -3.0}) CHECK(zeta(x) == 1.0);
    for (double x : {0.5, 0.42, 0.6, -2.5}) CHECK(zeta(x) == 0.0);
    for (double x : {0.17, 0.33, -0.27}) {
        CHECK(zeta(x) > 0.0);
        CHECK(zeta(x) < 1.0);
        CHECK(zeta(x + 1) == Approx(zeta(x)).margin(1e-14));
        CHECK(zeta(-x) == Approx(zeta(x)).margin(1e-14));
    }
    CHECK(zeta_slope_bound() > 1.0);
}

TEST_CASE("rolling up the identity") {
    auto id = Diffeo1::identity(TailClass::Compact, {-1.0, 1.0, 33}, 2);
    auto G = gamma_roll(id);
    CHECK(G.tail_class() == TailClass::Periodic);
    for (double v : G.jets()) CHECK(v == 0.0);
    // the word itself telescopes exactly
    auto flat = Diffeo1(TailClass::Compact, {-1.0, 1.0, 33}, 2, std::vector<double>(33 * 3, 0.0));
    double out[3];
    gamma_word(flat, 0.3, 2, 5, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == 0.0);
}

TEST_CASE("rolling up: word choice, size and equivariance") {
    std::mt19937 rng(11);
    for (int t = 0; t < 10; ++t) {
        auto g = random_bump(rng, -2.0, 2.0, 0.05);
        auto info = roll_info(g);
        double worst = 0.0;
        double jw = 0.0;
        for (int i = 0; i < 1000; ++i) {
            double x = -1.5 + 4.0 * i / 1000;
            long r = gamma_r(info, x);
            double a[3], b[3];
            gamma_word(g, x, r, info.s, a);
            gamma_word(g, x, r + 1, info.s + 1, b);
            worst = std::max(worst, std::abs(a[0] - b[0]));
            jw = std::max({jw, std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
        }
        CHECK(worst <= 1e-9);
        CHECK(jw <= 1e-7);

        auto G = gamma_roll(g);
        CHECK(sup_disp(G, 0.0, 1.0) <= info.s * info.a * (1 + 1e-12));
        CHECK(c0_gap([&](double x) { return G(x); }, [&](double x) { return gamma_value(g, info, x); }, -1.0, 2.0) <=
              1e-9);
        CHECK(c0_gap([&](double x) { return gamma_inverse_value(g, info, G(x)); }, [](double x) { return x; }, 0.0,
                     1.0) <= 1e-10);

        for (double b : {0.37, -1.0, 2.5}) {
            auto gb = translate_conjugate(g, b);
            auto ib = roll_info(gb);
            double e = c0_gap([&](double x) { return gamma_value(gb, ib, x); },
                              [&](double x) { return b + gamma_value(g, info, x - b); }, -1.0, 2.0);
            CHECK(e <= 1e-9);
        }
    }
    CHECK_THROWS_AS(roll_info(bump_map(1.0, 0.0, 4.0)), PreconditionError);
    CHECK_THROWS_AS(roll_info(wiggle({1e-3}, {0.0})), PreconditionError);
}

TEST_CASE("rolling-up norm bound") {
    auto cfg = make_config(2, holder(0.5), 1);
    auto id = Diffeo1::identity(TailClass::Compact, {-1.0, 1.0, 65}, 2);
    auto r0 = gamma_norm_check(id, cfg);
    CHECK(r0.min_slack() >= 0.0);
    std::mt19937 rng(5);
    for (int t = 0; t < 5; ++t) {
        auto f = random_bump(rng, -2.0, 2.0, 5e-7);
        CHECK(gamma_norm_check(f, cfg).min_slack() >= 0.0);
    }
    CHECK_THROWS_AS(gamma_norm_check(bump_map(0.05, 0.0, 1.0), cfg), PreconditionError);
}

TEST_CASE("spreading with one factor") {
    auto cfg = make_config(2, holder(0.5), 1);
    SECTION("identity") {
        auto id = Diffeo1::identity(TailClass::Periodic, {0.0, 1.0, 65}, 2);
        auto W = omega1_spread(id, cfg);
        CHECK(W.core().lo == -2.0);
        CHECK(W.core().hi == 2.0);
        for (double v : W.jets()) CHECK(v == 0.0);
    }
    SECTION("round trip and support") {
        std::mt19937 rng(3);
        for (int t = 0; t < 5; ++t) {
            auto g = random_wiggle(rng, 2);
            auto W = omega1_spread(g, cfg);
            auto supp = support_interval(W);
            REQUIRE(supp);
            CHECK(supp->lo >= -2.0);
            CHECK(supp->hi <= 2.0);
            auto back = gamma_roll(W);
            auto h = recenter(g);
            CHECK(std::abs(h(0.0)) <= 1e-15);
            CHECK(c0_gap([&](double x) { return back(x); }, [&](double x) { return h(x); }, 0.0, 1.0) <= 1e-6);
        }
    }
    SECTION("precondition") {
        CHECK_THROWS_AS(omega1_spread(wiggle({2e-3}, {0.4}), cfg), PreconditionError);
    }
}

TEST_CASE("discrete isotopy") {
    auto h = recenter(wiggle({4e-2, -1e-2}, {0.3, 1.1}, 2, true));
    SECTION("identity") {
        auto id = Diffeo1::identity(TailClass::Periodic, {0.0, 1.0, 65}, 2);
        for (int i = 1; i <= 3; ++i) {
            auto d = discrete_isotopy(id, 3, i);
            for (double v : d.jets()) CHECK(v == 0.0);
        }
    }
    SECTION("one factor is h") {
        auto d = discrete_isotopy(h, 1, 1);
        CHECK(d.grid().n == h.grid().n);
        CHECK(d.jets() == h.jets());
    }
    SECTION("product recovers h") {
        for (int B : {2, 4}) {
            std::vector<Diffeo1> f;
            for (int i = B; i >= 1; --i) f.push_back(discrete_isotopy(h, B, i));
            auto P = compose_all(f);
            CHECK(c0_gap([&](double x) { return P(x); }, [&](double x) { return h(x); }, 0.0, 1.0) <= 1e-8);
        }
    }
    SECTION("root bracket beyond the sampled sup") {
        // a map whose quotient once picked up 1e-9 node errors near an extremum of u
        auto alpha = holder(0.5);
        auto hc = wiggle({0.00019807177867666977, -0.0010756438636922944, -1.7749911685735063e-05},
                         {2.6289889887391222, 4.2962769843826845, 1.3859429214492689}, 2, true, 257);
        const double n = k_alpha_norm(hc, alpha, 2);
        auto d = discrete_isotopy(hc, 4, 4);
        CHECK(k_alpha_norm(d, alpha, 2) <= n / 4 + n * n);
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(discrete_isotopy(wiggle({0.05}, {0.5}, 2, false), 2, 1), PreconditionError);
        CHECK_THROWS_AS(discrete_isotopy(h, 2, 3), InvalidArgument);
    }
}

TEST_CASE("spreading with several factors") {
    std::mt19937 rng(8);
    for (int B : {2, 4}) {
        auto cfg = make_config(1, holder(0.5), B);
        REQUIRE(cfg.B == B);
        auto g = random_wiggle(rng, 1);
        auto W = omega_spread(g, B, cfg);
        CHECK(W.core().lo == -2.0 * B);
        CHECK(W.core().hi == 2.0 * B);
        auto back = gamma_roll(W);
        auto h = recenter(g);
        CHECK(c0_gap([&](double x) { return back(x); }, [&](double x) { return h(x); }, 0.0, 1.0) <= 1e-6);

        // window i carries the spread of the i-th factor
        double pmax = 0.0;
        for (int i = 1; i <= B; ++i) {
            auto piece = omega1_spread(discrete_isotopy(h, B, i), cfg);
            pmax = std::max(pmax, k_alpha_norm(piece, cfg.alpha, 1));
            double c = -2.0 * B - 2.0 + 4.0 * i;
            CHECK(c0_gap([&](double x) { return W(x); }, [&](double x) { return c + piece(x - c); }, c - 2, c + 2,
                         400) <= 1e-9);
        }
        CHECK(k_alpha_norm(W, cfg.alpha, 1) <= 2.0 * pmax);
    }
    auto cfg = make_config(2, holder(0.5), 1);
    auto g = random_wiggle(rng, 2);
    auto a = omega_spread(g, 1, cfg), b = omega1_spread(recenter(g), cfg);
    CHECK(c0_gap([&](double x) { return a(x); }, [&](double x) { return b(x); }, -2.0, 2.0) <= 1e-12);
}

TEST_CASE("rolling up a product of window restrictions") {
    // periodic maps whose displacement vanishes to high order at the integers
    auto make = [](double amp, double phase) {
        NodeFn fn = [=](double x, std::span<double> out) {
            Taylor X = Taylor::variable(2, x);
            Taylor s, c;
            sincos(X * std::numbers::pi, s, c);
            Taylor s2 = s * s;
            Taylor base = s2 * s2 * s2;
            Taylor w, cw;
            sincos(X * (2 * std::numbers::pi) + phase, w, cw);
            auto d = (base * (1.0 + 0.5 * w) * amp).derivatives();
            std::copy(d.begin(), d.end(), out.begin());
        };
        return build_sampled(TailClass::Periodic, 0.0, 1.0, 129, 2, fn);
    };
    std::vector<Diffeo1> hs = {make(0.03, 0.2), make(-0.02, 1.3), make(0.025, 2.9)};
    std::vector<Diffeo1> restricted, periodic;
    const int offsets[] = {-3, 0, 2};
    for (int i = 2; i >= 0; --i) {
        restricted.push_back(restrict_to_window(hs[i], offsets[i], 1.0, 1e-8));
        periodic.push_back(hs[i]);
    }
    auto prod = compose_all(restricted);
    auto G = gamma_roll(prod);
    auto P = compose_all(periodic);
    CHECK(c0_gap([&](double x) { return G(x); }, [&](double x) { return P(x); }, 0.0, 1.0) <= 1e-8);
}

TEST_CASE("partial composition bound") {
    auto alpha = holder(0.5);
    std::mt19937 rng(21);
    double c_fit = 0.0;
    for (int t = 0; t < 8; ++t) {
        auto u = recenter(random_wiggle(rng, 2, 2e-2));
        double n = k_alpha_norm(u, alpha, 2);
        for (double lam : {0.25, 0.5, 0.75, 1.0}) {
            auto q = fraction_quotient(u, 1.0, lam);
            double m = k_alpha_norm(q, alpha, 2);
            c_fit = std::max(c_fit, (m - (1.0 - lam) * n) / (n * n));
            if (lam == 1.0) CHECK(m <= 1e-12);
        }
    }
    INFO("fitted c = " << c_fit);
    CHECK(std::isfinite(c_fit));
    CHECK(c_fit < 50.0);
}

TEST_CASE("limit word") {
    auto cfg = make_config(2, holder(0.5), 1);
    auto u = bump_map(2e-2, -0.3, 1.2), v = bump_map(-3e-2, 0.4, 1.0);
    SECTION("u = v gives the identity") {
        LimitWord W(u, u, cfg);
        for (double x : {-5.0, -1.3, 0.0, 0.7, 2.6, 9.1}) CHECK(W(x) == Approx(x).margin(1e-12));
        auto L = lambda_limit(u, u, cfg);
        CHECK(sup_disp(L, -3.0, 6.0) <= 1e-12);
    }
    SECTION("identity far left and rolled-up quotient on the right") {
        LimitWord W(u, v, cfg);
        CHECK(W.base_s() == static_cast<int>(std::ceil(5.5 / (1 - W.a()))));
        for (double x : {-2.0, -3.5, -10.0}) CHECK(W(x) == x);
        auto iu = roll_info(u), iv = roll_info(v);
        double e = c0_gap([&](double x) { return W(x); },
                          [&](double x) { return gamma_value(v, iv, gamma_inverse_value(u, iu, x)); }, 2.5, 8.0);
        CHECK(e <= 1e-7);
    }
    SECTION("intertwining") {
        auto L = lambda_limit(u, v, cfg);
        CHECK(L.tail_class() == TailClass::EventuallyPeriodic);
        double e = c0_gap([&](double x) { return v(L(x)) + 1.0; }, [&](double x) { return L(u(x) + 1.0); }, -4.0,
                          6.0);
        CHECK(e <= 1e-7);
        LimitWord W(u, v, cfg);
        CHECK(c0_gap([&](double x) { return L(x); }, [&](double x) { return W(x); }, -3.0, 5.0) <= 1e-9);
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(LimitWord(bump_map(1e-3, 2.5, 1.0), v, cfg), PreconditionError);
    }
}

TEST_CASE("conjugator") {
    auto cfg = make_config(2, holder(0.5), 1);
    auto phi = trajectory_chart(make_rho(1), 2);
    auto tau = time_t_map(make_rho(1), 1.0, 2, cfg.resolution());
    SECTION("u = v") {
        auto u = bump_map(1e-2, 0.2, 1.1);
        auto C = conjugator(u, u, phi, cfg, &tau);
        CHECK(C.b == Approx(0.0).margin(1e-14));
        CHECK(C.residual <= 1e-9);
        CHECK(sup_disp(C.lambda, -4.0, 4.0) <= 1e-9);
    }
    SECTION("a map and its reduction") {
        std::mt19937 rng(13);
        for (int t = 0; t < 3; ++t) {
            auto g = random_bump(rng, -2.0, 2.0, 5e-7);
            auto P = psi_reduce(g, cfg);
            auto C = conjugator(g, P.psi, phi, cfg, &tau);
            CHECK(C.b == Approx(-P.gamma.displacement(0.0)).margin(1e-9));
            CHECK(C.translation_dev <= cfg.tol.tol_b);
            CHECK(C.residual <= 1e-5);
            auto supp = support_interval(C.lambda);
            if (supp) {
                double cell = C.lambda.grid().step();
                CHECK(supp->lo >= -2.0 - cell);
                CHECK(supp->hi <= 3.0 + cell);
            }
        }
    }
    SECTION("non-translation pair is refused") {
        CHECK_THROWS_AS(conjugator(bump_map(1e-2, 0.0, 1.0), bump_map(-2e-2, 0.5, 1.0), phi, cfg, &tau),
                        PreconditionError);
    }
}

TEST_CASE("norm reduction operator") {
    auto cfg = make_config(2, holder(0.5), 2);
    auto id = Diffeo1::identity(TailClass::Compact, {-4.0, 4.0, 129}, 2);
    auto P0 = psi_reduce(id, cfg);
    for (double v : P0.psi.jets()) CHECK(v == 0.0);
    auto g = bump_map(5e-6, 0.5, 3.0);
    auto P = psi_reduce(g, cfg);
    auto supp = support_interval(P.psi);
    REQUIRE(supp);
    double cell = P.psi.grid().step();
    CHECK(supp->lo >= cfg.D.lo - cell);
    CHECK(supp->hi <= cfg.D.hi + cell);
    CHECK(P.norm_in == Approx(k_alpha_norm(g, cfg.alpha, 2)));
    CHECK_THROWS_AS(psi_reduce(bump_map(5e-6, 0.0, 6.0), cfg), PreconditionError);
    CHECK_THROWS_AS(psi_reduce(bump_map(5e-3, 0.0, 1.0), cfg), PreconditionError);
}
