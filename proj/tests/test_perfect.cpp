#include <catch_amalgamated.hpp>

#include <cmath>

#include "mather/error.hpp"
#include "mather/perfect.hpp"

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

// bump centred in D with ||f - Id||_{2,1/2} = target
Diffeo1 calibrated_bump(double target, const ConcaveModulus& alpha) {
    const double n = k_alpha_norm(bump_map(1e-3, 0.0, 1.5), alpha, 2);
    return bump_map(1e-3 * target / n, 0.0, 1.5);
}

const FixedPointResult& preset_run() {
    static const FixedPointResult r = [] {
        auto cfg = make_config(2, holder(0.5), 4);
        return fixed_point_search(calibrated_bump(1e-3, cfg.alpha), cfg);
    }();
    return r;
}

}  // namespace

TEST_CASE("blend map") {
    SECTION("scale four") {
        auto cfg = make_config(2, holder(0.5), 4);
        auto Q = make_Q(cfg.D, cfg.E, 2);
        CHECK(Q.scale == 4.0);
        CHECK(Q.attempts == 1);
        CHECK(Q.Q(1.0) == Approx(4.0).margin(1e-12));
        for (double x : {-8.0, -3.3, 0.0, 0.25, 7.9}) CHECK(Q.Q(x) == Approx(4.0 * x).margin(1e-11));
        for (double x : {-70.0, -Q.R, Q.R, 100.0}) CHECK(Q.Q(x) == x);
        for (double x : {9.5, 20.0, 41.3}) CHECK(Q.Q(-x) == Approx(-Q.Q(x)).margin(1e-12));
        for (int i = 0; i < Q.Q.grid().n; ++i) CHECK(1.0 + Q.Q.node_jet(i)[1] > 0.0);
        // Q(R) = R is what fixes c; check continuity at the outer edge
        CHECK(Q.Q(Q.R - 1e-9) == Approx(Q.R).margin(1e-8));
    }
    SECTION("unit scale is the identity") {
        auto Q = make_Q({-2, 2}, {-2, 2}, 2);
        CHECK(Q.c == 0.0);
        for (double x : {-9.0, -1.0, 0.3, 5.5}) CHECK(Q.Q(x) == Approx(x).margin(1e-12));
    }
    SECTION("shrinking blend for k = 1") {
        auto cfg = make_config(1, holder(0.5), 2);
        auto Q = make_Q(cfg.D, cfg.E, 1);
        CHECK(Q.scale == 0.5);
        CHECK(Q.Q(3.0) == Approx(1.5).margin(1e-12));
    }
}

TEST_CASE("conjugation by the blend is the scaling conjugate") {
    auto cfg = make_config(2, holder(0.5), 4);
    auto Q = make_Q(cfg.D, cfg.E, 2);
    auto h = bump_map(2e-3, 0.3, 1.4);
    auto g = conjugate_by(Q, h);
    auto supp = support_interval(g);
    REQUIRE(supp);
    CHECK(supp->lo >= cfg.E.lo - g.grid().step());
    CHECK(supp->hi <= cfg.E.hi + g.grid().step());
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        double x = -9.0 + 18.0 * i / 2000;
        worst = std::max(worst, std::abs(g(x) - 4.0 * h(x / 4.0)));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("one Theta step") {
    auto cfg = make_config(2, holder(0.5), 4);
    auto Q = make_Q(cfg.D, cfg.E, 2);
    auto id = Diffeo1::identity(TailClass::Compact, {-2.0, 2.0, 257}, 2);
    SECTION("identity") {
        auto st = theta_step(id, id, Q, cfg);
        for (double v : st.psi.jets()) CHECK(v == 0.0);
    }
    SECTION("f = Id gives Psi(Q u Q^-1) in D") {
        auto u = calibrated_bump(5e-4, cfg.alpha);
        auto st = theta_step(u, id, Q, cfg);
        auto direct = psi_reduce(conjugate_by(Q, u), cfg).psi;
        MetricOptions o;
        o.k = 0;
        CHECK(metric(st.psi, direct, MetricKind::C0, nullptr, o) <= 1e-12);
        auto supp = support_interval(st.psi);
        REQUIRE(supp);
        CHECK(supp->lo >= cfg.D.lo - st.psi.grid().step());
        CHECK(supp->hi <= cfg.D.hi + st.psi.grid().step());
    }
    SECTION("refusals name the stage") {
        auto big = bump_map(3e-2, 0.0, 1.5);
        try {
            theta_step(id, big, Q, cfg);
            FAIL("expected a refusal");
        } catch (const PreconditionError& e) {
            CHECK(std::string(e.what()).find("theta_step[psi]") != std::string::npos);
        }
        auto u = calibrated_bump(1e-3, cfg.alpha);
        CHECK_THROWS_AS(theta_step(u, u, Q, cfg, 1e-4), PreconditionError);
    }
}

TEST_CASE("fixed point of the identity") {
    auto cfg = make_config(2, holder(0.5), 4);
    auto id = Diffeo1::identity(TailClass::Compact, {-2.0, 2.0, 129}, 2);
    auto r = fixed_point_search(id, cfg);
    REQUIRE(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.residual == 0.0);
    REQUIRE(r.chain);
    CHECK(r.chain->b == 0.0);
    CHECK(verify_certificate(*r.chain).ok());
}

TEST_CASE("fixed point of a small bump") {
    const auto& r = preset_run();
    INFO("iterations " << r.iterations << ", residual " << r.residual);
    REQUIRE(r.converged);
    CHECK(r.residual <= 1e-6);
    REQUIRE(r.chain);
    const auto& c = *r.chain;
    CHECK(c.residual_conjugacy <= 1e-5);
    CHECK(c.residual_blend <= 1e-8);
    CHECK(c.residual_fixed <= 1e-6);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] < r.trace[i - 1]);
    auto rep = verify_certificate(c);
    for (const auto& item : rep.items) {
        INFO(item.name << ": " << item.value << " <= " << item.bound);
        CHECK(item.ok);
    }
}

TEST_CASE("certificate replay from json") {
    const auto& r = preset_run();
    REQUIRE(r.chain);
    const std::string text = to_json(*r.chain).dump();
    auto back = chain_from_json(json::parse(text));
    CHECK(to_json(back).dump() == text);
    auto rep = verify_certificate(back);
    CHECK(rep.ok());

    SECTION("tampered lambda fails") {
        auto bump = bump_map(1e-3, 1.0, 1.0, 2, 513);
        CertificateChain bad = back;
        bad.lambda = compose(bump, back.lambda);
        auto rb = verify_certificate(bad);
        CHECK_FALSE(rb.ok());
    }
    SECTION("tampered residual fails the replay") {
        CertificateChain bad = back;
        bad.residual_fixed = bad.residual_fixed * 1e-3;
        CHECK_FALSE(verify_certificate(bad).ok());
    }
    SECTION("malformed documents") {
        auto j = json::parse(text);
        j.erase("maps");
        CHECK_THROWS_AS(chain_from_json(j), InvalidArgument);
        CHECK_THROWS_AS(chain_from_json(json{{"format", "other"}}), InvalidArgument);
    }
}

TEST_CASE("runs are deterministic") {
    const auto& r = preset_run();
    REQUIRE(r.chain);
    auto cfg = make_config(2, holder(0.5), 4);
    auto again = fixed_point_search(calibrated_bump(1e-3, cfg.alpha), cfg);
    REQUIRE(again.chain);
    CHECK(to_json(*again.chain).dump() == to_json(*r.chain).dump());
}

TEST_CASE("iteration budget") {
    auto cfg = make_config(2, holder(0.5), 4);
    FixedPointOptions opt;
    opt.max_iter = 1;
    auto r = fixed_point_search(calibrated_bump(1e-3, cfg.alpha), cfg, opt);
    CHECK_FALSE(r.converged);
    CHECK(r.trace.size() == 1);
    CHECK_FALSE(r.chain);
    CHECK(r.stop_reason == "iteration budget exhausted");
}

TEST_CASE("serialization round trips") {
    auto f = bump_map(1e-3, 0.2, 1.3, 3, 65);
    auto j = to_json(f);
    auto g = diffeo_from_json(json::parse(j.dump()));
    CHECK(g.jets() == f.jets());
    CHECK(g.grid().n == f.grid().n);
    auto p = diffeo_from_json(json{{"preset", "smooth_bump_displacement"},
                                   {"params", {{"eps", 1e-3}, {"c", 0.2}, {"r", 1.3}, {"k", 3}, {"n", 65}}}});
    CHECK(p.jets() == f.jets());
    for (const char* spec : {"holder:0.5", "omegaz:0.5,0.3"}) {
        auto a = parse_alpha(spec);
        auto b = modulus_from_json(json::parse(to_json(a).dump()));
        for (double x : {1e-6, 0.01, 0.3, 2.0}) CHECK(b(x) == a(x));
    }
    CHECK_THROWS_AS(parse_alpha("holder"), InvalidArgument);
    CHECK_THROWS_AS(parse_alpha("cauchy:1"), InvalidArgument);
    auto cfg = make_config(1, parse_alpha("holder:0.25"), 3);
    auto c2 = config_from_json(json::parse(to_json(cfg).dump()));
    CHECK(c2.B == 3);
    CHECK(c2.alpha(0.5) == cfg.alpha(0.5));
    CHECK(to_json(c2).dump() == to_json(cfg).dump());
}
