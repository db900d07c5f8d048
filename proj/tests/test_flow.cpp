#include <catch_amalgamated.hpp>

#include <cmath>

#include "mather/error.hpp"
#include "mather/flow.hpp"

using namespace mather;
using Catch::Approx;

TEST_CASE("plateau field") {
    for (int A : {1, 2, 4}) {
        auto rho = make_rho(A);
        CHECK(rho(0.0) == 1.0);
        CHECK(rho(2.0 * A) == 1.0);
        CHECK(rho(2.0 * A + 1) == 0.0);
        CHECK(rho(-2.0 * A - 1) == 0.0);
        double m = rho(2.0 * A + 0.5);
        CHECK(m > 0.0);
        CHECK(m < 1.0);
        // symmetric formula: both S terms agree at the midpoint
        CHECK(m == Approx(0.5).epsilon(1e-15));
        for (double x : {0.3, 2.0 * A + 0.2, 2.0 * A + 0.77, 5.0 * A})
            CHECK(rho(-x) == rho(x));
    }
    CHECK_THROWS_AS(make_rho(0), InvalidArgument);
}

TEST_CASE("field jets match finite differences") {
    auto rho = make_rho(1);
    double x = 2.3, h = 1e-5;
    double d[3];
    rho.jet(x, d);
    CHECK(d[1] == Approx((rho(x + h) - rho(x - h)) / (2 * h)).epsilon(1e-7));
    CHECK(d[2] == Approx((rho(x + h) - 2 * rho(x) + rho(x - h)) / (h * h)).epsilon(1e-4));
}

TEST_CASE("time-t maps") {
    auto rho = make_rho(1);
    SECTION("t = 0 is the identity") {
        auto f = time_t_map(rho, 0.0, 2);
        for (double x : {-2.5, 0.0, 1.7}) CHECK(f(x) == x);
    }
    SECTION("unit speed on the plateau") {
        for (double x : {-1.5, -0.3, 0.4})
            CHECK(flow(rho, 0.5, x) == Approx(x + 0.5).margin(1e-9));
    }
    SECTION("group law and reversibility") {
        auto a = time_t_map(rho, 0.7, 2), b = time_t_map(rho, 1.1, 2), ab = time_t_map(rho, 1.8, 2);
        auto c = compose(a, b);
        auto back = compose(time_t_map(rho, -1.1, 2), b);
        for (int i = 0; i <= 400; ++i) {
            double x = -3.0 + 6.0 * i / 400;
            CHECK(std::abs(c(x) - ab(x)) <= 1e-8);
            CHECK(std::abs(back(x) - x) <= 1e-8);
        }
    }
    SECTION("jets match the integrated trajectory") {
        double out[3];
        double x = 2.2, t = 0.9, h = 1e-4;
        flow_jet(rho, t, x, out);
        double fp = flow(rho, t, x + h), fm = flow(rho, t, x - h), f0 = flow(rho, t, x);
        CHECK(out[0] == Approx(f0).margin(1e-11));
        CHECK(out[1] == Approx((fp - fm) / (2 * h)).epsilon(1e-7));
        CHECK(out[2] == Approx((fp - 2 * f0 + fm) / (h * h)).epsilon(1e-3));
    }
    SECTION("positive derivative for |t| <= 4") {
        for (double t : {-4.0, -1.0, 2.5, 4.0}) {
            // positivity is a node property; no need to resolve the map to 1e-9
            auto f = time_t_map(rho, t, 1, Resolution{1e-5, 1 << 16});
            for (int i = 0; i < f.grid().n; ++i) CHECK(1.0 + f.node_jet(i)[1] > 0.0);
        }
    }
}

TEST_CASE("trajectory chart") {
    for (int A : {1, 2}) {
        auto rho = make_rho(A);
        auto phi = trajectory_chart(rho, 3);
        for (double x : {-2.0 * A, -0.7, 0.0, 1.3, 2.0 * A}) CHECK(phi(x) == x);
        double prev = phi(2.0 * A);
        for (double y = 2.0 * A + 0.25; y <= 10.0 * A; y += 0.25) {
            double v = phi(y);
            CHECK(v > prev);
            CHECK(v < 2.0 * A + 1.0);
            CHECK(std::abs(v) <= std::abs(y));
            prev = v;
        }
        for (double y : {2.0 * A + 0.3, 3.0 * A, 9.0 * A}) CHECK(phi(-y) == -phi(y));
        // the integrated branch and the time coordinate agree at the switch
        double yh = 2.0 * A + phi.horizon() - 1.0;
        Chart far(rho, 3, 0.0);
        CHECK(far(yh) == Approx(phi(yh)).margin(1e-10));
        for (double x : {2.0 * A + 0.1, 2.0 * A + 0.6, 2.0 * A + 0.9})
            CHECK(phi(phi.inverse(x)) == Approx(x).margin(1e-10));
    }
}

TEST_CASE("chart jets") {
    auto phi = trajectory_chart(make_rho(1), 2);
    double y = 2.4, h = 1e-4;
    double d[3];
    phi.jet(y, d);
    CHECK(d[1] == Approx((phi(y + h) - phi(y - h)) / (2 * h)).epsilon(1e-7));
    CHECK(d[2] == Approx((phi(y + h) - 2 * phi(y) + phi(y - h)) / (h * h)).epsilon(1e-3));
    double e[3];
    double x = phi(y);
    phi.inverse_jet(x, e);
    CHECK(e[0] == Approx(y).epsilon(1e-12));
    CHECK(e[1] == Approx(1.0 / d[1]).epsilon(1e-12));
}

TEST_CASE("chart conjugates translations to the flow") {
    auto rho = make_rho(1);
    auto phi = trajectory_chart(rho, 2);
    CHECK(verify_chart_conjugation(phi, 0.0, 200) == 0.0);
    CHECK(verify_chart_conjugation(phi, 1.0, 1000) <= 1e-7);
    CHECK(verify_chart_conjugation(phi, -0.4, 300) <= 1e-7);
    CHECK(phi.shift(0.2, 1.0) == Approx(1.2).margin(1e-12));
}

TEST_CASE("chart fixes maps supported on the plateau") {
    auto phi = trajectory_chart(make_rho(1), 2);
    PresetParams p;
    p.eps = 1e-2;
    p.c = 0.3;
    p.r = 1.5;
    auto u = from_preset("smooth_bump_displacement", p);
    CHECK(verify_chart_fixes(phi, u, 1000) <= 1e-7);
}
