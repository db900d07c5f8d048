#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mather/error.hpp"
#include "mather/norms.hpp"

using namespace mather;
using Catch::Approx;

namespace {

Diffeo1 bump_map(double eps, double c, double r, int k = 3, int n = 129) {
    PresetParams p;
    p.eps = eps;
    p.c = c;
    p.r = r;
    p.k = k;
    p.n = n;
    return from_preset("smooth_bump_displacement", p);
}

SampledMap sample(double lo, double hi, int n, const std::function<double(double)>& fn) {
    SampledMap m;
    for (int i = 0; i < n; ++i) {
        double x = lo + (hi - lo) * i / (n - 1);
        m.x.push_back(x);
        m.y.push_back(fn(x));
    }
    return m;
}

}  // namespace

TEST_CASE("identity has zero norms") {
    auto id = Diffeo1::identity(TailClass::Compact, {0, 1, 17}, 3);
    auto r = norm_report(id, holder(0.5));
    for (double v : r.sup_dev) CHECK(v == 0.0);
    for (double v : r.holder_dev) CHECK(v == 0.0);
    CHECK(r.M_k == 0.0);
}

TEST_CASE("bump norm and linearity") {
    auto f1 = bump_map(1e-3, 0.0, 1.0), f2 = bump_map(2e-3, 0.0, 1.0);
    auto r1 = norm_report(f1, holder(0.5)), r2 = norm_report(f2, holder(0.5));
    CHECK(r1.sup_dev[0] == Approx(1e-3).margin(1e-9));
    for (std::size_t i = 0; i < r1.sup_dev.size(); ++i) CHECK(r2.sup_dev[i] == Approx(2 * r1.sup_dev[i]).margin(1e-9));
    double mk = 0;
    for (int i = 1; i <= r1.k; ++i) mk = std::max(mk, r1.sup_dev[i]);
    CHECK(r1.M_k == mk);
}

TEST_CASE("ball membership respects class and radius") {
    auto f = bump_map(1e-3, 0.0, 1.0);
    double n = norm_report(f, holder(0.5)).k_alpha();
    auto r = norm_report(f, holder(0.5), -1, {},
                         {{TailClass::Compact, 2 * n}, {TailClass::Compact, n / 2},
                          {TailClass::Periodic, 2 * n}, {TailClass::EventuallyPeriodic, 2 * n}});
    CHECK(r.balls[0].member);
    CHECK_FALSE(r.balls[1].member);
    CHECK_FALSE(r.balls[2].member);
    CHECK(r.balls[3].member);
}

TEST_CASE("translation leaves derivative entries unchanged") {
    auto f = bump_map(1e-2, 0.5, 0.5);
    auto g = translate_conjugate(f, 3.0);
    auto a = norm_report(f, holder(0.5)), b = norm_report(g, holder(0.5));
    for (int i = 1; i <= a.k; ++i) CHECK(b.sup_dev[i] == Approx(a.sup_dev[i]).epsilon(1e-12));
    for (int i = 0; i < a.k; ++i) CHECK(b.holder_dev[i] == Approx(a.holder_dev[i]).epsilon(1e-12));
}

TEST_CASE("holder estimate is exact for a power and grows under refinement") {
    // x^s on [0, 1]: the seminorm for omega_s is 1, attained from the origin
    for (double s : {0.25, 0.5, 0.75}) {
        std::vector<double> F;
        const int N = 1025;
        for (int i = 0; i < N; ++i) F.push_back(std::pow(double(i) / (N - 1), s));
        CHECK(holder_estimate(F, 1.0 / (N - 1), holder(s)) == Approx(1.0).epsilon(1e-12));
    }
    auto f = bump_map(1e-2, 0.0, 1.0, 3, 65);
    for (int dens : {2, 4, 8}) {
        auto r = norm_report(f, holder(0.5), -1, {dens, 24});
        for (int i = 0; i < r.k; ++i) CHECK(r.holder_dev[i] >= r.holder_coarse[i]);
    }
}

TEST_CASE("holder estimate is bounded by the all-pairs value") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<double> x, F;
    for (int i = 0; i < 200; ++i) {
        x.push_back(i * 0.01);
        F.push_back(U(rng));
    }
    auto a = holder(0.5);
    CHECK(holder_estimate(F, 0.01, a) <= holder_all_pairs(x, F, a) * (1 + 1e-14));
}

TEST_CASE("metric axioms") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> E(-5e-3, 5e-3), C(-0.5, 0.5), R(0.4, 1.0);
    auto a = holder(0.5);
    std::vector<Diffeo1> maps;
    for (int i = 0; i < 6; ++i) maps.push_back(bump_map(E(rng), C(rng), R(rng), 2, 65 + 32 * (i % 2)));
    for (MetricKind kind : {MetricKind::C0, MetricKind::Ck, MetricKind::CkAlpha}) {
        for (const auto& f : maps) CHECK(metric(f, f, kind, &a) == 0.0);
        for (std::size_t i = 0; i + 2 < maps.size(); ++i) {
            const auto &f = maps[i], &g = maps[i + 1], &h = maps[i + 2];
            double fg = metric(f, g, kind, &a), gf = metric(g, f, kind, &a);
            CHECK(fg == gf);
            CHECK(metric(f, h, kind, &a) <= fg + metric(g, h, kind, &a) + 1e-12);
        }
    }
}

TEST_CASE("C0 metric of bumps includes the inverse") {
    auto f = bump_map(1e-2, 0.0, 1.0);
    auto id = Diffeo1::identity(TailClass::Compact, {-1, 1, 3}, 3);
    double d = metric(f, id, MetricKind::C0);
    CHECK(d == Approx(1e-2).margin(1e-9));
}

TEST_CASE("metric rejects mixed periodic classes") {
    auto f = bump_map(1e-2, 0.0, 1.0);
    PresetParams p;
    p.amps = {1e-3};
    p.phases = {0.0};
    auto w = from_preset("periodic_wiggle", p);
    CHECK_THROWS_AS(metric(f, w, MetricKind::Ck), InvalidArgument);
}

TEST_CASE("domination") {
    auto a = holder(0.5);
    Interval J{0, 1};
    auto f = bump_map(1e-3, 0.5, 0.5);
    SECTION("f = g") {
        auto r = verify_domination(f, f, J, 0, a);
        for (const auto& e : r.entries) {
            CHECK(e.lhs == 0.0);
            CHECK(e.rhs == 0.0);
        }
    }
    SECTION("random pairs, measured ratio at most |J| + 2") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> E(-1e-2, 1e-2), C(0.3, 0.7), R(0.1, 0.3);
        for (int t = 0; t < 10; ++t) {
            auto g = bump_map(E(rng), C(rng), R(rng), 3, 129);
            auto h = bump_map(E(rng), C(rng), R(rng), 3, 129);
            for (int i = 0; i <= 2; ++i) {
                auto r = verify_domination(g, h, J, i, a, 0.0);
                CHECK(r.ok());
                CHECK(r.entries[0].lhs <= 3.0 * r.entries[0].rhs / 3.0 * (1 + 1e-12));
            }
        }
    }
    SECTION("hypotheses") {
        auto wide = bump_map(1e-3, 0.5, 2.0);
        CHECK_THROWS_AS(verify_domination(wide, f, J, 1, a), PreconditionError);
        CHECK_THROWS_AS(verify_domination(f, f, J, 3, a), InvalidArgument);
    }
}

TEST_CASE("derivation formulae") {
    auto a = holder(0.5);
    SECTION("constant factor is exact") {
        auto f = sample(0, 1, 101, [](double x) { return std::sin(3 * x); });
        auto c = sample(0, 1, 101, [](double) { return 2.0; });
        auto id = sample(0, 1, 101, [](double x) { return x; });
        auto r = verify_derivation(f, c, id, a);
        CHECK(r.entries[0].lhs == Approx(r.entries[0].rhs).epsilon(1e-12));
        CHECK(r.entries[2].lhs == Approx(r.entries[2].rhs).epsilon(1e-12));
        CHECK(r.ok());
    }
    SECTION("random smooth pairs") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> U(-3, 3);
        for (int t = 0; t < 10; ++t) {
            double p = U(rng), q = U(rng), w = U(rng);
            auto f = sample(0, 1, 201, [&](double x) { return std::sin(p * x) + 0.3 * x * x; });
            auto g = sample(0, 1, 201, [&](double x) { return std::cos(q * x + w); });
            auto d = sample(0, 1, 201, [&](double x) { return x + 0.05 * std::sin(2 * M_PI * x) / (1 + t); });
            CHECK(verify_derivation(f, g, d, a).ok());
        }
    }
}

TEST_CASE("subadditivity") {
    auto a = holder(0.5);
    auto f = sample(0, 1, 101, [](double x) { return std::sin(5 * x); });
    auto one = verify_subadditivity({f}, a);
    CHECK(one.entries[0].lhs == one.entries[0].rhs);
    auto two = verify_subadditivity({f, f}, a);
    CHECK(two.entries[1].lhs == Approx(2 * one.entries[0].lhs).epsilon(1e-12));
    CHECK(two.ok());
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> C(0.1, 0.9), H(-1, 1);
    std::vector<SampledMap> terms;
    for (int i = 0; i < 10; ++i) {
        double c = C(rng), h = H(rng);
        terms.push_back(sample(0, 1, 101, [=](double x) {
            double s = (x - c) / 0.2;
            return std::abs(s) < 1 ? h * std::exp(1 - 1 / (1 - s * s)) : 0.0;
        }));
    }
    CHECK(verify_subadditivity(terms, a).ok());
}

TEST_CASE("composition bound") {
    auto a = holder(0.5);
    auto id = Diffeo1::identity(TailClass::Compact, {0, 1, 65}, 2);
    auto f = bump_map(1e-4, 0.5, 0.4, 2, 65);
    auto fit = verify_composition_bound({{f, id}, {id, id}}, a, 0.1, 2);
    CHECK(fit.C == 0.0);
    CHECK(fit.pairs == 2);
    auto big = bump_map(0.05, 0.5, 0.4, 2, 65);
    CHECK_THROWS_AS(verify_composition_bound({{big, f}}, a, 0.01, 2), PreconditionError);

    std::mt19937 rng(13);
    std::uniform_real_distribution<double> E(-5e-3, 5e-3), C(0.45, 0.55), R(0.3, 0.4);
    std::vector<std::pair<Diffeo1, Diffeo1>> lo, hi;
    for (int t = 0; t < 12; ++t) {
        double e1 = E(rng), c1 = C(rng), r1 = R(rng), e2 = E(rng), c2 = C(rng), r2 = R(rng);
        lo.emplace_back(bump_map(e1, c1, r1, 2, 129), bump_map(e2, c2, r2, 2, 129));
        hi.emplace_back(bump_map(e1, c1, r1, 2, 257), bump_map(e2, c2, r2, 2, 257));
    }
    auto f1 = verify_composition_bound(lo, a, 10.0, 2), f2 = verify_composition_bound(hi, a, 10.0, 2);
    INFO(f1.max_norm << " " << f1.C << " " << f2.C);
    CHECK(std::isfinite(f1.C));
    if (f1.C > 0) CHECK(f2.C == Approx(f1.C).epsilon(0.2));
}

TEST_CASE("lip-met constant and inequalities") {
    auto a = holder(0.5);
    CHECK(lip_met_constant(1.0, a) == 3.0);
    Interval J{0, 1};
    auto id = Diffeo1::identity(TailClass::Compact, {0, 1, 9}, 2);
    for (const auto& e : verify_lip_met(id, J, a).entries) CHECK(e.lhs == 0.0);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> E(-1e-2, 1e-2), C(0.3, 0.7), R(0.1, 0.3);
    for (int t = 0; t < 10; ++t) CHECK(verify_lip_met(bump_map(E(rng), C(rng), R(rng), 3, 129), J, a).ok());
}
