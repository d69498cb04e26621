#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "logcave/numeric.hpp"
#include "oracles.hpp"

using namespace logcave::numeric;

TEST_CASE("exponential moment kernels match long double references", "[numeric]") {
    std::vector<double> zs = {-600.0, -40.0, -3.0,  -0.5,  -0.11, -0.099, -0.01, -1e-6, 0.0,
                              1e-6,   0.01,  0.099, 0.11,  0.26,  0.5,    3.0,   40.0};
    for (double z : zs) {
        CAPTURE(z);
        CHECK(em1(z) == Catch::Approx((double)oracle::em1_l(z)).epsilon(1e-13));
        CHECK(em2(z) == Catch::Approx((double)oracle::em2_l(z)).epsilon(1e-12));
        CHECK(iexp_t(z) == Catch::Approx((double)oracle::iexp_t_l(z)).epsilon(1e-12));
        CHECK(iexp_tt(z) == Catch::Approx((double)oracle::iexp_tt_l(z)).epsilon(1e-12));
    }
    CHECK(em1(0.0) == 1.0);
    CHECK(em2(0.0) == 1.0);
    CHECK(iexp_t(0.0) == 0.5);
    CHECK(iexp_tt(0.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("kernels agree with quadrature", "[numeric]") {
    for (double z : {-7.3, -0.04, 1.9, 25.0}) {
        CAPTURE(z);
        long double q1 = oracle::integrate([&](long double t) { return std::exp(z * t); }, 0, 1);
        long double qt =
            oracle::integrate([&](long double t) { return t * std::exp(z * t); }, 0, 1);
        long double qtt =
            oracle::integrate([&](long double t) { return t * t * std::exp(z * t); }, 0, 1);
        CHECK(em1(z) == Catch::Approx((double)q1).epsilon(1e-12));
        CHECK(iexp_t(z) == Catch::Approx((double)qt).epsilon(1e-12));
        CHECK(iexp_tt(z) == Catch::Approx((double)qtt).epsilon(1e-12));
    }
}

TEST_CASE("segment integrals are anchored against overflow", "[numeric]") {
    // mass of exp(a + (b-a)t/L) with an extreme rise: equals (e^b - e^a)/slope
    double m = seg_mass(-500.0, 100.0, 2.0);
    CHECK(std::isfinite(m));
    CHECK(m == Catch::Approx(std::exp(100.0) / 300.0).epsilon(1e-12));
    double mf = seg_mass(100.0, -500.0, 2.0);
    CHECK(mf == Catch::Approx(std::exp(100.0) / 300.0).epsilon(1e-12));

    // first and second moments against quadrature for moderate values
    for (auto [a, b, L] : std::vector<std::array<double, 3>>{
             {0.0, 0.0, 1.0}, {-1.0, 2.0, 3.0}, {2.0, -9.0, 0.5}, {-3.0, -3.0001, 2.0}}) {
        CAPTURE(a, b, L);
        auto f = [&](long double t) { return std::exp(a + (b - a) * t / L); };
        CHECK(seg_mass(a, b, L) == Catch::Approx((double)oracle::integrate(f, 0, L)).epsilon(1e-12));
        CHECK(seg_first(a, b, L) ==
              Catch::Approx((double)oracle::integrate(
                                [&](long double t) { return t * f(t); }, 0, L))
                  .epsilon(1e-12));
        CHECK(seg_second(a, b, L) ==
              Catch::Approx((double)oracle::integrate(
                                [&](long double t) { return t * t * f(t); }, 0, L))
                  .epsilon(1e-12));
        // double integral of the partial mass
        long double pf = oracle::integrate(
            [&](long double t) {
                return oracle::integrate(f, 0, t, 16);
            },
            0, L, 32);
        CHECK(seg_prefix2(a, b, L) == Catch::Approx((double)pf).epsilon(1e-10));
    }

    // identity: prefix2 == L*mass - first (independent arrangement)
    for (auto [a, b, L] : std::vector<std::array<double, 3>>{{-2.0, 5.0, 1.7}, {1.0, -30.0, 4.0}}) {
        CHECK(seg_prefix2(a, b, L) ==
              Catch::Approx(L * seg_mass(a, b, L) - seg_first(a, b, L)).epsilon(1e-10));
    }
}

TEST_CASE("normal quantile round trip", "[numeric]") {
    CHECK(inverse_normal_cdf(0.975) == Catch::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.5) == Catch::Approx(0.0).margin(1e-15));
    for (double p : {1e-8, 1e-4, 0.025, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
        CAPTURE(p);
        CHECK(normal_cdf(inverse_normal_cdf(p)) == Catch::Approx(p).epsilon(1e-11));
    }
}
