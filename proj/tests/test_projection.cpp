#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "logcave/projection.hpp"
#include "logcave/rng.hpp"
#include "oracles.hpp"

using logcave::EmpiricalDistribution;
using logcave::LogConcaveDensity;

namespace {

EmpiricalDistribution ed(std::vector<double> v, std::vector<double> w = {}) {
    return EmpiricalDistribution::from_samples(v, w);
}

// Reference for the prefix integral int_{-inf}^x (F - G): trapezoid on
// the smooth F, exact closed form sum w_i (x - a_i)^+ for the step G.
double prefix_oracle(const LogConcaveDensity& d, const EmpiricalDistribution& q, double x) {
    double lo = d.support_lo();
    double accF = 0.0;
    if (x > lo) {
        double top = std::min(x, d.support_hi());
        const int N = 200000;
        double h = (top - lo) / N;
        for (int i = 0; i < N; ++i)
            accF += 0.5 * (d.cdf(lo + i * h) + d.cdf(lo + (i + 1) * h)) * h;
        if (x > top) accF += x - top;
    }
    double accG = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        accG += q.weights()[i] * std::max(0.0, x - q.atoms()[i]);
    return accF - accG;
}

}  // namespace

TEST_CASE("two equal atoms give the uniform density", "[project]") {
    auto q = ed({0.0, 1.0});
    auto psi = logcave::fit(q);
    CHECK(logcave::loglik(psi, q) == Catch::Approx(0.0).margin(1e-9));
    CHECK(psi.support_lo() == 0.0);
    CHECK(psi.support_hi() == 1.0);
    CHECK(psi.eval_log(0.5) == Catch::Approx(0.0).margin(1e-7));
    CHECK(logcave::profile_loglik(ed({-1.0, 1.0})) == Catch::Approx(-std::log(2.0)).margin(1e-9));
}

TEST_CASE("two unequal atoms give a slanted exponential", "[project]") {
    auto q = ed({0.0, 1.0}, {0.9, 0.1});
    auto psi = logcave::fit(q);
    REQUIRE(psi.num_knots() == 2);
    // stationarity in closed form: slope s solves iexp_t(s)/em1(s) = 0.1
    long double slo = -50.0L, shi = -0.5L;
    for (int it = 0; it < 200; ++it) {
        long double sm = 0.5L * (slo + shi);
        ((oracle::iexp_t_l(sm) / oracle::em1_l(sm)) > 0.1L ? shi : slo) = sm;
    }
    double s_star = (double)(0.5L * (slo + shi));
    double s_fit = (psi.logvals()[1] - psi.logvals()[0]);
    CHECK(s_fit == Catch::Approx(s_star).epsilon(1e-6));
    CHECK(psi.mean() == Catch::Approx(0.1).margin(1e-7));
    CHECK(logcave::certify(psi, q).passed);
}

TEST_CASE("interior atom of a symmetric triple is not a kink", "[project]") {
    auto q = ed({-1.0, 0.0, 1.0});
    auto psi = logcave::fit(q);
    CHECK(logcave::loglik(psi, q) == Catch::Approx(-std::log(2.0)).margin(1e-8));
    auto ks = psi.knot_set();
    REQUIRE(ks.points.size() == 2);  // flat on [-1,1]
    CHECK(psi.eval_log(0.3) == Catch::Approx(-std::log(2.0)).margin(1e-6));
}

TEST_CASE("peaked triple matches a brute-force tent maximization", "[project]") {
    auto q = ed({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
    // by symmetry the optimum is a tent phi(0)=a, phi(+-1)=a-s; maximize
    // a - s/2 - 2*mass(left half) + 1 on a grid with refinement
    double alo = -3.0, ahi = 1.0, slo = 0.0, shi = 8.0, best = -1e300, ba = 0, bs = 0;
    for (int round = 0; round < 6; ++round) {
        for (int i = 0; i <= 60; ++i)
            for (int j = 0; j <= 60; ++j) {
                double a = alo + (ahi - alo) * i / 60.0;
                double s = slo + (shi - slo) * j / 60.0;
                double L = a - 0.5 * s - 2.0 * logcave::numeric::seg_mass(a - s, a, 1.0) + 1.0;
                if (L > best) {
                    best = L;
                    ba = a;
                    bs = s;
                }
            }
        double aw = (ahi - alo) / 10.0, sw = (shi - slo) / 10.0;
        alo = ba - aw;
        ahi = ba + aw;
        slo = std::max(0.0, bs - sw);
        shi = bs + sw;
    }
    double prof = logcave::profile_loglik(q);
    CHECK(prof == Catch::Approx(best).margin(1e-8));
    // the hat masses of the flat density on [-1,1] are exactly
    // (1/4, 1/2, 1/4), so here the optimum is the uniform itself
    CHECK(bs == Catch::Approx(0.0).margin(1e-3));
    CHECK(prof == Catch::Approx(-std::log(2.0)).margin(1e-8));
    auto psi = logcave::fit(q);
    CHECK(psi.knot_set().points.size() == 2);
}

TEST_CASE("asymmetric triple matches a 3-parameter brute force", "[project]") {
    std::vector<double> wts = {0.2, 0.5, 0.3};
    auto q = ed({-1.0, 0.0, 1.0}, wts);
    // maximize over all concave values (y0,y1,y2) on the three atoms
    double lo0 = -4.0, hi0 = 1.0, lo1 = -4.0, hi1 = 1.0, lo2 = -4.0, hi2 = 1.0;
    double best = -1e300, b0 = 0, b1 = 0, b2 = 0;
    for (int round = 0; round < 7; ++round) {
        for (int i = 0; i <= 40; ++i)
            for (int j = 0; j <= 40; ++j)
                for (int k = 0; k <= 40; ++k) {
                    double y0 = lo0 + (hi0 - lo0) * i / 40.0;
                    double y1 = lo1 + (hi1 - lo1) * j / 40.0;
                    double y2 = lo2 + (hi2 - lo2) * k / 40.0;
                    if (y1 - y0 < y2 - y1) continue;  // must be concave
                    double L = 0.2 * y0 + 0.5 * y1 + 0.3 * y2 -
                               logcave::numeric::seg_mass(y0, y1, 1.0) -
                               logcave::numeric::seg_mass(y1, y2, 1.0) + 1.0;
                    if (L > best) {
                        best = L;
                        b0 = y0;
                        b1 = y1;
                        b2 = y2;
                    }
                }
        double w0 = (hi0 - lo0) / 13.0, w1 = (hi1 - lo1) / 13.0, w2 = (hi2 - lo2) / 13.0;
        lo0 = b0 - w0;
        hi0 = b0 + w0;
        lo1 = b1 - w1;
        hi1 = b1 + w1;
        lo2 = b2 - w2;
        hi2 = b2 + w2;
    }
    double prof = logcave::profile_loglik(q);
    CHECK(prof == Catch::Approx(best).margin(1e-7));
    auto psi = logcave::fit(q);
    CHECK(psi.mean() == Catch::Approx(q.mean()).margin(1e-7));
    CHECK(logcave::certify(psi, q).passed);
}

TEST_CASE("loglik free function", "[project]") {
    auto u = logcave::make_uniform(0.0, 1.0);
    auto q = ed({0.0, 1.0});
    CHECK(logcave::loglik(u, q) == Catch::Approx(0.0).margin(1e-12));
    auto q2 = ed({0.0, 2.0});
    CHECK(logcave::loglik(u, q2) == -INFINITY);
    // affine shift of the density changes loglik by the known amount on
    // correspondingly shifted data
    auto u2 = u.affine_transform(0.0, 2.0);
    auto q3 = ed({0.0, 2.0});
    CHECK(logcave::loglik(u2, q3) == Catch::Approx(-std::log(2.0)).margin(1e-12));
}

TEST_CASE("certificate accepts the optimum and rejects others", "[project]") {
    auto q = ed({0.0, 1.0});
    auto good = logcave::make_uniform(0.0, 1.0);
    auto cert = logcave::certify(good, q);
    CHECK(cert.passed);
    CHECK(cert.total_integral == Catch::Approx(0.0).margin(1e-12));
    CHECK(cert.max_prefix <= 1e-12);
    // H(1/2) = int_0^{1/2} (t - 1/2) dt = -1/8 exactly
    CHECK(logcave::prefix_integral(good, q, 0.5) == Catch::Approx(-0.125).margin(1e-12));

    auto bad = logcave::make_uniform(-1.0, 1.0);
    auto cbad = logcave::certify(bad, q);
    CHECK_FALSE(cbad.passed);
    CHECK(cbad.total_integral == Catch::Approx(0.5).margin(1e-12));
    CHECK(cbad.max_prefix >= 0.25 - 1e-12);
}

TEST_CASE("prefix integral matches trapezoid reference", "[project]") {
    auto d = logcave::make_normal_grid(0.5, 1.3, 301);
    auto q = ed({-2.0, -0.5, 0.0, 1.0, 4.0}, {0.1, 0.2, 0.3, 0.3, 0.1});
    for (double x : {-1.0, 0.2, 1.7, 3.9, 6.0}) {
        CAPTURE(x);
        CHECK(logcave::prefix_integral(d, q, x) ==
              Catch::Approx(prefix_oracle(d, q, x)).margin(2e-6));
    }
}

TEST_CASE("random fits pass their certificates", "[project]") {
    logcave::Rng seeder(2024);
    for (int rep = 0; rep < 30; ++rep) {
        std::uint64_t seed = logcave::derive_seed(99, (std::uint64_t)rep);
        logcave::Rng rng(seed);
        std::size_t n = 5 + (rng.next_u64() % 196);
        std::vector<double> v(n);
        int fam = rep % 3;
        for (auto& z : v)
            z = fam == 0 ? rng.t2() : fam == 1 ? rng.gamma(2.0) : rng.normal() * 2.0 + 1.0;
        auto q = EmpiricalDistribution::from_samples(v);
        CAPTURE(rep, n);
        logcave::FitTrace tr;
        auto psi = logcave::fit(q, {}, &tr);
        auto cert = logcave::certify(psi, q, 1e-6);
        CHECK(cert.passed);
        // monotone objective along the accepted steps
        for (std::size_t i = 1; i < tr.loglik.size(); ++i)
            CHECK(tr.loglik[i] >= tr.loglik[i - 1] - 1e-10);
        // first moment matches and the convex ordering holds
        CHECK(psi.mean() == Catch::Approx(q.mean()).margin(1e-7));
        CHECK(logcave::convex_order_check(psi, q, logcave::default_convex_tests(q)) <= 1e-7);
        // profile never beats the closed-form bound
        CHECK(logcave::loglik(psi, q) <= logcave::loglik_upper_bound(q) + 1e-9);
    }
}

TEST_CASE("upper bound is attained by a symmetric two-point distribution", "[project]") {
    auto q = ed({-1.0, 1.0});
    CHECK(logcave::loglik_upper_bound(q) == Catch::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(logcave::profile_loglik(q) ==
          Catch::Approx(logcave::loglik_upper_bound(q)).margin(1e-6));
    CHECK_THROWS_AS(logcave::loglik_upper_bound(ed({2.0, 2.0})), logcave::DegenerateSupport);
    CHECK_THROWS_AS(logcave::fit(ed({2.0, 2.0})), logcave::DegenerateSupport);
}

TEST_CASE("smoothing by convolution cannot raise the profile", "[project]") {
    auto q = ed({-1.0, 0.0, 2.0}, {0.3, 0.4, 0.3});
    auto r = ed({-0.6, 0.6});
    double base = logcave::profile_loglik(q);
    double conv = logcave::profile_loglik(q.convolve(r));
    CHECK(conv <= base + 1e-6);
    CHECK(conv < base - 1e-4);  // genuine spread must strictly decrease it
}

TEST_CASE("affine equivariance", "[project]") {
    logcave::Rng rng(7);
    std::vector<double> v(40);
    for (auto& z : v) z = rng.t2();
    auto q = EmpiricalDistribution::from_samples(v);
    double a = 2.5, b = -1.7;
    std::vector<double> tv(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) tv[i] = a + b * v[i];
    auto qt = EmpiricalDistribution::from_samples(tv);

    double p0 = logcave::profile_loglik(q);
    double p1 = logcave::profile_loglik(qt);
    CHECK(p1 == Catch::Approx(p0 - std::log(std::abs(b))).margin(1e-6));

    auto psi = logcave::fit(q);
    auto psit = logcave::fit(qt);
    for (double u : {0.05, 0.2, 0.5, 0.8, 0.95}) {
        double y = qt.quantile(u);
        CAPTURE(u, y);
        CHECK(psit.eval_log(y) ==
              Catch::Approx(psi.eval_log((y - a) / b) - std::log(std::abs(b))).margin(1e-5));
    }
}

TEST_CASE("large heavy-tailed grid stays close to the two-sided exponential",
          "[project][slow]") {
    // quantile grid of the scaled heavy-tailed reference shape
    const std::size_t n = 2000;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = (i + 0.5) / n;
        double s = 2.0 * u - 1.0;
        v[i] = s / std::sqrt((1.0 - s) * (1.0 + s));
    }
    auto q = EmpiricalDistribution::from_samples(v);
    auto psi = logcave::fit(q);
    auto lap = logcave::make_laplace();
    CHECK(psi.l1_distance(lap) < 0.1);
    CHECK(logcave::certify(psi, q).passed);
}
