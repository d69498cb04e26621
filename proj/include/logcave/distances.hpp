#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "logcave/empirical.hpp"
#include "logcave/errors.hpp"

namespace logcave {

// Metrics between two empirical distributions, plus the r used by the
// bounded-Lipschitz bound.  dbl_loose marks bounds exceeding the trivial
// cap of 2 (the bound is valid but uninformative there).
struct DistanceReport {
    double d1 = 0.0;
    double dks = 0.0;
    double dbl_upper = 0.0;
    double r_used = 1.0;
    bool dbl_loose = false;
};

namespace detail {

// Walk the merged support of two empirical distributions.  visit(pos, fa, fb,
// next) fires once per merged atom with the CDF values after all jumps at pos;
// next is the following merged atom, NaN at the last one.  The running sums
// replicate each distribution's own cumulative-weight order, so fa/fb agree
// bit-for-bit with a.cdf(pos)/b.cdf(pos).
template <class Visit>
void merged_cdf_walk(const EmpiricalDistribution& a,
                     const EmpiricalDistribution& b, Visit&& visit) {
    const std::vector<double>& xa = a.atoms();
    const std::vector<double>& wa = a.weights();
    const std::vector<double>& xb = b.atoms();
    const std::vector<double>& wb = b.weights();
    std::size_t i = 0;
    std::size_t j = 0;
    double fa = 0.0;
    double fb = 0.0;
    while (i < xa.size() || j < xb.size()) {
        double pos;
        if (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j])) {
            pos = xa[i];
        } else {
            pos = xb[j];
        }
        while (i < xa.size() && xa[i] == pos) fa += wa[i++];
        while (j < xb.size() && xb[j] == pos) fb += wb[j++];
        if (i == xa.size()) fa = 1.0;  // match the forced terminal cdf value
        if (j == xb.size()) fb = 1.0;
        double next = std::numeric_limits<double>::quiet_NaN();
        if (i < xa.size() && j < xb.size()) {
            next = std::min(xa[i], xb[j]);
        } else if (i < xa.size()) {
            next = xa[i];
        } else if (j < xb.size()) {
            next = xb[j];
        }
        visit(pos, fa, fb, next);
    }
}

}  // namespace detail

// Wasserstein-1 distance: the integral of |F_a - F_b|, exact because both
// CDFs are constant between merged atoms.
inline double mallows_d1(const EmpiricalDistribution& a,
                         const EmpiricalDistribution& b) {
    double total = 0.0;
    detail::merged_cdf_walk(a, b, [&](double pos, double fa, double fb,
                                      double next) {
        if (!std::isnan(next)) total += std::abs(fa - fb) * (next - pos);
    });
    return total;
}

// sup_t |F_a(t) - F_b(t)|; the sup of a piecewise-constant right-continuous
// difference is attained at a merged atom.
inline double kolmogorov_smirnov(const EmpiricalDistribution& a,
                                 const EmpiricalDistribution& b) {
    double best = 0.0;
    detail::merged_cdf_walk(a, b, [&](double, double fa, double fb, double) {
        best = std::max(best, std::abs(fa - fb));
    });
    return best;
}

// Mass of a outside (-r, r], i.e. F(-r) + 1 - F(r).
inline double mass_outside(const EmpiricalDistribution& a, double r) {
    return a.cdf(-r) + (1.0 - a.cdf(r));
}

// Upper bound on the bounded-Lipschitz distance:
//   4 * a(R \ (-r, r]) + 4 (r + 1) * D_KS(a, b).
inline double bounded_lipschitz_upper(const EmpiricalDistribution& a,
                                      const EmpiricalDistribution& b,
                                      double r) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw NonPositiveR("bounded_lipschitz_upper requires r > 0, got " +
                           std::to_string(r));
    }
    return 4.0 * mass_outside(a, r) +
           4.0 * (r + 1.0) * kolmogorov_smirnov(a, b);
}

// All three metrics; r picked to minimize the bounded-Lipschitz bound over
// the candidate set {|atom| > 0 of either input} + {1} (the bound is
// piecewise monotone between those points, so nothing better hides between
// them).  Ties break toward the smaller r for determinism.
inline DistanceReport distance_report(const EmpiricalDistribution& a,
                                      const EmpiricalDistribution& b) {
    DistanceReport rep;
    rep.d1 = mallows_d1(a, b);
    rep.dks = kolmogorov_smirnov(a, b);

    std::vector<double> candidates;
    candidates.push_back(1.0);
    for (const EmpiricalDistribution* d : {&a, &b}) {
        for (double x : d->atoms()) {
            double r = std::abs(x);
            if (r > 0.0) candidates.push_back(r);
        }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    double best = std::numeric_limits<double>::infinity();
    double best_r = 1.0;
    for (double r : candidates) {
        double bound = 4.0 * mass_outside(a, r) + 4.0 * (r + 1.0) * rep.dks;
        if (bound < best) {
            best = bound;
            best_r = r;
        }
    }
    rep.dbl_upper = best;
    rep.r_used = best_r;
    rep.dbl_loose = rep.dbl_upper > 2.0;
    return rep;
}

}  // namespace logcave
