#pragma once

// Maximum-likelihood projection of a finitely supported distribution
// onto log-concave densities.  The optimizer works on the values of the
// log-density at an active set of knots (always a subset of the atoms).
// Each cycle solves the smooth strictly concave subproblem on the
// current knot set by Newton's method, ignoring concavity; if the
// subproblem optimum leaves the concave cone, the iterate walks back
// along the segment from the last feasible point (the constraints are
// linear in the knot values, so the crossing is exact), the kink that
// binds is dropped, and the smaller subproblem is re-solved.  At a
// feasible subproblem optimum the dual slack on the full atom grid
// decides termination or which atoms join the knot set.  The dual
// slack at atom x_j equals, up to the mass and mean equations, minus
// the prefix integral H(x_j) = int_{-inf}^{x_j} (F - G), so the solver
// terminates exactly when the first-order characterization of the
// optimum holds on the atom grid, and certify() re-derives the same
// quantities from the fitted distribution function as an independent
// check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "logcave/density.hpp"
#include "logcave/empirical.hpp"
#include "logcave/errors.hpp"
#include "logcave/numeric.hpp"

namespace logcave {

struct FitOptions {
    int max_iter = 500;             // outer active-set cycles
    double grad_tol = 1e-8;         // reduced-gradient target (see effective_grad_tol)
    double certificate_tol = 1e-6;  // tolerance the result must certify at
    int init_knot_cap = 64;         // initial active set size for large inputs
    int inner_max = 200;            // Newton iterations per active-set cycle
};

struct FitTrace {
    std::vector<double> loglik;  // objective at successive feasible iterates
    int outer_cycles = 0;
    std::size_t final_knots = 0;
};

struct Certificate {
    double total_integral = 0.0;  // int (F - G) over the whole line
    double max_prefix = 0.0;      // sup_x int_{-inf}^x (F - G)
    double max_knot_abs = 0.0;    // max |prefix| over the strict-kink set
    bool passed = false;
    double tol = 0.0;
};

// L(phi, Q) = int phi dQ - int e^phi + 1.  -inf when an atom falls
// outside the support of phi.
inline double loglik(const LogConcaveDensity& phi, const EmpiricalDistribution& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        double v = phi.eval_log(q.atoms()[i]);
        if (v == -std::numeric_limits<double>::infinity())
            return -std::numeric_limits<double>::infinity();
        s += q.weights()[i] * v;
    }
    return s - std::exp(phi.log_integrate_exp()) + 1.0;
}

// int_{x1}^{x2} F, with F the fitted distribution function; exact.
inline double cdf_prefix(const LogConcaveDensity& d, double x1, double x2) {
    if (!(x2 > x1)) return 0.0;
    double lo = d.support_lo(), hi = d.support_hi();
    double total = 0.0;
    if (x2 > hi) {
        total += x2 - std::max(x1, hi);
        x2 = hi;
    }
    if (!(x2 > x1)) return total;
    if (x1 < lo) x1 = lo;
    if (!(x2 > x1)) return total;
    const auto& k = d.knots();
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(k.begin(), k.end(), x1) - k.begin());
    if (i > 0) --i;
    if (i + 1 >= k.size()) i = k.size() - 2;
    double pos = x1;
    double F = d.cdf(x1);
    while (pos < x2) {
        double end = std::min(x2, k[i + 1]);
        double L = end - pos;
        if (L > 0.0) {
            double a = d.eval_log(pos), b = a + d.slope(i) * L;
            // int F over the piece = F(pos)*L + double integral of the density
            total += F * L + numeric::seg_prefix2(a, b, L);
            F += numeric::seg_mass(a, b, L);
        }
        pos = end;
        ++i;
        if (i + 1 >= k.size() && pos < x2) break;
    }
    return total;
}

// H(x) = int_{-inf}^x (F - G); the optimum is characterized by H <= 0
// everywhere with equality at the strict kinks and the support ends.
inline double prefix_integral(const LogConcaveDensity& psi, const EmpiricalDistribution& q,
                              double x) {
    if (!psi.is_normalized()) throw NotNormalized("prefix integral needs a normalized density");
    std::vector<double> b = psi.knots();
    b.insert(b.end(), q.atoms().begin(), q.atoms().end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    double H = 0.0, pos = b.front();
    if (x <= pos) return 0.0;
    for (std::size_t t = 1; t < b.size() && pos < x; ++t) {
        double end = std::min(b[t], x);
        H += cdf_prefix(psi, pos, end) - q.cdf(pos) * (end - pos);
        pos = end;
    }
    return H;  // beyond the last breakpoint F = G = 1
}

inline Certificate certify(const LogConcaveDensity& psi, const EmpiricalDistribution& q,
                           double tol = 1e-6) {
    if (!psi.is_normalized()) throw NotNormalized("certify needs a normalized density");
    if (!(tol > 0.0)) throw OutOfRange("certificate tolerance must be positive");
    std::vector<double> b = psi.knots();
    b.insert(b.end(), q.atoms().begin(), q.atoms().end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());

    std::vector<double> H(b.size(), 0.0);
    for (std::size_t t = 0; t + 1 < b.size(); ++t)
        H[t + 1] = H[t] + cdf_prefix(psi, b[t], b[t + 1]) - q.cdf(b[t]) * (b[t + 1] - b[t]);

    Certificate c;
    c.tol = tol;
    c.total_integral = H.back();
    double hinf = 0.0;
    // H is convex between consecutive breakpoints, so its sup over the
    // line is attained on the breakpoint grid (H -> 0 at -inf is H[0]).
    c.max_prefix = -std::numeric_limits<double>::infinity();
    for (double h : H) {
        c.max_prefix = std::max(c.max_prefix, h);
        hinf = std::max(hinf, std::abs(h));
    }
    c.max_knot_abs = 0.0;
    for (double kp : psi.knot_set().points) {
        auto it = std::lower_bound(b.begin(), b.end(), kp);
        std::size_t idx = static_cast<std::size_t>(it - b.begin());
        if (idx < b.size())
            c.max_knot_abs = std::max(c.max_knot_abs, std::abs(H[idx]));
    }
    double knot_tol = tol * (1.0 + hinf);
    c.passed = std::abs(c.total_integral) <= tol && c.max_prefix <= tol &&
               c.max_knot_abs <= knot_tol;
    return c;
}

namespace detail {

// Active-set state for the reduced Newton solve.
struct ActiveSet {
    std::vector<std::size_t> idx;  // knot indices into the atom grid
    std::vector<double> y;         // log-density values at those knots
    // per-interval aggregates over atoms strictly inside (k_j, k_{j+1})
    std::vector<double> W, S;
};

inline void rebuild_aggregates(ActiveSet& as, const std::vector<double>& x,
                               const std::vector<double>& w) {
    std::size_t p = as.idx.size();
    as.W.assign(p - 1, 0.0);
    as.S.assign(p - 1, 0.0);
    for (std::size_t j = 0; j + 1 < p; ++j)
        for (std::size_t i = as.idx[j] + 1; i < as.idx[j + 1]; ++i) {
            as.W[j] += w[i];
            as.S[j] += w[i] * x[i];
        }
}

// Linear part of the objective: sum_i w_i phi(x_i) = <c, y>.
inline void linear_coeffs(const ActiveSet& as, const std::vector<double>& x,
                          const std::vector<double>& w, std::vector<double>& c) {
    std::size_t p = as.idx.size();
    c.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        c[j] = w[as.idx[j]];
        if (j > 0) {
            double t0 = x[as.idx[j - 1]], d = x[as.idx[j]] - t0;
            c[j] += (as.S[j - 1] - t0 * as.W[j - 1]) / d;
        }
        if (j + 1 < p) {
            double t1 = x[as.idx[j + 1]], d = t1 - x[as.idx[j]];
            c[j] += (t1 * as.W[j] - as.S[j]) / d;
        }
    }
}

// Mass integral, its gradient, and tridiagonal Hessian wrt knot values.
struct MassDerivs {
    double I = 0.0;
    std::vector<double> g, hd, ho;  // gradient, Hessian diagonal, off-diagonal
};

inline void mass_derivs(const ActiveSet& as, const std::vector<double>& x, MassDerivs& md) {
    std::size_t p = as.idx.size();
    md.I = 0.0;
    md.g.assign(p, 0.0);
    md.hd.assign(p, 0.0);
    md.ho.assign(p - 1, 0.0);
    using namespace numeric;
    for (std::size_t j = 0; j + 1 < p; ++j) {
        double L = x[as.idx[j + 1]] - x[as.idx[j]];
        double a = as.y[j], b = as.y[j + 1];
        double z = b - a;
        double ea, pa, pb, paa, pab, pbb;
        if (z >= 0.0) {
            ea = std::exp(b);
            double e1 = em1(-z), it = iexp_t(-z), itt = iexp_tt(-z);
            pa = it;             // int (1-t) e^{zt} anchored
            pb = e1 - it;
            paa = itt;
            pab = it - itt;
            pbb = e1 - 2.0 * it + itt;
        } else {
            ea = std::exp(a);
            double e1 = em1(z), it = iexp_t(z), itt = iexp_tt(z);
            pa = e1 - it;
            pb = it;
            paa = e1 - 2.0 * it + itt;
            pab = it - itt;
            pbb = itt;
        }
        double m = L * ea * (pa + pb);
        md.I += m;
        md.g[j] += L * ea * pa;
        md.g[j + 1] += L * ea * pb;
        md.hd[j] += L * ea * paa;
        md.hd[j + 1] += L * ea * pbb;
        md.ho[j] = L * ea * pab;
    }
}

// Symmetric positive definite tridiagonal solve (LDL^T).
inline bool tridiag_solve(std::vector<double> d, std::vector<double> e, std::vector<double> b,
                          std::vector<double>& out) {
    std::size_t n = d.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (!(d[i - 1] > 0.0)) return false;
        double m = e[i - 1] / d[i - 1];
        d[i] -= m * e[i - 1];
        b[i] -= m * b[i - 1];
        e[i - 1] = m;
    }
    if (!(d[n - 1] > 0.0)) return false;
    out.assign(n, 0.0);
    out[n - 1] = b[n - 1] / d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) out[i] = b[i] / d[i] - e[i] * out[i + 1];
    return true;
}

inline double objective(const std::vector<double>& c, const ActiveSet& as,
                        const std::vector<double>& x) {
    double I = 0.0;
    for (std::size_t j = 0; j + 1 < as.idx.size(); ++j) {
        double L = x[as.idx[j + 1]] - x[as.idx[j]];
        I += numeric::seg_mass(as.y[j], as.y[j + 1], L);
    }
    double lin = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) lin += c[j] * as.y[j];
    return lin - I + 1.0;
}

inline void remove_knot(ActiveSet& as, std::size_t j, const std::vector<double>& x,
                        const std::vector<double>& w) {
    // merge intervals j-1 and j; the removed knot's atom joins the interior
    std::size_t k = as.idx[j];
    as.W[j - 1] += w[k] + as.W[j];
    as.S[j - 1] += w[k] * x[k] + as.S[j];
    as.W.erase(as.W.begin() + static_cast<std::ptrdiff_t>(j));
    as.S.erase(as.S.begin() + static_cast<std::ptrdiff_t>(j));
    as.idx.erase(as.idx.begin() + static_cast<std::ptrdiff_t>(j));
    as.y.erase(as.y.begin() + static_cast<std::ptrdiff_t>(j));
}

// Dual slacks on the full atom grid for the current piecewise function.
struct DualInfo {
    double mass_gap = 0.0;   // 1 - int e^phi
    double mean_gap = 0.0;   // <g, x>
    std::vector<double> v;   // v_j = sum_{i>j} g_i (x_i - x_j) >= 0 wanted
};

inline void dual_slacks(const ActiveSet& as, const std::vector<double>& x,
                        const std::vector<double>& w, DualInfo& di) {
    std::size_t n = x.size(), p = as.idx.size();
    std::vector<double> phi(n);
    for (std::size_t j = 0; j + 1 < p; ++j) {
        double t0 = x[as.idx[j]], t1 = x[as.idx[j + 1]];
        double s = (as.y[j + 1] - as.y[j]) / (t1 - t0);
        for (std::size_t i = as.idx[j]; i < as.idx[j + 1]; ++i)
            phi[i] = as.y[j] + s * (x[i] - t0);
    }
    phi[n - 1] = as.y[p - 1];

    std::vector<double> g(n);
    double prev_fr = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0, fr = 0.0;
        if (i + 1 < n) {
            double L = x[i + 1] - x[i];
            m = numeric::seg_mass(phi[i], phi[i + 1], L);
            fr = numeric::seg_first(phi[i], phi[i + 1], L) / L;
        }
        double a = prev_fr + m - fr;  // hat-basis mass at atom i
        g[i] = w[i] - a;
        mass += m;
        prev_fr = fr;
    }
    di.mass_gap = 1.0 - mass;
    di.v.assign(n, 0.0);
    double sg = 0.0, sgx = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        di.v[i] = sgx - x[i] * sg;
        sg += g[i];
        sgx += g[i] * x[i];
    }
    di.mean_gap = sgx;
}

}  // namespace detail

inline LogConcaveDensity fit(const EmpiricalDistribution& q, const FitOptions& opts = {},
                             FitTrace* trace = nullptr) {
    if (!q.is_nondegenerate())
        throw DegenerateSupport("projection needs at least two distinct atoms");
    const std::vector<double>& x = q.atoms();
    const std::vector<double>& w = q.weights();
    const std::size_t n = x.size();

    detail::ActiveSet as;
    std::size_t cap = static_cast<std::size_t>(std::max(2, opts.init_knot_cap));
    if (n <= cap) {
        as.idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) as.idx[i] = i;
    } else {
        as.idx.push_back(0);
        for (std::size_t r = 1; r + 1 < cap; ++r) {
            std::size_t i = (r * (n - 1)) / (cap - 1);
            if (i > as.idx.back()) as.idx.push_back(i);
        }
        as.idx.push_back(n - 1);
    }
    // start from the best-fitting two-sided exponential: concave on any grid
    double med = q.median(), b0 = q.mean_abs_dev(med);
    as.y.resize(as.idx.size());
    for (std::size_t j = 0; j < as.idx.size(); ++j)
        as.y[j] = -std::abs(x[as.idx[j]] - med) / b0 - std::log(2.0 * b0);

    detail::rebuild_aggregates(as, x, w);
    std::vector<double> c;
    detail::linear_coeffs(as, x, w, c);

    const double range = x[n - 1] - x[0];
    const double in_tol = 0.05 * opts.certificate_tol;
    // a relative mass error eps shifts every prefix integral by up to
    // eps * range after normalization, so cap it accordingly
    const double mass_tol = 0.2 * opts.certificate_tol / (1.0 + range);
    double cur = detail::objective(c, as, x);
    if (trace) trace->loglik.push_back(cur);

    detail::MassDerivs md;
    detail::DualInfo di;
    std::vector<double> dir;

    // Newton on the smooth subproblem restricted to the current knot
    // set.  Concavity is not enforced here: the restricted objective is
    // strictly concave and smooth, so damped steps converge on their
    // own and the iterate is brought back to the cone afterwards.
    auto solve_subproblem = [&]() {
        int floor_hits = 0;
        for (int it = 0; it < opts.inner_max; ++it) {
            std::size_t p = as.idx.size();
            detail::mass_derivs(as, x, md);
            std::vector<double> grad(p);
            double gmax = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                grad[j] = c[j] - md.g[j];
                gmax = std::max(gmax, std::abs(grad[j]));
            }
            double gtol_eff = std::min(opts.grad_tol,
                                       in_tol / ((1.0 + range) * static_cast<double>(p)));
            if (gmax <= gtol_eff) return;

            if (!detail::tridiag_solve(md.hd, md.ho, grad, dir)) {
                // fall back to steepest ascent with a conservative scale
                dir = grad;
                double hmax = 1e-300;
                for (double h : md.hd) hmax = std::max(hmax, h);
                for (double& v : dir) v /= hmax;
            }
            double gd = 0.0;
            for (std::size_t j = 0; j < p; ++j) gd += grad[j] * dir[j];
            if (gd <= 0.0) {
                dir = grad;
                gd = 0.0;
                double hmax = 1e-300;
                for (double h : md.hd) hmax = std::max(hmax, h);
                for (double& v : dir) v /= hmax;
                for (std::size_t j = 0; j < p; ++j) gd += grad[j] * dir[j];
                if (gd <= 0.0) return;
            }
            // near-singular curvature (tiny intervals, empty tails) can
            // blow the step up; shrinking the step keeps the backtracking
            // search inside the range where the model is informative
            double dmax = 0.0;
            for (double v : dir) dmax = std::max(dmax, std::abs(v));
            if (dmax > 100.0) {
                double shrink = 100.0 / dmax;
                for (double& v : dir) v *= shrink;
                gd *= shrink;
            }

            std::vector<double> y0 = as.y;
            // slack of a few ulps so steps at the rounding floor still
            // count; the trace stays monotone well below test tolerances
            double slack = 1e-14 * (1.0 + std::abs(cur));
            double t = 1.0, cand = cur;
            bool accepted = false;
            while (t > 1e-14) {
                for (std::size_t j = 0; j < p; ++j) as.y[j] = y0[j] + t * dir[j];
                cand = detail::objective(c, as, x);
                if (cand >= cur + 1e-4 * t * gd - slack) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) {
                as.y = y0;
                return;  // rounding floor reached
            }
            floor_hits = cand <= cur + slack ? floor_hits + 1 : 0;
            cur = cand;
            if (floor_hits >= 2) return;  // no representable progress left
        }
    };

    int outer = 0;
    bool done = false;
    int stalls = 0;
    for (; outer < opts.max_iter && !done; ++outer) {
        // Solve on the current knots; while the optimum leaves the
        // concave cone, walk back along the segment from the feasible
        // base point (the kink defects are linear in the values, so the
        // first crossing is exact), drop the kink that binds there, and
        // re-solve on the smaller set.  Each pass removes one knot, so
        // the loop is finite and every blend point stays feasible.
        std::size_t drop_guard = as.idx.size();
        for (std::size_t pass = 0; pass <= drop_guard; ++pass) {
            std::vector<double> yb = as.y;
            solve_subproblem();
            std::size_t p = as.idx.size();
            double tstar = 1.0;
            std::ptrdiff_t jbind = -1;
            for (std::size_t j = 1; j + 1 < p; ++j) {
                double dl = x[as.idx[j]] - x[as.idx[j - 1]];
                double dr = x[as.idx[j + 1]] - x[as.idx[j]];
                auto kink = [&](const std::vector<double>& y) {
                    return (y[j + 1] - y[j]) / dr - (y[j] - y[j - 1]) / dl;
                };
                double scale = 1.0 + std::abs((as.y[j + 1] - as.y[j]) / dr) +
                               std::abs((as.y[j] - as.y[j - 1]) / dl);
                double se = kink(as.y);
                if (se <= 1e-12 * scale) continue;  // kink stays concave
                double sb = std::min(kink(yb), 0.0);
                double tj = -sb / (se - sb);
                if (tj < tstar) {
                    tstar = tj;
                    jbind = static_cast<std::ptrdiff_t>(j);
                }
            }
            if (jbind < 0) {
                if (trace) trace->loglik.push_back(cur);
                break;  // optimum is concave: subproblem done
            }
            for (std::size_t j = 0; j < p; ++j)
                as.y[j] = yb[j] + tstar * (as.y[j] - yb[j]);
            detail::remove_knot(as, static_cast<std::size_t>(jbind), x, w);
            detail::linear_coeffs(as, x, w, c);
            cur = detail::objective(c, as, x);
            if (trace) trace->loglik.push_back(cur);
        }

        // dual check on the full atom grid
        detail::dual_slacks(as, x, w, di);
        double worst = 0.0;
        std::ptrdiff_t worst_j = -1;
        std::size_t kpos = 0;
        double knot_eq = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            bool is_knot = kpos < as.idx.size() && as.idx[kpos] == j;
            if (is_knot) {
                knot_eq = std::max(knot_eq, std::abs(di.v[j]));
                ++kpos;
            } else if (di.v[j] < worst) {
                worst = di.v[j];
                worst_j = static_cast<std::ptrdiff_t>(j);
            }
        }
        bool ok = std::abs(di.mass_gap) <= mass_tol && std::abs(di.mean_gap) <= in_tol &&
                  worst >= -in_tol && knot_eq <= in_tol;
        if (ok) {
            done = true;
            break;
        }
        std::size_t added = 0;
        if (worst_j >= 0 && worst < -0.25 * in_tol) {
            // insert the deepest violators (up to 4 local minima of v)
            std::vector<std::pair<double, std::size_t>> cands;
            for (std::size_t j = 1; j + 1 < n; ++j) {
                if (di.v[j] < -0.25 * in_tol && di.v[j] <= di.v[j - 1] &&
                    di.v[j] <= di.v[j + 1] &&
                    !std::binary_search(as.idx.begin(), as.idx.end(), j))
                    cands.emplace_back(di.v[j], j);
            }
            std::sort(cands.begin(), cands.end());
            if (cands.empty()) cands.emplace_back(worst, static_cast<std::size_t>(worst_j));
            for (const auto& [val, j] : cands) {
                (void)val;
                if (added >= 4) break;
                auto pos = std::lower_bound(as.idx.begin(), as.idx.end(), j);
                if (pos != as.idx.end() && *pos == j) continue;
                std::size_t jj = static_cast<std::size_t>(pos - as.idx.begin());
                // value on the current chord keeps the function unchanged
                double t0 = x[as.idx[jj - 1]], t1 = x[as.idx[jj]];
                double yv = as.y[jj - 1] +
                            (as.y[jj] - as.y[jj - 1]) * (x[j] - t0) / (t1 - t0);
                as.idx.insert(pos, j);
                as.y.insert(as.y.begin() + static_cast<std::ptrdiff_t>(jj), yv);
                ++added;
            }
            detail::rebuild_aggregates(as, x, w);
            detail::linear_coeffs(as, x, w, c);
            cur = detail::objective(c, as, x);
        }
        if (added == 0) {
            // nothing left to add and the discrete check still fails:
            // the iterate is at the rounding floor, so hand the decision
            // to the exact certificate below instead of spinning
            if (++stalls >= 3) break;
        } else {
            stalls = 0;
        }
    }
    if (trace) {
        trace->outer_cycles = outer;
        trace->final_knots = as.idx.size();
    }

    std::vector<double> kx(as.idx.size());
    for (std::size_t j = 0; j < as.idx.size(); ++j) kx[j] = x[as.idx[j]];
    LogConcaveDensity psi = LogConcaveDensity::raw(kx, as.y).normalize();
    Certificate cert = certify(psi, q, opts.certificate_tol);
    if (!cert.passed) {
        if (!done) throw NoConvergence("active-set iteration limit reached");
        throw NoConvergence("solution failed its optimality certificate: total " +
                            std::to_string(cert.total_integral) + ", max prefix " +
                            std::to_string(cert.max_prefix) + ", knot eq " +
                            std::to_string(cert.max_knot_abs));
    }
    return psi;
}

inline double profile_loglik(const EmpiricalDistribution& q, const FitOptions& opts = {}) {
    return loglik(fit(q, opts), q);
}

// -log(2 E|X - Med|): an upper bound for the profile log-likelihood,
// attained by a symmetric two-point distribution.
inline double loglik_upper_bound(const EmpiricalDistribution& q) {
    if (!q.is_nondegenerate())
        throw DegenerateSupport("bound needs at least two distinct atoms");
    return -std::log(2.0 * q.mean_abs_dev(q.median()));
}

// Convex test functions with exact integrals against the fitted density.
struct ConvexTest {
    enum class Kind { One, X, NegX, XSquared, AbsDev, ClippedExp } kind;
    double c = 0.0;
};

inline std::vector<ConvexTest> default_convex_tests(const EmpiricalDistribution& q) {
    std::vector<ConvexTest> ts = {{ConvexTest::Kind::One, 0.0},
                                  {ConvexTest::Kind::X, 0.0},
                                  {ConvexTest::Kind::NegX, 0.0},
                                  {ConvexTest::Kind::XSquared, 0.0}};
    double last = std::numeric_limits<double>::quiet_NaN();
    for (double u : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        double cq = q.quantile(u);
        if (cq != last) ts.push_back({ConvexTest::Kind::AbsDev, cq});
        last = cq;
    }
    double cap = std::min(q.max(), q.median() + 3.0 * q.mean_abs_dev(q.median()));
    ts.push_back({ConvexTest::Kind::ClippedExp, cap});
    return ts;
}

namespace detail {

// int h(x) f(x) dx for h(x) = e^x below c continued linearly above
// (tangent at c), exact per exponential segment.
inline double clipped_exp_integral(const LogConcaveDensity& d, double c) {
    double total = 0.0;
    const auto& k = d.knots();
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        double lo = k[i], hi = k[i + 1];
        auto expo_part = [&](double p, double q2) {
            if (!(q2 > p)) return 0.0;
            double u0 = d.eval_log(p) + p, u1 = d.eval_log(q2) + q2;
            return numeric::seg_mass(u0, u1, q2 - p);
        };
        auto lin_part = [&](double p, double q2) {
            if (!(q2 > p)) return 0.0;
            double a = d.eval_log(p), b = d.eval_log(q2);
            double L = q2 - p;
            double m0 = numeric::seg_mass(a, b, L);
            double m1 = p * m0 + numeric::seg_first(a, b, L);
            return std::exp(c) * ((1.0 - c) * m0 + m1);
        };
        if (hi <= c) {
            total += expo_part(lo, hi);
        } else if (lo >= c) {
            total += lin_part(lo, hi);
        } else {
            total += expo_part(lo, c) + lin_part(c, hi);
        }
    }
    return total;
}

}  // namespace detail

// Largest value of int h dPsi - int h dQ over the test set; convex
// ordering of the projection under Q requires this to be <= 0 up to
// numerical tolerance for every convex h.
inline double convex_order_check(const LogConcaveDensity& psi, const EmpiricalDistribution& q,
                                 const std::vector<ConvexTest>& tests) {
    if (!psi.is_normalized()) throw NotNormalized("convex order check needs normalized density");
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& t : tests) {
        double ip = 0.0, iq = 0.0;
        switch (t.kind) {
            case ConvexTest::Kind::One:
                ip = psi.integrate_exp();
                iq = 1.0;
                break;
            case ConvexTest::Kind::X:
                ip = psi.mean();
                iq = q.mean();
                break;
            case ConvexTest::Kind::NegX:
                ip = -psi.mean();
                iq = -q.mean();
                break;
            case ConvexTest::Kind::XSquared:
                ip = psi.second_moment();
                for (std::size_t i = 0; i < q.size(); ++i)
                    iq += q.weights()[i] * q.atoms()[i] * q.atoms()[i];
                break;
            case ConvexTest::Kind::AbsDev:
                ip = psi.abs_moment(t.c);
                iq = q.mean_abs_dev(t.c);
                break;
            case ConvexTest::Kind::ClippedExp: {
                ip = detail::clipped_exp_integral(psi, t.c);
                for (std::size_t i = 0; i < q.size(); ++i) {
                    double xi = q.atoms()[i];
                    double h = xi <= t.c ? std::exp(xi)
                                         : std::exp(t.c) * (1.0 + xi - t.c);
                    iq += q.weights()[i] * h;
                }
                break;
            }
        }
        worst = std::max(worst, ip - iq);
    }
    return worst;
}

}  // namespace logcave
