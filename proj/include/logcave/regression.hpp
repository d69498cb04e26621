#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "logcave/density.hpp"
#include "logcave/empirical.hpp"
#include "logcave/errors.hpp"
#include "logcave/isotonic.hpp"
#include "logcave/projection.hpp"
#include "logcave/rng.hpp"

namespace logcave {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Design matrix: first column is the intercept (all ones).

class DesignMatrix {
public:
    explicit DesignMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
        if (m_.rows() == 0 || m_.cols() == 0)
            throw BadDesign("design matrix is empty");
        for (Eigen::Index i = 0; i < m_.rows(); ++i) {
            for (Eigen::Index j = 0; j < m_.cols(); ++j) {
                if (!std::isfinite(m_(i, j)))
                    throw BadDesign("non-finite design entry at row " +
                                    std::to_string(i));
            }
            if (m_(i, 0) != 1.0)
                throw BadDesign("first design column must be all ones (row " +
                                std::to_string(i) + ")");
        }
        underdetermined_ = m_.rows() <= m_.cols();
    }

    // Intercept plus one covariate column.
    static DesignMatrix simple(const std::vector<double>& x) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(x.size()), 2);
        for (std::size_t i = 0; i < x.size(); ++i) {
            m(static_cast<Eigen::Index>(i), 0) = 1.0;
            m(static_cast<Eigen::Index>(i), 1) = x[i];
        }
        return DesignMatrix(std::move(m));
    }

    // Rows of covariates; the intercept column is prepended.
    static DesignMatrix with_intercept(
        const std::vector<std::vector<double>>& covariate_rows) {
        if (covariate_rows.empty()) throw BadDesign("no rows");
        std::size_t q = covariate_rows.front().size();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(covariate_rows.size()),
                          static_cast<Eigen::Index>(q + 1));
        for (std::size_t i = 0; i < covariate_rows.size(); ++i) {
            if (covariate_rows[i].size() != q)
                throw BadDesign("ragged covariate rows");
            m(static_cast<Eigen::Index>(i), 0) = 1.0;
            for (std::size_t j = 0; j < q; ++j)
                m(static_cast<Eigen::Index>(i),
                  static_cast<Eigen::Index>(j + 1)) = covariate_rows[i][j];
        }
        return DesignMatrix(std::move(m));
    }

    const Eigen::MatrixXd& matrix() const { return m_; }
    std::size_t rows() const { return static_cast<std::size_t>(m_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(m_.cols()); }
    // More parameters than observations: the fit is still computed but the
    // caller should surface a warning.
    bool underdetermined() const { return underdetermined_; }

private:
    Eigen::MatrixXd m_;
    bool underdetermined_ = false;
};

// ---------------------------------------------------------------------------
// Regression specification: linear-in-basis or isotonic in a scalar covariate.

struct LinearBasis {
    DesignMatrix design;
};

struct Isotonic {
    std::vector<double> x_sorted;       // ascending
    std::vector<std::size_t> order;     // x_sorted[k] == x_input[order[k]]

    static Isotonic from_x(const std::vector<double>& x) {
        if (x.empty()) throw EmptyInput("isotonic spec: empty x");
        for (double v : x)
            if (!std::isfinite(v)) throw NonFiniteValue("isotonic spec: x");
        Isotonic spec;
        spec.order.resize(x.size());
        std::iota(spec.order.begin(), spec.order.end(), std::size_t{0});
        std::stable_sort(spec.order.begin(), spec.order.end(),
                         [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
        spec.x_sorted.resize(x.size());
        for (std::size_t k = 0; k < x.size(); ++k)
            spec.x_sorted[k] = x[spec.order[k]];
        return spec;
    }
};

using RegressionSpec = std::variant<LinearBasis, Isotonic>;

// ---------------------------------------------------------------------------
// Results and options

struct TraceEntry {
    std::string stage;
    double lambda;
};

struct RegressionFit {
    LogConcaveDensity psi;            // normalized error density, mean ~ 0
    std::vector<double> mu_values;    // fitted means, input order
    std::vector<double> theta;        // coefficients (linear model only)
    double lambda_hat;                // joint log-likelihood at (psi, mu)
    EmpiricalDistribution residuals;  // centered residuals
    std::vector<TraceEntry> solver_trace;

    RegressionFit(LogConcaveDensity psi_, std::vector<double> mu,
                  std::vector<double> th, double lambda,
                  EmpiricalDistribution res, std::vector<TraceEntry> trace)
        : psi(std::move(psi_)),
          mu_values(std::move(mu)),
          theta(std::move(th)),
          lambda_hat(lambda),
          residuals(std::move(res)),
          solver_trace(std::move(trace)) {}
};

struct DEOptions {
    std::size_t population = 0;   // 0 = 15 * dimension
    double crossover = 0.9;       // in (0, 1]
    double diff_weight = 0.8;     // in (0, 2]
    std::size_t generations = 300;
    std::uint64_t seed = 0;
};

struct AlternatingOptions {
    FitOptions inner;             // projection solver settings
    std::size_t max_rounds = 100;
    double gain_tol = 1e-8;
};

// ---------------------------------------------------------------------------
// Joint log-likelihood: mean of phi at the residuals minus the normalization
// penalty.  -inf as soon as one residual leaves the support of phi.

inline double joint_loglik(const LogConcaveDensity& phi,
                           const std::vector<double>& mu_values,
                           const std::vector<double>& y) {
    if (mu_values.size() != y.size())
        throw LengthMismatch("joint_loglik: mu/y length mismatch");
    if (y.empty()) throw EmptyInput("joint_loglik: no observations");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double v = phi.eval_log(y[i] - mu_values[i]);
        if (v == kNegInf) return kNegInf;
        s += v;
    }
    return s / static_cast<double>(y.size()) - phi.integrate_exp() + 1.0;
}

// Shift (phi, mu) by the mean residual so the error density has mean zero.
// The joint log-likelihood is invariant under this reparameterization.
struct Centered {
    LogConcaveDensity psi;
    std::vector<double> mu_values;
    double c;
};

inline Centered center(const LogConcaveDensity& phi_hat,
                       std::vector<double> mu_values,
                       const std::vector<double>& y) {
    if (mu_values.size() != y.size())
        throw LengthMismatch("center: mu/y length mismatch");
    double c = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) c += y[i] - mu_values[i];
    c /= static_cast<double>(y.size());
    for (double& m : mu_values) m += c;
    return Centered{phi_hat.affine_transform(-c, 1.0), std::move(mu_values), c};
}

// ---------------------------------------------------------------------------
// Perfect-fit detection: the joint likelihood is unbounded when some mean
// function interpolates the data exactly.

inline bool check_perfect_fit(const RegressionSpec& spec,
                              const std::vector<double>& y) {
    if (std::holds_alternative<LinearBasis>(spec)) {
        const Eigen::MatrixXd& X = std::get<LinearBasis>(spec).design.matrix();
        if (static_cast<std::size_t>(X.rows()) != y.size())
            throw LengthMismatch("check_perfect_fit: design rows != y size");
        Eigen::VectorXd yv(X.rows());
        for (Eigen::Index i = 0; i < X.rows(); ++i) yv(i) = y[i];
        Eigen::VectorXd theta = X.colPivHouseholderQr().solve(yv);
        double rnorm = (yv - X * theta).norm();
        double ynorm = yv.norm();
        return ynorm == 0.0 || rnorm < 1e-10 * ynorm;
    }
    const Isotonic& iso = std::get<Isotonic>(spec);
    if (iso.x_sorted.size() != y.size())
        throw LengthMismatch("check_perfect_fit: x size != y size");
    // A nondecreasing interpolant exists iff no pair x_i <= x_j has
    // Y_i > Y_j.  Sorting by (x asc, y desc) surfaces any such pair,
    // including pairs with tied x, as an adjacent strict decrease.
    std::vector<std::size_t> idx(y.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (iso.x_sorted[a] != iso.x_sorted[b])
            return iso.x_sorted[a] < iso.x_sorted[b];
        return y[iso.order[a]] > y[iso.order[b]];
    });
    for (std::size_t k = 1; k < idx.size(); ++k) {
        if (y[iso.order[idx[k - 1]]] > y[iso.order[idx[k]]]) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Internals

namespace detail {

inline EmpiricalDistribution residual_distribution(
    const std::vector<double>& y, const std::vector<double>& mu) {
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - mu[i];
    return EmpiricalDistribution::from_samples(r);
}

// Right derivative of the log-density (last segment's slope reused at the
// upper endpoint; the search direction only needs a valid subgradient).
inline double slope_right(const LogConcaveDensity& phi, double t) {
    const std::vector<double>& k = phi.knots();
    if (t >= k.back()) return phi.slope(k.size() - 2);
    auto it = std::upper_bound(k.begin(), k.end(), t);
    std::size_t seg = static_cast<std::size_t>(it - k.begin());
    if (seg == 0) return phi.slope(0);
    return phi.slope(seg - 1);
}

// Largest t >= 0 keeping r - t*u inside [lo, hi] coordinate-wise.
inline double max_feasible_step(const std::vector<double>& r,
                                const std::vector<double>& u, double lo,
                                double hi) {
    double t_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (u[i] > 0.0)
            t_max = std::min(t_max, (r[i] - lo) / u[i]);
        else if (u[i] < 0.0)
            t_max = std::min(t_max, (r[i] - hi) / u[i]);
    }
    return std::max(t_max, 0.0);
}

// Mean of phi over the residuals r - t*u; -inf outside the support, which
// the feasible bracket rules out for t in [0, t_max].
inline double slice_value(const LogConcaveDensity& phi,
                          const std::vector<double>& r,
                          const std::vector<double>& u, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double v = phi.eval_log(r[i] - t * u[i]);
        if (v == kNegInf) return kNegInf;
        s += v;
    }
    return s / static_cast<double>(r.size());
}

// One m-step for the linear model: gradient ascent on the concave map
// theta -> mean phi(y - X theta), each line search solved exactly on the
// feasible part of the ray (the slice is concave in t).
inline void m_step_linear(const Eigen::MatrixXd& X, Eigen::VectorXd& theta,
                          const std::vector<double>& y,
                          const LogConcaveDensity& phi) {
    const double lo = phi.knots().front();
    const double hi = phi.knots().back();
    const std::size_t n = y.size();
    const std::size_t dim = static_cast<std::size_t>(X.cols());
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = y[i] - X.row(static_cast<Eigen::Index>(i)).dot(theta);

    std::vector<double> u(n);
    for (int iter = 0; iter < 30; ++iter) {
        // d/dtheta of mean phi(y - X theta) = -(1/n) sum phi'(r_i) x_i
        Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < n; ++i) {
            double sl = slope_right(phi, r[i]);
            g -= sl * X.row(static_cast<Eigen::Index>(i)).transpose();
        }
        g /= static_cast<double>(n);
        if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;

        Eigen::VectorXd uv = X * g;
        for (std::size_t i = 0; i < n; ++i)
            u[i] = uv(static_cast<Eigen::Index>(i));
        double t_max = max_feasible_step(r, u, lo, hi);
        if (!(t_max > 0.0)) break;
        // Cap ludicrous brackets so golden section keeps resolution.
        double gn = g.norm();
        double t_cap = std::min(t_max, 100.0 * (1.0 + theta.norm()) / (gn + 1e-300));

        double before = slice_value(phi, r, u, 0.0);
        double t_star = golden_max(
            [&](double t) { return slice_value(phi, r, u, t); }, 0.0, t_cap,
            1e-11 * (1.0 + t_cap));
        double after = slice_value(phi, r, u, t_star);
        if (!(after > before + 1e-13 * (1.0 + std::abs(before)))) break;
        theta += t_star * g;
        for (std::size_t i = 0; i < n; ++i) r[i] -= t_star * u[i];
    }
}

// One m-step for the isotonic model: pool-adjacent-violators on the
// linearly-extended log-density (finite everywhere, so every block solve is
// well posed), then an exact concave line search from the current feasible
// point toward the pooled target.
inline void m_step_isotonic(std::vector<double>& m,
                            const std::vector<double>& ys,
                            const LogConcaveDensity& phi) {
    const double lo = phi.knots().front();
    const double hi = phi.knots().back();
    const double phi_lo = phi.eval_log(lo);
    const double phi_hi = phi.eval_log(hi);
    const double kappa_lo = 10.0 * (1.0 + std::abs(phi.slope(0)));
    const double kappa_hi =
        10.0 * (1.0 + std::abs(phi.slope(phi.knots().size() - 2)));
    auto ext = [&](double t) {
        if (t < lo) return phi_lo + kappa_lo * (t - lo);
        if (t > hi) return phi_hi - kappa_hi * (t - hi);
        return phi.eval_log(t);
    };

    const std::size_t n = ys.size();
    auto target = isotonic_pool(n, [&](std::size_t i0, std::size_t i1) {
        double ymin = ys[i0], ymax = ys[i0];
        for (std::size_t i = i0 + 1; i <= i1; ++i) {
            ymin = std::min(ymin, ys[i]);
            ymax = std::max(ymax, ys[i]);
        }
        // The block objective rises left of ymin-hi and falls right of
        // ymax-lo thanks to the steep extensions, so this bracket always
        // contains a maximizer.
        return golden_max(
            [&](double v) {
                double s = 0.0;
                for (std::size_t i = i0; i <= i1; ++i) s += ext(ys[i] - v);
                return s;
            },
            ymin - hi, ymax - lo);
    });

    std::vector<double> r(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = ys[i] - m[i];
        u[i] = target[i] - m[i];
    }
    double t_max = std::min(1.0, max_feasible_step(r, u, lo, hi));
    if (!(t_max > 0.0)) return;
    double before = slice_value(phi, r, u, 0.0);
    double t_star =
        golden_max([&](double t) { return slice_value(phi, r, u, t); }, 0.0,
                   t_max, 1e-12);
    if (slice_value(phi, r, u, t_star) <= before) return;
    for (std::size_t i = 0; i < n; ++i) m[i] += t_star * u[i];
    // The pooled target and the previous iterate are both nondecreasing, so
    // the convex combination is too; tidy roundoff just in case.
    for (std::size_t i = 1; i < n; ++i) m[i] = std::max(m[i], m[i - 1]);
}

// Alternating solver core over generic state: fits phi to the current
// residuals, records the profile value, and calls step() to improve the mean.
template <class MStep, class MuOf>
double alternate(const std::vector<double>& y, MuOf&& mu_of, MStep&& step,
                 const AlternatingOptions& opts, const char* label,
                 std::vector<TraceEntry>* trace) {
    double lam_prev = kNegInf;
    for (std::size_t round = 0; round < opts.max_rounds; ++round) {
        auto q = residual_distribution(y, mu_of());
        double lam = profile_loglik(q, opts.inner);
        if (trace) trace->push_back({label, lam});
        if (round > 0 && lam - lam_prev < opts.gain_tol) return lam;
        lam_prev = lam;
        auto phi = fit(q, opts.inner);
        step(phi);
    }
    return lam_prev;
}

// Build the final RegressionFit from a mean vector.  The mean shift is
// applied first and psi is the projection of the already-centered residuals:
// this keeps the support of psi exactly on the reported residual range
// (an affine transport of the uncentered fit can lose a boundary residual
// to one ulp of rounding and send the likelihood to -inf).
inline RegressionFit finalize_fit(std::vector<double> mu,
                                  std::vector<double> theta,
                                  const std::vector<double>& y,
                                  const FitOptions& inner,
                                  std::vector<TraceEntry> trace) {
    double c = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) c += y[i] - mu[i];
    c /= static_cast<double>(y.size());
    for (double& m : mu) m += c;
    if (!theta.empty()) theta[0] += c;  // intercept absorbs the shift
    std::vector<double> centered_res(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        centered_res[i] = y[i] - mu[i];
    auto res_dist = EmpiricalDistribution::from_samples(centered_res);
    auto psi = fit(res_dist, inner);
    double lambda = joint_loglik(psi, mu, y);
    trace.push_back({"final", lambda});
    return RegressionFit(std::move(psi), std::move(mu), std::move(theta),
                         lambda, std::move(res_dist), std::move(trace));
}

// Profile joint log-likelihood at a coefficient vector.
inline double profile_lambda(const Eigen::MatrixXd& X,
                             const std::vector<double>& y,
                             const Eigen::VectorXd& theta,
                             const FitOptions& inner) {
    std::vector<double> mu(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        mu[i] = X.row(static_cast<Eigen::Index>(i)).dot(theta);
    return profile_loglik(residual_distribution(y, mu), inner);
}

struct LeastSquares {
    Eigen::VectorXd theta;
    Eigen::VectorXd se;  // per-coefficient standard errors (floored)
};

inline LeastSquares least_squares(const Eigen::MatrixXd& X,
                                  const std::vector<double>& y) {
    Eigen::VectorXd yv(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) yv(i) = y[i];
    LeastSquares out;
    out.theta = X.colPivHouseholderQr().solve(yv);
    double rss = (yv - X * out.theta).squaredNorm();
    double dof = static_cast<double>(X.rows() - X.cols());
    double sigma2 = dof > 0.0 ? rss / dof : rss / static_cast<double>(X.rows());
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    out.se.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double var = 0.0;
        if (ldlt.info() == Eigen::Success) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(X.cols());
            e(j) = 1.0;
            var = sigma2 * ldlt.solve(e)(j);
        }
        double floor = 1e-6 * (1.0 + std::abs(out.theta(j)));
        out.se(j) = std::isfinite(var) && var > 0.0
                        ? std::max(std::sqrt(var), floor)
                        : floor;
    }
    return out;
}

// Differential evolution (rand/1/bin) maximizing eval over a box.  The
// initial population contains `seed_point`; everything is driven by one
// seeded generator, so results are bit-reproducible.
template <class Eval>
Eigen::VectorXd de_maximize(Eval&& eval, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi,
                            const Eigen::VectorXd& seed_point,
                            const DEOptions& de,
                            std::vector<TraceEntry>* trace) {
    if (!(de.crossover > 0.0) || de.crossover > 1.0)
        throw OutOfRange("DEOptions.crossover must lie in (0,1]");
    if (!(de.diff_weight > 0.0) || de.diff_weight > 2.0)
        throw OutOfRange("DEOptions.diff_weight must lie in (0,2]");
    if (de.generations == 0) throw OutOfRange("DEOptions.generations == 0");
    const std::size_t dim = static_cast<std::size_t>(lo.size());
    std::size_t pop_size = de.population == 0 ? 15 * dim : de.population;
    pop_size = std::max<std::size_t>(pop_size, 4);

    Rng rng(de.seed);
    auto rand_index = [&](std::size_t bound) {
        auto k = static_cast<std::size_t>(rng.uniform() *
                                          static_cast<double>(bound));
        return std::min(k, bound - 1);
    };
    auto clip = [&](Eigen::VectorXd v) {
        for (Eigen::Index j = 0; j < v.size(); ++j)
            v(j) = std::clamp(v(j), lo(j), hi(j));
        return v;
    };

    std::vector<Eigen::VectorXd> pop(pop_size);
    std::vector<double> vals(pop_size);
    pop[0] = clip(seed_point);
    vals[0] = eval(pop[0]);
    for (std::size_t i = 1; i < pop_size; ++i) {
        Eigen::VectorXd v(lo.size());
        for (Eigen::Index j = 0; j < v.size(); ++j)
            v(j) = lo(j) + rng.uniform() * (hi(j) - lo(j));
        pop[i] = std::move(v);
        vals[i] = eval(pop[i]);
    }

    for (std::size_t gen = 0; gen < de.generations; ++gen) {
        for (std::size_t i = 0; i < pop_size; ++i) {
            std::size_t r1, r2, r3;
            do r1 = rand_index(pop_size); while (r1 == i);
            do r2 = rand_index(pop_size); while (r2 == i || r2 == r1);
            do r3 = rand_index(pop_size); while (r3 == i || r3 == r1 || r3 == r2);
            Eigen::VectorXd mutant =
                clip(pop[r1] + de.diff_weight * (pop[r2] - pop[r3]));
            Eigen::VectorXd trial = pop[i];
            std::size_t jrand = rand_index(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                if (rng.uniform() < de.crossover || j == jrand)
                    trial(static_cast<Eigen::Index>(j)) =
                        mutant(static_cast<Eigen::Index>(j));
            }
            double tv = eval(trial);
            if (tv >= vals[i]) {
                pop[i] = std::move(trial);
                vals[i] = tv;
            }
        }
        if (trace && (gen + 1) % 50 == 0) {
            double best = *std::max_element(vals.begin(), vals.end());
            trace->push_back({"de generation " + std::to_string(gen + 1), best});
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop_size; ++i)
        if (vals[i] > vals[best]) best = i;
    if (trace) trace->push_back({"de best", vals[best]});
    return pop[best];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Alternating maximization: phi-step (projection of current residuals) and
// m-step (concave ascent over the mean family) until the profile value stops
// improving.

inline RegressionFit fit_alternating(const RegressionSpec& spec,
                                     const std::vector<double>& y,
                                     const AlternatingOptions& opts = {}) {
    if (check_perfect_fit(spec, y))
        throw PerfectFit("mean family interpolates the data exactly");
    std::vector<TraceEntry> trace;

    if (std::holds_alternative<LinearBasis>(spec)) {
        const Eigen::MatrixXd& X = std::get<LinearBasis>(spec).design.matrix();
        detail::LeastSquares ls = detail::least_squares(X, y);
        Eigen::VectorXd theta = ls.theta;
        auto mu_of = [&]() {
            std::vector<double> mu(y.size());
            for (std::size_t i = 0; i < y.size(); ++i)
                mu[i] = X.row(static_cast<Eigen::Index>(i)).dot(theta);
            return mu;
        };
        detail::alternate(
            y, mu_of,
            [&](const LogConcaveDensity& phi) {
                detail::m_step_linear(X, theta, y, phi);
            },
            opts, "alternating round", &trace);
        std::vector<double> th(theta.data(), theta.data() + theta.size());
        return detail::finalize_fit(mu_of(), std::move(th), y, opts.inner,
                                    std::move(trace));
    }

    const Isotonic& iso = std::get<Isotonic>(spec);
    std::vector<double> ys(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) ys[k] = y[iso.order[k]];
    std::vector<double> m = isotonic_l2(ys);
    detail::alternate(
        ys, [&]() { return m; },
        [&](const LogConcaveDensity& phi) {
            detail::m_step_isotonic(m, ys, phi);
        },
        opts, "alternating round", &trace);
    std::vector<double> mu(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) mu[iso.order[k]] = m[k];
    // finalize_fit centers by a constant, which preserves monotonicity.
    return detail::finalize_fit(std::move(mu), {}, y, opts.inner,
                                std::move(trace));
}

// ---------------------------------------------------------------------------
// Global linear fit: differential evolution over the profile likelihood on a
// data-driven box (least squares +- 10 standard errors), cross-checked
// against the alternating solver started from least squares.  When the two
// disagree beyond 1e-4 in profile value both are recorded; the better one is
// returned.

inline RegressionFit fit_linear(const DesignMatrix& design,
                                const std::vector<double>& y,
                                const DEOptions& de = {},
                                const FitOptions& inner = {}) {
    if (design.rows() != y.size())
        throw LengthMismatch("fit_linear: design rows != y size");
    RegressionSpec spec{LinearBasis{design}};
    if (check_perfect_fit(spec, y))
        throw PerfectFit("response lies in the design column space");

    const Eigen::MatrixXd& X = design.matrix();
    detail::LeastSquares ls = detail::least_squares(X, y);
    Eigen::VectorXd lo = ls.theta - 10.0 * ls.se;
    Eigen::VectorXd hi = ls.theta + 10.0 * ls.se;

    std::vector<TraceEntry> trace;
    Eigen::VectorXd theta_de = detail::de_maximize(
        [&](const Eigen::VectorXd& th) {
            return detail::profile_lambda(X, y, th, inner);
        },
        lo, hi, ls.theta, de, &trace);
    double lam_de = detail::profile_lambda(X, y, theta_de, inner);

    AlternatingOptions alt_opts;
    alt_opts.inner = inner;
    Eigen::VectorXd theta_alt = ls.theta;
    {
        auto mu_of = [&]() {
            std::vector<double> mu(y.size());
            for (std::size_t i = 0; i < y.size(); ++i)
                mu[i] = X.row(static_cast<Eigen::Index>(i)).dot(theta_alt);
            return mu;
        };
        detail::alternate(
            y, mu_of,
            [&](const LogConcaveDensity& phi) {
                detail::m_step_linear(X, theta_alt, y, phi);
            },
            alt_opts, "alternating round", &trace);
    }
    double lam_alt = detail::profile_lambda(X, y, theta_alt, inner);

    Eigen::VectorXd chosen;
    if (lam_de >= lam_alt) {
        chosen = theta_de;
        if (lam_de - lam_alt > 1e-4)
            trace.push_back({"alternate (alternating solver)", lam_alt});
    } else {
        chosen = theta_alt;
        if (lam_alt - lam_de > 1e-4)
            trace.push_back({"alternate (differential evolution)", lam_de});
    }

    std::vector<double> mu(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        mu[i] = X.row(static_cast<Eigen::Index>(i)).dot(chosen);
    std::vector<double> th(chosen.data(), chosen.data() + chosen.size());
    return detail::finalize_fit(std::move(mu), std::move(th), y, inner,
                                std::move(trace));
}

// Convenience wrapper: isotonic regression in a scalar covariate.
inline RegressionFit fit_isotonic(const std::vector<double>& x,
                                  const std::vector<double>& y,
                                  const AlternatingOptions& opts = {}) {
    if (x.size() != y.size())
        throw LengthMismatch("fit_isotonic: x size != y size");
    return fit_alternating(RegressionSpec{Isotonic::from_x(x)}, y, opts);
}

// ---------------------------------------------------------------------------
// Quantile curves: fitted mean plus the beta-quantile of the error density.

inline std::vector<double> quantile_curve(const RegressionFit& fit,
                                          double beta) {
    if (!(beta > 0.0) || !(beta < 1.0))
        throw OutOfRange("quantile_curve: beta must lie in (0,1)");
    double offset = fit.psi.quantile(beta);
    std::vector<double> curve(fit.mu_values);
    for (double& v : curve) v += offset;
    return curve;
}

// Monotone minimizer of the check loss (classical isotonic quantile
// regression), used as a comparison baseline for the model-based curves.
// Returned in input order.
inline std::vector<double> isotonic_quantile_baseline(
    const std::vector<double>& x, const std::vector<double>& y, double beta) {
    if (x.size() != y.size())
        throw LengthMismatch("isotonic_quantile_baseline: x size != y size");
    Isotonic spec = Isotonic::from_x(x);
    std::vector<double> ys(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) ys[k] = y[spec.order[k]];
    std::vector<double> fitted = isotonic_quantile(ys, beta);
    std::vector<double> out(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) out[spec.order[k]] = fitted[k];
    return out;
}

// ---------------------------------------------------------------------------
// Convolution gap: the profile value can only drop when independent noise is
// added, with equality exactly in the degenerate (Dirac) case.

inline double fisher_consistency_gap(const EmpiricalDistribution& q,
                                     const EmpiricalDistribution& r,
                                     const FitOptions& opts = {}) {
    return profile_loglik(q.convolve(r), opts) - profile_loglik(q, opts);
}

}  // namespace logcave
