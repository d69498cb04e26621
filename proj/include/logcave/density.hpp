#pragma once

// Piecewise-linear concave log-density on a finite knot grid.  The
// density itself is piecewise exponential, so masses, distribution
// function, quantiles and low moments all have closed forms; everything
// below is exact up to roundoff, no quadrature.  Integrals are carried
// in units of exp(logval - max logval) so arbitrarily scaled raw inputs
// cannot overflow.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "logcave/errors.hpp"
#include "logcave/numeric.hpp"
#include "logcave/rng.hpp"

namespace logcave {

struct KnotSet {
    std::vector<double> points;
};

class LogConcaveDensity {
public:
    static constexpr double kConcavitySlack = 1e-9;
    static constexpr double kMassTol = 1e-8;

    static LogConcaveDensity raw(std::vector<double> knots, std::vector<double> logvals) {
        return LogConcaveDensity(std::move(knots), std::move(logvals), false);
    }

    // Verifies total mass is 1 within kMassTol.
    static LogConcaveDensity normalized(std::vector<double> knots, std::vector<double> logvals) {
        return LogConcaveDensity(std::move(knots), std::move(logvals), true);
    }

    bool is_normalized() const { return normalized_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& logvals() const { return logvals_; }
    std::size_t num_knots() const { return knots_.size(); }
    double support_lo() const { return knots_.front(); }
    double support_hi() const { return knots_.back(); }
    double slope(std::size_t seg) const { return slopes_[seg]; }

    // Log-density; -inf outside [support_lo, support_hi].
    double eval_log(double x) const {
        if (x < knots_.front() || x > knots_.back())
            return -std::numeric_limits<double>::infinity();
        std::size_t i = segment_of(x);
        return logvals_[i] + slopes_[i] * (x - knots_[i]);
    }

    double integrate_exp() const { return std::exp(log_mass_); }
    double log_integrate_exp() const { return log_mass_; }

    LogConcaveDensity normalize() const {
        if (!std::isfinite(log_mass_)) throw NonFiniteMass("log mass not finite");
        std::vector<double> lv = logvals_;
        for (double& v : lv) v -= log_mass_;
        return LogConcaveDensity(knots_, std::move(lv), true);
    }

    double cdf(double x) const {
        require_normalized();
        if (x <= knots_.front()) return 0.0;
        if (x >= knots_.back()) return 1.0;
        std::size_t i = segment_of(x);
        double tau = x - knots_[i];
        double a = logvals_[i] - off_;
        double p = cum_sh_[i] + numeric::seg_mass(a, a + slopes_[i] * tau, tau);
        return std::min(p / msh_, 1.0);
    }

    // Inverse distribution function, defined on the open interval (0,1).
    double quantile(double u) const {
        require_normalized();
        if (!(u > 0.0 && u < 1.0)) throw OutOfRange("quantile level must be in (0,1)");
        double t = u * msh_;
        auto it = std::lower_bound(cum_sh_.begin(), cum_sh_.end(), t);
        std::size_t j = static_cast<std::size_t>(it - cum_sh_.begin());
        if (j == 0) return knots_.front();
        if (j >= knots_.size()) j = knots_.size() - 1;
        std::size_t i = j - 1;
        double target = t - cum_sh_[i];
        double L = knots_[i + 1] - knots_[i];
        double a = logvals_[i] - off_;
        double s = slopes_[i];
        double tau;
        if (std::abs(s) < 1e-300) {
            tau = target * std::exp(-a);
        } else {
            double w = s * std::exp(std::log(target) - a);
            if (w <= -1.0) w = -1.0 + 1e-16;
            tau = std::log1p(w) / s;
        }
        if (!std::isfinite(tau)) tau = 0.5 * L;
        tau = std::clamp(tau, 0.0, L);
        return knots_[i] + tau;
    }

    std::vector<double> sample(std::uint64_t seed, std::size_t n) const {
        require_normalized();
        Rng rng(seed);
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = quantile(rng.uniform_open());
        return out;
    }

    double mean() const {
        require_normalized();
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
            double L = knots_[i + 1] - knots_[i];
            double a = logvals_[i] - off_, b = logvals_[i + 1] - off_;
            s += knots_[i] * numeric::seg_mass(a, b, L) + numeric::seg_first(a, b, L);
        }
        return s / msh_;
    }

    double second_moment() const {
        require_normalized();
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
            double L = knots_[i + 1] - knots_[i];
            double a = logvals_[i] - off_, b = logvals_[i + 1] - off_;
            double k = knots_[i];
            s += k * k * numeric::seg_mass(a, b, L) + 2.0 * k * numeric::seg_first(a, b, L) +
                 numeric::seg_second(a, b, L);
        }
        return s / msh_;
    }

    // int |x - c| f(x) dx, exact (segments split at c).
    double abs_moment(double c) const {
        require_normalized();
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
            double lo = knots_[i], hi = knots_[i + 1];
            if (c <= lo) {
                s += signed_piece(i, lo, hi, c);
            } else if (c >= hi) {
                s -= signed_piece(i, lo, hi, c);
            } else {
                s -= signed_piece(i, lo, c, c);
                s += signed_piece(i, c, hi, c);
            }
        }
        return s / msh_;
    }

    KnotSet knot_set(double strictness_tol = 1e-7) const {
        if (!(strictness_tol >= 0.0)) throw OutOfRange("strictness_tol must be >= 0");
        KnotSet ks;
        ks.points.push_back(knots_.front());
        for (std::size_t i = 1; i + 1 < knots_.size(); ++i)
            if (slopes_[i - 1] - slopes_[i] > strictness_tol) ks.points.push_back(knots_[i]);
        ks.points.push_back(knots_.back());
        return ks;
    }

    // Pushforward under x -> a + b x; log-likelihood shifts by -log|b|.
    LogConcaveDensity affine_transform(double a, double b) const {
        if (b == 0.0) throw ZeroScale("affine scale must be nonzero");
        std::size_t m = knots_.size();
        std::vector<double> k(m), lv(m);
        double ladj = std::log(std::abs(b));
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t j = (b > 0.0) ? i : m - 1 - i;
            k[i] = a + b * knots_[j];
            lv[i] = logvals_[j] - ladj;
        }
        return LogConcaveDensity(std::move(k), std::move(lv), normalized_);
    }

    // int |f - g|, exact: on each cell of the merged knot grid f - g is a
    // difference of two exponentials of linear functions, which changes
    // sign at most once, at an analytically known point.
    double l1_distance(const LogConcaveDensity& other) const {
        require_normalized();
        other.require_normalized();
        std::vector<double> pts;
        pts.reserve(knots_.size() + other.knots_.size());
        pts.insert(pts.end(), knots_.begin(), knots_.end());
        pts.insert(pts.end(), other.knots_.begin(), other.knots_.end());
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        double total = 0.0;
        for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
            double lo = pts[c], hi = pts[c + 1];
            bool in1 = lo >= knots_.front() && hi <= knots_.back();
            bool in2 = lo >= other.knots_.front() && hi <= other.knots_.back();
            if (!in1 && !in2) continue;
            if (in1 && !in2) {
                total += cell_mass(*this, lo, hi);
                continue;
            }
            if (!in1 && in2) {
                total += cell_mass(other, lo, hi);
                continue;
            }
            double a1 = eval_log(lo), s1 = slopes_[segment_of_clamped(lo, hi)];
            double a2 = other.eval_log(lo), s2 = other.slopes_[other.segment_of_clamped(lo, hi)];
            double ds = s1 - s2, da = a1 - a2;
            // values are anchored at the cell's left edge lo
            auto piece = [&](double p, double q) {
                double L = q - p;
                if (!(L > 0.0)) return 0.0;
                double u0 = a1 + s1 * (p - lo), u1 = a1 + s1 * (q - lo);
                double v0 = a2 + s2 * (p - lo), v1 = a2 + s2 * (q - lo);
                return std::abs(numeric::seg_mass(u0, u1, L) - numeric::seg_mass(v0, v1, L));
            };
            double split = std::numeric_limits<double>::quiet_NaN();
            if (ds != 0.0) split = lo - da / ds;
            if (std::isfinite(split) && split > lo && split < hi) {
                total += piece(lo, split) + piece(split, hi);
            } else {
                total += piece(lo, hi);
            }
        }
        return total;
    }

private:
    LogConcaveDensity(std::vector<double> knots, std::vector<double> logvals, bool normalized)
        : knots_(std::move(knots)), logvals_(std::move(logvals)), normalized_(normalized) {
        validate_and_build();
    }

    void validate_and_build() {
        if (knots_.size() != logvals_.size())
            throw LengthMismatch("knots/logvals size mismatch");
        if (knots_.size() < 2) throw EmptyInput("need at least 2 knots");
        for (double v : knots_)
            if (!std::isfinite(v)) throw NonFiniteValue("knot");
        for (double v : logvals_)
            if (!std::isfinite(v)) throw NonFiniteValue("logval");
        std::size_t m = knots_.size();
        slopes_.resize(m - 1);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            double dx = knots_[i + 1] - knots_[i];
            if (!(dx > 0.0)) throw UnsortedKnots("knots must be strictly increasing");
            slopes_[i] = (logvals_[i + 1] - logvals_[i]) / dx;
        }
        for (std::size_t i = 0; i + 2 < m; ++i) {
            double slack = kConcavitySlack *
                           std::max({1.0, std::abs(slopes_[i]), std::abs(slopes_[i + 1])});
            if (slopes_[i + 1] > slopes_[i] + slack)
                throw NotConcave("slope increases at knot " + std::to_string(i + 1));
        }
        off_ = *std::max_element(logvals_.begin(), logvals_.end());
        cum_sh_.assign(m, 0.0);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            double L = knots_[i + 1] - knots_[i];
            cum_sh_[i + 1] =
                cum_sh_[i] + numeric::seg_mass(logvals_[i] - off_, logvals_[i + 1] - off_, L);
        }
        msh_ = cum_sh_.back();
        log_mass_ = (msh_ > 0.0) ? off_ + std::log(msh_)
                                 : -std::numeric_limits<double>::infinity();
        if (normalized_ && std::abs(integrate_exp() - 1.0) > kMassTol)
            throw NotNormalized("mass " + std::to_string(integrate_exp()));
    }

    void require_normalized() const {
        if (!normalized_) throw NotNormalized("operation requires a normalized density");
    }

    std::size_t segment_of(double x) const {
        auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - knots_.begin());
        if (i == 0) return 0;
        if (i >= knots_.size()) return knots_.size() - 2;
        return i - 1;
    }

    // Segment index for a cell [lo,hi] known not to straddle a knot.
    std::size_t segment_of_clamped(double lo, double hi) const {
        return segment_of(0.5 * (lo + hi));
    }

    // int_alpha^beta (x - c) f(x) dx restricted to segment i (shifted units).
    double signed_piece(std::size_t i, double alpha, double beta, double c) const {
        double L = beta - alpha;
        if (!(L > 0.0)) return 0.0;
        double a = logvals_[i] - off_ + slopes_[i] * (alpha - knots_[i]);
        double b = a + slopes_[i] * L;
        return numeric::seg_first(a, b, L) + (alpha - c) * numeric::seg_mass(a, b, L);
    }

    static double cell_mass(const LogConcaveDensity& d, double lo, double hi) {
        std::size_t i = d.segment_of_clamped(lo, hi);
        double a = d.logvals_[i] + d.slopes_[i] * (lo - d.knots_[i]);
        return numeric::seg_mass(a, a + d.slopes_[i] * (hi - lo), hi - lo);
    }

    std::vector<double> knots_, logvals_, slopes_, cum_sh_;
    double off_ = 0.0, msh_ = 0.0, log_mass_ = 0.0;
    bool normalized_ = false;
};

// Uniform density on [lo, hi].
inline LogConcaveDensity make_uniform(double lo, double hi) {
    if (!(hi > lo)) throw OutOfRange("need hi > lo");
    double lv = -std::log(hi - lo);
    return LogConcaveDensity::normalized({lo, hi}, {lv, lv});
}

// Standard Laplace truncated at the tail_mass quantiles and renormalized.
inline LogConcaveDensity make_laplace(double tail_mass = 1e-8) {
    if (!(tail_mass > 0.0 && tail_mass < 0.25)) throw OutOfRange("tail_mass");
    double T = -std::log(2.0 * tail_mass);
    double edge = std::log(tail_mass);
    return LogConcaveDensity::raw({-T, 0.0, T}, {edge, -std::log(2.0), edge}).normalize();
}

// N(mu, sigma^2) on a dense grid between its tail_mass quantiles.
inline LogConcaveDensity make_normal_grid(double mu, double sigma, std::size_t m = 1001,
                                          double tail_mass = 1e-8) {
    if (!(sigma > 0.0) || m < 2) throw OutOfRange("bad normal grid parameters");
    double zmax = -numeric::inverse_normal_cdf(tail_mass);
    std::vector<double> k(m), lv(m);
    double c = -0.5 * std::log(2.0 * M_PI) - std::log(sigma);
    for (std::size_t i = 0; i < m; ++i) {
        double z = -zmax + 2.0 * zmax * static_cast<double>(i) / static_cast<double>(m - 1);
        k[i] = mu + sigma * z;
        lv[i] = c - 0.5 * z * z;
    }
    return LogConcaveDensity::raw(std::move(k), std::move(lv)).normalize();
}

}  // namespace logcave
