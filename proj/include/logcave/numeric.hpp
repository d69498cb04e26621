#pragma once

// Stable primitives for integrals of exponentials of linear functions.
// Everything a piecewise-log-linear density needs (masses, moments,
// double integrals) reduces to the four kernels below on [0,1]; the
// seg_* helpers anchor the exponential at the larger endpoint so no
// intermediate overflows even for extreme slopes.

#include <cmath>
#include <cstdint>
#include <limits>

namespace logcave::numeric {

// (e^z - 1)/z, continuous value 1 at z = 0.
inline double em1(double z) {
    if (z == 0.0) return 1.0;
    return std::expm1(z) / z;
}

// 2(e^z - 1 - z)/z^2, continuous value 1 at z = 0.
inline double em2(double z) {
    if (std::abs(z) < 0.1) {
        // 2 sum_{j>=0} z^j/(j+2)!
        double term = 1.0, sum = 1.0;
        for (int j = 1; j <= 10; ++j) {
            term *= z / (j + 2);
            sum += term;
        }
        return sum;
    }
    return 2.0 * (std::expm1(z) - z) / (z * z);
}

// int_0^1 t e^{zt} dt = (e^z(z-1)+1)/z^2, value 1/2 at z = 0.
inline double iexp_t(double z) {
    if (std::abs(z) < 0.1) {
        // sum_{j>=0} z^j / (j! (j+2))
        double sum = 0.5, fact = 1.0;
        for (int j = 1; j <= 10; ++j) {
            fact *= j;
            sum += std::pow(z, j) / (fact * (j + 2));
        }
        return sum;
    }
    return (std::exp(z) * (z - 1.0) + 1.0) / (z * z);
}

// int_0^1 t^2 e^{zt} dt = (e^z(z^2-2z+2)-2)/z^3, value 1/3 at z = 0.
inline double iexp_tt(double z) {
    if (std::abs(z) < 0.25) {
        // sum_{j>=0} z^j / (j! (j+3))
        double sum = 1.0 / 3.0, fact = 1.0;
        for (int j = 1; j <= 12; ++j) {
            fact *= j;
            sum += std::pow(z, j) / (fact * (j + 3));
        }
        return sum;
    }
    return (std::exp(z) * (z * z - 2.0 * z + 2.0) - 2.0) / (z * z * z);
}

// int_0^L exp(a + (b-a) t/L) dt.  Anchored at max(a,b).
inline double seg_mass(double a, double b, double L) {
    double z = b - a;
    if (z >= 0.0) return L * std::exp(b) * em1(-z);
    return L * std::exp(a) * em1(z);
}

// int_0^L t exp(a + (b-a) t/L) dt.
inline double seg_first(double a, double b, double L) {
    double z = b - a;
    if (z >= 0.0) return L * L * std::exp(b) * (em1(-z) - iexp_t(-z));
    return L * L * std::exp(a) * iexp_t(z);
}

// int_0^L t^2 exp(a + (b-a) t/L) dt.
inline double seg_second(double a, double b, double L) {
    double z = b - a;
    if (z >= 0.0)
        return L * L * L * std::exp(b) * (em1(-z) - 2.0 * iexp_t(-z) + iexp_tt(-z));
    return L * L * L * std::exp(a) * iexp_tt(z);
}

// int_0^L int_0^t exp(a + (b-a) u/L) du dt  (the "integral of the
// partial cdf" over the segment; exact identity L*mass - first).
inline double seg_prefix2(double a, double b, double L) {
    double z = b - a;
    if (z >= 0.0) return L * L * std::exp(b) * iexp_t(-z);
    return L * L * std::exp(a) * 0.5 * em2(z);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Acklam's rational approximation refined by one Newton step; good to
// ~1e-14 over (0,1).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) return std::numeric_limits<double>::quiet_NaN();
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p > phigh) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

}  // namespace logcave::numeric
