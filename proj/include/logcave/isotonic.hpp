#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "logcave/errors.hpp"

namespace logcave {

// Pool-adjacent-violators over indices 0..n-1.  solve(i0, i1) must return the
// optimal common value for the block of indices [i0, i1]; pooling is exact
// whenever the per-index objectives are concave in the fitted value.  The
// returned sequence is nondecreasing by construction.
template <class BlockSolve>
std::vector<double> isotonic_pool(std::size_t n, BlockSolve&& solve) {
    if (n == 0) throw EmptyInput("isotonic_pool: n = 0");
    struct Block {
        std::size_t i0, i1;
        double value;
    };
    std::vector<Block> stack;
    stack.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Block b{i, i, solve(i, i)};
        while (!stack.empty() && stack.back().value > b.value) {
            b.i0 = stack.back().i0;
            stack.pop_back();
            b.value = solve(b.i0, b.i1);
        }
        stack.push_back(b);
    }
    std::vector<double> fitted(n);
    for (const Block& b : stack) {
        for (std::size_t i = b.i0; i <= b.i1; ++i) fitted[i] = b.value;
    }
    return fitted;
}

// Weighted least-squares isotonic regression.  Empty weights mean all ones.
inline std::vector<double> isotonic_l2(const std::vector<double>& y,
                                       std::vector<double> w = {}) {
    if (y.empty()) throw EmptyInput("isotonic_l2: empty data");
    if (w.empty()) w.assign(y.size(), 1.0);
    if (w.size() != y.size())
        throw LengthMismatch("isotonic_l2: weights size != data size");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) throw NonFiniteValue("isotonic_l2: y");
        if (!(w[i] > 0.0) || !std::isfinite(w[i]))
            throw NonPositiveWeight("isotonic_l2: weight");
    }
    // Prefix sums let each block mean come out as one subtraction; the block
    // solve is the weighted mean.
    std::vector<double> sw(y.size() + 1, 0.0), swy(y.size() + 1, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        sw[i + 1] = sw[i] + w[i];
        swy[i + 1] = swy[i] + w[i] * y[i];
    }
    return isotonic_pool(y.size(), [&](std::size_t i0, std::size_t i1) {
        return (swy[i1 + 1] - swy[i0]) / (sw[i1 + 1] - sw[i0]);
    });
}

// Isotonic fit under the check loss sum rho_beta(y_i - m_i) with
// rho_beta(u) = u (beta - [u < 0]).  Each block takes its lower weighted
// beta-quantile; convexity of the loss makes pooling exact.
inline std::vector<double> isotonic_quantile(const std::vector<double>& y,
                                             double beta,
                                             std::vector<double> w = {}) {
    if (y.empty()) throw EmptyInput("isotonic_quantile: empty data");
    if (!(beta > 0.0) || !(beta < 1.0))
        throw OutOfRange("isotonic_quantile: beta must lie in (0,1)");
    if (w.empty()) w.assign(y.size(), 1.0);
    if (w.size() != y.size())
        throw LengthMismatch("isotonic_quantile: weights size != data size");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) throw NonFiniteValue("isotonic_quantile: y");
        if (!(w[i] > 0.0) || !std::isfinite(w[i]))
            throw NonPositiveWeight("isotonic_quantile: weight");
    }
    std::vector<std::size_t> order(y.size());
    return isotonic_pool(y.size(), [&](std::size_t i0, std::size_t i1) {
        // Lower weighted beta-quantile of y[i0..i1]: smallest value whose
        // cumulative weight reaches beta of the block total.
        std::size_t m = i1 - i0 + 1;
        order.resize(m);
        for (std::size_t k = 0; k < m; ++k) order[k] = i0 + k;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
        double total = 0.0;
        for (std::size_t k = 0; k < m; ++k) total += w[order[k]];
        double target = beta * total;
        double cum = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            cum += w[order[k]];
            if (cum >= target - 1e-12 * total) return y[order[k]];
        }
        return y[order[m - 1]];
    });
}

// Total check loss of a fitted sequence.
inline double check_loss(const std::vector<double>& y,
                         const std::vector<double>& m, double beta) {
    if (y.size() != m.size())
        throw LengthMismatch("check_loss: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double u = y[i] - m[i];
        total += u * (beta - (u < 0.0 ? 1.0 : 0.0));
    }
    return total;
}

// Golden-section search for the maximizer of a concave function on [lo, hi].
// Tolerance is on the argument; 1e-12 of the bracket width by default.
template <class F>
double golden_max(F&& f, double lo, double hi, double tol = 0.0) {
    constexpr double invphi = 0.6180339887498949;
    if (hi < lo) std::swap(lo, hi);
    if (tol <= 0.0) tol = 1e-12 * (1.0 + hi - lo);
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace logcave
