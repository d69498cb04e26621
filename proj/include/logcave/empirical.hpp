#pragma once

// Finitely supported probability distribution: sorted distinct atoms
// with positive weights summing to one.  This is the discrete input to
// the projection solver and the common currency of the distance and
// simulation modules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "logcave/errors.hpp"

namespace logcave {

class EmpiricalDistribution {
public:
    // Builds from raw samples.  Equal weights when `weights` is empty.
    // Values closer than tie_tol chain-merge into one atom placed at the
    // weighted mean of the group; tie_tol 0 collapses exact duplicates only.
    static EmpiricalDistribution from_samples(std::span<const double> values,
                                              std::span<const double> weights = {},
                                              double tie_tol = 0.0) {
        if (values.empty()) throw EmptyInput("no sample values");
        if (!weights.empty() && weights.size() != values.size())
            throw LengthMismatch("values/weights size mismatch: " +
                                 std::to_string(values.size()) + " vs " +
                                 std::to_string(weights.size()));
        if (!(tie_tol >= 0.0)) throw OutOfRange("tie_tol must be >= 0");
        const std::size_t n = values.size();
        for (double v : values)
            if (!std::isfinite(v)) throw NonFiniteValue("sample value");
        for (double w : weights) {
            if (!std::isfinite(w)) throw NonFiniteValue("sample weight");
            if (w <= 0.0) throw NonPositiveWeight("input weight <= 0");
        }

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });

        const double wdef = 1.0 / static_cast<double>(n);
        EmpiricalDistribution d;
        double prev = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double v = values[order[k]];
            double w = weights.empty() ? wdef : weights[order[k]];
            if (k > 0 && v - prev <= tie_tol) {
                double& aw = d.weights_.back();
                double& av = d.atoms_.back();
                av = (av * aw + v * w) / (aw + w);
                aw += w;
            } else {
                d.atoms_.push_back(v);
                d.weights_.push_back(w);
            }
            prev = v;
        }
        d.finalize();
        return d;
    }

    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return atoms_.size(); }
    double min() const { return atoms_.front(); }
    double max() const { return atoms_.back(); }
    bool is_nondegenerate() const { return atoms_.size() >= 2; }

    // Right-continuous distribution function.
    double cdf(double x) const {
        auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x);
        if (it == atoms_.begin()) return 0.0;
        return cum_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
    }

    // Generalized inverse inf{x : cdf(x) >= u}, defined for u in (0,1].
    double quantile(double u) const {
        if (!(u > 0.0 && u <= 1.0)) throw OutOfRange("quantile level must be in (0,1]");
        auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
        return atoms_[static_cast<std::size_t>(it - cum_.begin())];
    }

    double mean() const {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) s += weights_[i] * atoms_[i];
        return s;
    }

    double median() const { return quantile(0.5); }

    double mean_abs_dev(double center) const {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            s += weights_[i] * std::abs(atoms_[i] - center);
        return s;
    }

    // Distribution of X + Y for independent X ~ *this, Y ~ other.
    // Exact all-pairs construction; cost is size()*other.size().
    EmpiricalDistribution convolve(const EmpiricalDistribution& other) const {
        std::vector<double> v, w;
        v.reserve(size() * other.size());
        w.reserve(size() * other.size());
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < other.size(); ++j) {
                v.push_back(atoms_[i] + other.atoms_[j]);
                w.push_back(weights_[i] * other.weights_[j]);
            }
        return from_samples(v, w);
    }

private:
    EmpiricalDistribution() = default;

    void finalize() {
        double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
        if (!(sum > 0.0) || !std::isfinite(sum)) throw NonPositiveWeight("weight sum");
        for (double& w : weights_) {
            w /= sum;
            if (w < 1e-15)
                throw NonPositiveWeight("normalized weight below 1e-15");
        }
        cum_.resize(weights_.size());
        std::partial_sum(weights_.begin(), weights_.end(), cum_.begin());
        cum_.back() = 1.0;
    }

    std::vector<double> atoms_, weights_, cum_;
};

}  // namespace logcave
