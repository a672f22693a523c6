#pragma once

// Test-only reference computations, written against the raw definitions and
// independent of the library's sampling and gradient code.

#include "dgrpo/matrix.hpp"
#include "dgrpo/reweight.hpp"
#include "dgrpo/taskbank.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

// Weight at the default parameters, from the closed forms. The logistic
// families go through tanh so they share no arithmetic with the library.
inline double oracle_weight(dgrpo::ReweightFamily f, double p) {
    switch (f) {
    case dgrpo::ReweightFamily::none:
        return 1.0;
    case dgrpo::ReweightFamily::linear: {
        const double a = 0.4, b = 1.5, lo = 0.5, hi = 1.0;
        if (p <= lo) return b;
        if (p >= hi) return a;
        const double t = (p - lo) / (hi - lo);
        return b + t * (a - b);
    }
    case dgrpo::ReweightFamily::inverse: {
        const double a = 0.4, b = 0.7, x0 = 0.8, k = 1.0;
        const double v = a + (b - a) / (1.0 + k * (p - x0));
        return std::min(b, std::max(a, v));
    }
    case dgrpo::ReweightFamily::exponential: {
        const double a = 0.4, b = 1.5, x0 = 0.75, k = 10.0;
        return a + (b - a) * 0.5 * (1.0 - std::tanh(0.5 * k * (p - x0)));
    }
    case dgrpo::ReweightFamily::steep_exponential: {
        const double a = 0.3, b = 2.2, x0 = 0.65, k = 10.0;
        return a + (b - a) * 0.5 * (1.0 + std::tanh(-0.5 * k * (p - x0)));
    }
    case dgrpo::ReweightFamily::quadratic: {
        const double a = 0.4, b = 1.6, x0 = 0.1, k = 2.0;
        return std::min(b, std::max(a, b - k * (p - x0) * (p - x0)));
    }
    }
    return 0.0;
}

inline std::vector<double> softmax_row(const dgrpo::Matrix& w, double temperature, std::span<const double> phi) {
    std::vector<double> z(w.cols(), 0.0);
    for (std::size_t c = 0; c < w.cols(); ++c)
        for (std::size_t f = 0; f < w.rows(); ++f) z[c] += phi[f] * w(f, c) / temperature;
    double total = 0.0;
    for (double& v : z) total += (v = std::exp(v));
    for (double& v : z) v /= total;
    return z;
}

// Enumerates every action sequence the policy can emit on `task` and sums the
// probability of those whose submitted symbols equal the target.
inline double exact_success_probability(const dgrpo::Matrix& w, double temperature, const dgrpo::TaskRecord& task) {
    const int submit = static_cast<int>(w.cols()) - 1;
    double success = 0.0;
    std::vector<int> emitted;
    std::function<void(std::size_t, double)> walk = [&](std::size_t t, double prob) {
        if (t == task.length()) {
            if (emitted == task.target) success += prob;
            return;
        }
        const auto p = softmax_row(w, temperature, task.step_features(t));
        for (int a = 0; a <= submit; ++a) {
            if (a == submit) {
                if (emitted == task.target) success += prob * p[static_cast<std::size_t>(a)];
                continue;
            }
            emitted.push_back(a);
            walk(t + 1, prob * p[static_cast<std::size_t>(a)]);
            emitted.pop_back();
        }
    };
    walk(0, 1.0);
    return success;
}

} // namespace oracle
