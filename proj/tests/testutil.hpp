#pragma once

// Shared test oracles. These stay independent of the implementation paths
// they check: the DFT oracle is the literal double sum, the gradient
// oracle is central finite differences.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "demcl/network.hpp"
#include "demcl/rng.hpp"
#include "demcl/tensor.hpp"

namespace testutil {

/// O(K^2 L^2) direct evaluation of S(u,v) = sum s(k,l) e^{-j2pi(uk/K+vl/L)}.
inline demcl::ComplexMat brute_force_dft2d(const demcl::ComplexMat& in) {
    const std::size_t k_n = in.rows, l_n = in.cols;
    demcl::ComplexMat out(k_n, l_n);
    const double two_pi = 2.0 * M_PI;
    for (std::size_t u = 0; u < k_n; ++u) {
        for (std::size_t v = 0; v < l_n; ++v) {
            std::complex<double> acc = 0.0;
            for (std::size_t k = 0; k < k_n; ++k)
                for (std::size_t l = 0; l < l_n; ++l) {
                    double phase = two_pi * (static_cast<double>(u * k) / static_cast<double>(k_n) +
                                             static_cast<double>(v * l) / static_cast<double>(l_n));
                    acc += in.at(k, l) * std::complex<double>(std::cos(phase), -std::sin(phase));
                }
            out.at(u, v) = acc;
        }
    }
    return out;
}

inline double max_rel_error(const demcl::ComplexMat& a, const demcl::ComplexMat& b) {
    double scale = 0.0;
    for (const auto& z : b.v) scale = std::max(scale, std::abs(z));
    if (scale == 0.0) scale = 1.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i)
        worst = std::max(worst, std::abs(a.v[i] - b.v[i]) / scale);
    return worst;
}

inline demcl::ComplexMat random_grid(std::size_t rows, std::size_t cols, demcl::Rng& rng) {
    demcl::ComplexMat m(rows, cols);
    for (auto& z : m.v) z = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return m;
}

inline demcl::Tensor random_tensor(std::vector<std::size_t> shape, demcl::Rng& rng,
                                   double lo = -1.0, double hi = 1.0) {
    demcl::Tensor t(std::move(shape));
    for (auto& x : t.values) x = rng.uniform(lo, hi);
    return t;
}

/// Central finite-difference check of every parameter gradient of `net`
/// against a scalar loss. Returns the worst relative error.
///
/// loss_fn must run forward and return the scalar; grad_fn must run
/// forward+backward (accumulating exact gradients) for the same input.
inline double gradient_check(demcl::Network& net, const std::function<double()>& loss_fn,
                             const std::function<void()>& grad_fn, double eps = 1e-5) {
    net.zero_grads();
    grad_fn();
    double worst = 0.0;
    for (auto& p : net.params()) {
        for (std::size_t i = 0; i < p.value->size(); ++i) {
            const double saved = p.value->values[i];
            p.value->values[i] = saved + eps;
            const double lp = loss_fn();
            p.value->values[i] = saved - eps;
            const double lm = loss_fn();
            p.value->values[i] = saved;
            const double numeric = (lp - lm) / (2.0 * eps);
            const double analytic = p.grad->values[i];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
            worst = std::max(worst, std::abs(numeric - analytic) / denom);
        }
    }
    return worst;
}

}  // namespace testutil
