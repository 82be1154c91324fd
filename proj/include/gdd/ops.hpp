#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "gdd/fft.hpp"
#include "gdd/rng.hpp"
#include "gdd/tensor.hpp"

namespace gdd {

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw shape_error("matmul: cannot multiply " + shape_str(a.shape()) + " by " + shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a(i, p);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c(i, j) += av * b(p, j);
        }
    require_finite(c, "matmul");
    return c;
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw shape_error("transpose: expected a matrix, got " + shape_str(a.shape()));
    Tensor t({a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) t(j, i) = a(i, j);
    return t;
}

/// Softmax along `axis`, max-subtracted so large inputs do not overflow.
inline Tensor softmax(const Tensor& v, std::size_t axis) {
    if (axis >= v.rank()) throw value_error("softmax: axis " + std::to_string(axis) + " out of range");
    const std::size_t n = v.dim(axis);
    if (n == 0) throw value_error("softmax: empty axis");
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < v.rank(); ++i) inner *= v.dim(i);
    const std::size_t outer = v.size() / (n * inner);

    Tensor out(v.shape());
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * n * inner + in;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[base + i * inner]);
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += out[base + i * inner] = std::exp(v[base + i * inner] - mx);
            for (std::size_t i = 0; i < n; ++i) out[base + i * inner] /= s;
        }
    require_finite(out, "softmax");
    return out;
}

inline Tensor softmax(const Tensor& v) { return softmax(v, v.rank() - 1); }

inline double softplus(double x) {
    // ln(1 + e^x) = max(x, 0) + ln(1 + e^-|x|)
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline Tensor softplus(Tensor t) {
    for (double& v : t.data()) v = softplus(v);
    return t;
}

inline Tensor relu(Tensor t) {
    for (double& v : t.data()) v = relu(v);
    return t;
}

namespace detail {
inline void require_same_length(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size())
        throw shape_error(std::string(op) + ": operands " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                          " are not equal-length vectors");
}
} // namespace detail

/// Direct O(d^2) circular correlation: out[k] = sum_i a[i] b[(i+k) mod d].
inline Tensor circ_corr_naive(const Tensor& a, const Tensor& b) {
    detail::require_same_length(a, b, "circ_corr_naive");
    const std::size_t d = a.size();
    Tensor out({d});
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += a[i] * b[(i + k) % d];
        out[k] = s;
    }
    return out;
}

/// Circular correlation through F^-1(conj(F(a)) * F(b)). Any length works;
/// no zero padding is applied.
inline Tensor circ_corr_fft(const Tensor& a, const Tensor& b) {
    detail::require_same_length(a, b, "circ_corr_fft");
    Tensor out = Tensor::vector(fft::correlate(a.data(), b.data()));
    require_finite(out, "circ_corr_fft");
    return out;
}

/// Central differences of a scalar function, one coordinate at a time.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps = 1e-6) {
    if (!(eps > 0.0)) throw value_error("finite_diff_grad: eps must be positive");
    Tensor g(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + eps;
        const double fp = f(probe);
        probe[i] = orig - eps;
        const double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw numeric_error("finite_diff_grad: non-finite function value at coordinate " + std::to_string(i));
        g[i] = (fp - fm) / (2.0 * eps);
    }
    return g;
}

/// sqrt(6 / (fan_in + fan_out)) for matrices, 0 for vectors (biases).
inline double glorot_bound(const Shape& shape) {
    if (shape.size() != 2) return 0.0;
    return std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
}

inline Tensor init_uniform(Rng& rng, const Shape& shape, double bound) {
    if (bound < 0.0) throw value_error("init_uniform: bound must be non-negative");
    Tensor t(shape);
    if (bound == 0.0) return t;
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
}

inline Tensor init_uniform(Rng& rng, const Shape& shape) { return init_uniform(rng, shape, glorot_bound(shape)); }

} // namespace gdd
