#pragma once

// Diagnostic surface for the covariance-attention objective: the sum of two
// Rayleigh quotients whose stationary point sits at the query/key means.
// Used by tests and the verify-proposition command only.

#include <algorithm>
#include <cmath>
#include <vector>

#include "gdd/ops.hpp"
#include "gdd/rng.hpp"
#include "gdd/tensor.hpp"

namespace gdd {

namespace detail {

// sum_{a,b} (x_a - x_b)(x_a - x_b)^T divided by sum_{a,b} |x_a - x_b|^2
inline Tensor normalized_scatter(const Tensor& X, const char* which) {
    const std::size_t n = X.dim(0), d = X.dim(1);
    Tensor S({d, d});
    double trace = 0.0;
    std::vector<double> diff(d);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t i = 0; i < d; ++i) diff[i] = X(a, i) - X(b, i);
            for (std::size_t i = 0; i < d; ++i) {
                trace += diff[i] * diff[i];
                for (std::size_t j = 0; j < d; ++j) S(i, j) += diff[i] * diff[j];
            }
        }
    if (!(trace > 0.0)) throw value_error(std::string("objective: all ") + which + " vectors coincide");
    for (double& v : S.data()) v /= trace;
    return S;
}

// sum_j (x_j - c)^T M (x_j - c) / sum_j |x_j - c|^2
inline double rayleigh(const Tensor& X, const Tensor& c, const Tensor& M, const char* which) {
    const std::size_t n = X.dim(0), d = X.dim(1);
    double num = 0.0, den = 0.0;
    std::vector<double> r(d);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t i = 0; i < d; ++i) r[i] = X(a, i) - c[i];
        for (std::size_t i = 0; i < d; ++i) {
            den += r[i] * r[i];
            for (std::size_t j = 0; j < d; ++j) num += r[i] * M(i, j) * r[j];
        }
    }
    if (!(den > 0.0)) throw value_error(std::string("objective: every ") + which + " vector equals the offset");
    return num / den;
}

inline void check_objective_inputs(const Tensor& theta, const Tensor& phi, const Tensor& Q, const Tensor& K) {
    if (Q.rank() != 2 || K.shape() != Q.shape())
        throw shape_error("objective: Q " + shape_str(Q.shape()) + " and K " + shape_str(K.shape()) + " must match");
    if (Q.dim(0) < 2) throw value_error("objective: need at least two vectors");
    if (theta.shape() != Shape{Q.dim(1)} || phi.shape() != Shape{Q.dim(1)})
        throw shape_error("objective: theta/phi must have length " + std::to_string(Q.dim(1)));
}

} // namespace detail

/// O(theta, phi) in Rayleigh-quotient form:
///   sum_j (q_j - theta)^T Phi (q_j - theta) / sum_j |q_j - theta|^2
/// + sum_x (k_x - phi)^T Omega (k_x - phi) / sum_x |k_x - phi|^2
/// with Phi the normalized pairwise scatter of K and Omega that of Q.
inline double eval_objective(const Tensor& theta, const Tensor& phi, const Tensor& Q, const Tensor& K) {
    detail::check_objective_inputs(theta, phi, Q, K);
    const Tensor Phi = detail::normalized_scatter(K, "key");
    const Tensor Omega = detail::normalized_scatter(Q, "query");
    return detail::rayleigh(Q, theta, Phi, "query") + detail::rayleigh(K, phi, Omega, "key");
}

inline Tensor row_mean(const Tensor& X) {
    Tensor m({X.dim(1)});
    for (std::size_t a = 0; a < X.dim(0); ++a)
        for (std::size_t i = 0; i < X.dim(1); ++i) m[i] += X(a, i);
    for (double& v : m.data()) v /= static_cast<double>(X.dim(0));
    return m;
}

struct StationarityReport {
    double grad_norm_at_mean = 0.0;
    double median_grad_norm = 0.0;
    double ratio = 0.0;
    bool is_stationary = false;
};

struct StationarityOptions {
    double eps = 1e-6;
    double tolerance = 1e-5; // on grad_norm_at_mean / median_grad_norm
    std::size_t draws = 100;
};

/// Finite-difference gradient of O over (theta, phi) at the sample means,
/// compared with the median gradient norm at random nearby points.
inline StationarityReport check_stationarity(const Tensor& Q, const Tensor& K, Rng& rng,
                                             const StationarityOptions& opt = {}) {
    const std::size_t d = Q.dim(1);
    const Tensor qmean = row_mean(Q), kmean = row_mean(K);
    detail::check_objective_inputs(qmean, kmean, Q, K);

    auto objective = [&](const Tensor& x) {
        Tensor th({d}), ph({d});
        for (std::size_t i = 0; i < d; ++i) {
            th[i] = x[i];
            ph[i] = x[d + i];
        }
        return eval_objective(th, ph, Q, K);
    };
    auto grad_norm = [&](const Tensor& x) {
        const Tensor g = finite_diff_grad(objective, x, opt.eps);
        double s = 0.0;
        for (double v : g.data()) s += v * v;
        return std::sqrt(s);
    };
    auto spread = [](const Tensor& X, const Tensor& mean) {
        double s = 0.0;
        for (std::size_t a = 0; a < X.dim(0); ++a)
            for (std::size_t i = 0; i < X.dim(1); ++i) s += (X(a, i) - mean[i]) * (X(a, i) - mean[i]);
        return std::sqrt(s / static_cast<double>(X.dim(0)));
    };

    Tensor at_mean({2 * d});
    for (std::size_t i = 0; i < d; ++i) {
        at_mean[i] = qmean[i];
        at_mean[d + i] = kmean[i];
    }
    StationarityReport r;
    r.grad_norm_at_mean = grad_norm(at_mean);

    const double sq = spread(Q, qmean), sk = spread(K, kmean);
    std::vector<double> norms;
    for (std::size_t t = 0; t < opt.draws; ++t) {
        Tensor x = at_mean;
        for (std::size_t i = 0; i < d; ++i) {
            x[i] += sq * rng.uniform(-1.0, 1.0);
            x[d + i] += sk * rng.uniform(-1.0, 1.0);
        }
        norms.push_back(grad_norm(x));
    }
    std::sort(norms.begin(), norms.end());
    const std::size_t m = norms.size();
    r.median_grad_norm = m == 0 ? 0.0 : (m % 2 ? norms[m / 2] : 0.5 * (norms[m / 2 - 1] + norms[m / 2]));
    r.ratio = r.median_grad_norm > 0.0 ? r.grad_norm_at_mean / r.median_grad_norm : 0.0;
    r.is_stationary = r.median_grad_norm > 0.0 ? r.ratio < opt.tolerance : r.grad_norm_at_mean == 0.0;
    return r;
}

} // namespace gdd
