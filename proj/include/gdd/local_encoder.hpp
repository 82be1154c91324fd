#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "gdd/autograd.hpp"
#include "gdd/dep_graph.hpp"
#include "gdd/tensor.hpp"

namespace gdd {

/// sigma-MLP weights: sigma = softplus(relu(pool(H) W1 + b1) W2 + b2).
struct GaussianMaskParams {
    Tensor W1; // [d_model x d_hid]
    Tensor b1; // [d_hid]
    Tensor W2; // [d_hid x 1]
    Tensor b2; // [1]
    double sample_interval = 0.2;
};

struct AttentionParams {
    Tensor Wq, Wk, Wv; // [d_model x d_k] each
    std::size_t heads = 1;
};

enum class AttentionVariant { covariance, original };

/// Zero-mean Gaussian density.
inline double gaussian_pdf(double x, double sigma) {
    if (!(sigma > 0.0)) throw value_error("gaussian_pdf: sigma must be positive");
    const double z = x / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// Token distance to the nearest span endpoint; 0 inside the span.
inline std::vector<std::size_t> span_distances(std::size_t n, Span span) {
    validate_span(span, n);
    std::vector<std::size_t> d(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (j < span.first)
            d[j] = span.first - j;
        else if (j > span.last)
            d[j] = j - span.last;
    }
    return d;
}

/// M_G[j] = GK(dist(j) * interval). With `normalize` the peak is rescaled to 1.
inline Tensor build_gaussian_mask(std::size_t n, Span span, double sigma, double interval, bool normalize = false) {
    if (!(interval > 0.0)) throw value_error("build_gaussian_mask: sample interval must be positive");
    const auto dist = span_distances(n, span);
    Tensor m({n});
    const double peak = gaussian_pdf(0.0, sigma);
    for (std::size_t j = 0; j < n; ++j) {
        m[j] = gaussian_pdf(static_cast<double>(dist[j]) * interval, sigma);
        if (normalize) m[j] /= peak;
    }
    return m;
}

/// Row j of H scaled by M_G[j].
inline Tensor apply_mask(const Tensor& mask, const Tensor& H) {
    if (mask.rank() != 1 || H.rank() != 2 || mask.size() != H.dim(0))
        throw shape_error("apply_mask: mask " + shape_str(mask.shape()) + " does not match " + shape_str(H.shape()));
    Tensor out = H;
    for (std::size_t j = 0; j < H.dim(0); ++j)
        for (double& v : out.row(j)) v *= mask[j];
    return out;
}

namespace ad {

struct MaskVars {
    Var W1, b1, W2, b2;
};

struct AttentionVars {
    Var Wq, Wk, Wv;
};

/// Scalar sigma ([1]) from the token-mean of H.
inline Var sigma(Var H, const MaskVars& p) {
    Var pooled = mean_rows(H);
    Var hidden = relu(add_bias(matmul(pooled, p.W1), p.b1));
    return softplus(add_bias(matmul(hidden, p.W2), p.b2));
}

/// Mask values as a differentiable function of sigma.
inline Var gaussian_mask(Var sigma, const std::vector<std::size_t>& dist, double interval, bool normalize) {
    const double s = sigma.value()[0];
    if (!(s > 0.0)) throw value_error("gaussian_mask: sigma must be positive");
    const std::size_t n = dist.size();
    Tensor m({n}), dm({n});
    const double norm = normalize ? 1.0 : 1.0 / (s * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(dist[j]) * interval;
        m[j] = norm * std::exp(-0.5 * (x / s) * (x / s));
        // d/dsigma: x^2/sigma^3 from the exponent, -1/sigma from the 1/sigma prefactor
        dm[j] = m[j] * (x * x / (s * s * s) - (normalize ? 0.0 : 1.0 / s));
    }
    require_finite(m, "gaussian_mask");
    return sigma.tape->push(std::move(m), {sigma}, [sigma, dm](Tape& t, const Tensor& g) {
        double acc = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) acc += g[j] * dm[j];
        t.grad_buffer(sigma)[0] += acc;
    });
}

struct AttentionOut {
    Var output;                   // [n x d_k]
    std::vector<Tensor> weights;  // one [n x n] row-stochastic matrix per head
};

/// softmax(Q K^T / sqrt(d)) V per head, scores[i][j] = <q_i, k_j>. When
/// `centered`, Q and K first have their token-means subtracted.
inline AttentionOut attention_qkv(Var Q, Var K, Var V, std::size_t heads, bool centered) {
    const Shape& qs = Q.shape();
    if (qs.size() != 2 || K.shape() != qs || V.shape().size() != 2 || V.shape()[0] != qs[0])
        throw shape_error("attention: Q, K, V shapes disagree");
    if (qs[0] == 0) throw value_error("attention: no tokens");
    const std::size_t dk = qs[1], dv = V.shape()[1];
    if (heads == 0 || dk % heads != 0 || dv % heads != 0)
        throw value_error("attention: width " + std::to_string(dk) + " not divisible into " + std::to_string(heads) +
                          " heads");
    if (centered) {
        Q = sub_bias(Q, mean_rows(Q));
        K = sub_bias(K, mean_rows(K));
    }
    const std::size_t hq = dk / heads, hv = dv / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hq));
    AttentionOut out{Q, {}};
    std::vector<Var> parts;
    for (std::size_t h = 0; h < heads; ++h) {
        Var q = heads == 1 ? Q : slice_cols(Q, h * hq, hq);
        Var k = heads == 1 ? K : slice_cols(K, h * hq, hq);
        Var v = heads == 1 ? V : slice_cols(V, h * hv, hv);
        Var a = softmax(scale(matmul(q, transpose(k)), inv_sqrt));
        out.weights.push_back(a.value());
        parts.push_back(matmul(a, v));
    }
    out.output = heads == 1 ? parts.front() : concat_cols(parts);
    return out;
}

inline AttentionOut self_attention(Var HG, const AttentionVars& p, std::size_t heads, AttentionVariant variant) {
    return attention_qkv(matmul(HG, p.Wq), matmul(HG, p.Wk), matmul(HG, p.Wv), heads,
                         variant == AttentionVariant::covariance);
}

struct LocalOptions {
    double sample_interval = 0.2;
    bool use_mask = true;
    bool normalize_mask = false;
    AttentionVariant variant = AttentionVariant::covariance;
    std::size_t heads = 1;
};

struct LocalTrace {
    double sigma = 0.0;
    Tensor mask;
    Tensor attention; // head-averaged [n x n]
};

/// sigma -> mask -> masked H -> self-attention -> mean over the aspect rows.
inline Var local_forward(Var H, Span span, const MaskVars& mp, const AttentionVars& ap, const LocalOptions& opt,
                         LocalTrace* trace = nullptr) {
    const std::size_t n = H.shape().at(0);
    validate_span(span, n);
    Var HG = H;
    if (opt.use_mask) {
        if (!(opt.sample_interval > 0.0)) throw value_error("local encoder: sample interval must be positive");
        Var s = sigma(H, mp);
        Var m = gaussian_mask(s, span_distances(n, span), opt.sample_interval, opt.normalize_mask);
        HG = scale_rows(m, H);
        if (trace) {
            trace->sigma = s.value()[0];
            trace->mask = m.value();
        }
    } else if (trace) {
        trace->sigma = 0.0;
        trace->mask = Tensor({n}, 1.0);
    }
    AttentionOut att = self_attention(HG, ap, opt.heads, opt.variant);
    if (trace) {
        Tensor avg({n, n});
        for (const auto& w : att.weights)
            for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += w[i] / static_cast<double>(att.weights.size());
        trace->attention = std::move(avg);
    }
    std::vector<std::size_t> rows;
    for (std::size_t i = span.first; i <= span.last; ++i) rows.push_back(i);
    return mean_rows(gather_rows(att.output, rows));
}

} // namespace ad

// Plain-tensor entry points. Each runs the differentiable path on a scratch
// tape so there is exactly one implementation of every formula.

inline double compute_sigma(const Tensor& H, const GaussianMaskParams& p) {
    if (H.rank() != 2 || H.dim(0) == 0) throw value_error("compute_sigma: H must be a non-empty matrix");
    ad::Tape t;
    ad::MaskVars v{t.constant(p.W1), t.constant(p.b1), t.constant(p.W2), t.constant(p.b2)};
    return ad::sigma(t.constant(H), v).value()[0];
}

struct AttentionResult {
    Tensor output;  // [n x d_k]
    Tensor weights; // [n x n], head-averaged
};

namespace detail {
inline AttentionResult run_attention(const Tensor& HG, const AttentionParams& p, AttentionVariant variant) {
    ad::Tape t;
    auto out = ad::self_attention(t.constant(HG), {t.constant(p.Wq), t.constant(p.Wk), t.constant(p.Wv)}, p.heads,
                                  variant);
    const std::size_t n = HG.dim(0);
    Tensor avg({n, n});
    for (const auto& w : out.weights)
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += w[i] / static_cast<double>(out.weights.size());
    return {out.output.value(), std::move(avg)};
}
} // namespace detail

/// softmax(Q K^T / sqrt(d_k)) V.
inline AttentionResult original_attention(const Tensor& HG, const AttentionParams& p) {
    return detail::run_attention(HG, p, AttentionVariant::original);
}

/// softmax((Q - U_Q)(K - U_K)^T / sqrt(d_k)) V with U_* the token means.
inline AttentionResult covariance_attention(const Tensor& HG, const AttentionParams& p) {
    return detail::run_attention(HG, p, AttentionVariant::covariance);
}

/// Attention on already-projected Q, K, V (no centering).
inline AttentionResult scaled_dot_attention(const Tensor& Q, const Tensor& K, const Tensor& V) {
    ad::Tape t;
    auto out = ad::attention_qkv(t.constant(Q), t.constant(K), t.constant(V), 1, false);
    return {out.output.value(), out.weights.front()};
}

inline Tensor local_forward(const Tensor& H, Span span, const GaussianMaskParams& mp, const AttentionParams& ap,
                            const ad::LocalOptions& opt = {}, ad::LocalTrace* trace = nullptr) {
    ad::Tape t;
    ad::MaskVars m{t.constant(mp.W1), t.constant(mp.b1), t.constant(mp.W2), t.constant(mp.b2)};
    ad::AttentionVars a{t.constant(ap.Wq), t.constant(ap.Wk), t.constant(ap.Wv)};
    ad::LocalOptions o = opt;
    o.sample_interval = mp.sample_interval;
    o.heads = ap.heads;
    return ad::local_forward(t.constant(H), span, m, a, o, trace).value();
}

} // namespace gdd
