#pragma once

// Dual-level graph attention over an aspect-word interactive graph.
//
// Per layer, U dual-level heads attend first over edges (target-edge) and
// then over nodes with the edge weights folded into the logits
// (target-node); each neighbour contributes psi(W_i h_i, W_e e_ai), the
// circular correlation of its projected node and edge features. V
// relational heads score neighbours from edge features alone. The aspect
// representation is the concatenation of all U + V head outputs, and the
// edge features are carried to the next layer through W_r.

#include <cmath>
#include <vector>

#include "gdd/autograd.hpp"
#include "gdd/rng.hpp"
#include "gdd/tensor.hpp"

namespace gdd {

struct DualHeadParams {
    Tensor Wa; // [d_aspect x d_head]
    Tensor We; // [d_edge x d_head]
    Tensor Wi; // [d_node x d_head]
};

struct RelHeadParams {
    Tensor Wv;  // [d_node x d_head]
    Tensor Wv1; // [d_edge x d_mlp]
    Tensor bv1; // [d_mlp]
    Tensor Wv2; // [d_mlp x 1]
    Tensor bv2; // [1]
};

struct DgatLayerParams {
    std::vector<DualHeadParams> dual;
    std::vector<RelHeadParams> rel;
    Tensor Wr; // [d_edge x d_edge_next]
};

/// Inputs of one layer: aspect vector, neighbour rows, edge rows (parallel to the neighbours).
struct GraphBatch {
    Tensor h_a; // [d_aspect]
    Tensor H_N; // [m x d_node]
    Tensor E;   // [m x d_edge]
};

struct DgatOptions {
    bool scale_logits = false;
    double dropout = 0.0;
    Rng* dropout_rng = nullptr; // null disables dropout (evaluation)
};

struct DgatLayerTrace {
    bool empty = false;
    std::vector<Tensor> beta, omega, rho; // per head, each [m]
};

namespace ad {

struct DualHeadVars {
    Var Wa, We, Wi;
};

struct RelHeadVars {
    Var Wv, Wv1, bv1, Wv2, bv2;
};

struct DgatLayerVars {
    std::vector<DualHeadVars> dual;
    std::vector<RelHeadVars> rel;
    Var Wr;
};

namespace detail {
inline Var maybe_scale(Var logits, std::size_t d_head, const DgatOptions& opt) {
    return opt.scale_logits ? scale(logits, 1.0 / std::sqrt(static_cast<double>(d_head))) : logits;
}

inline std::size_t neighbours(Var H_N, Var E) {
    if (H_N.shape().size() != 2 || E.shape().size() != 2 || H_N.shape()[0] != E.shape()[0])
        throw shape_error("dgat: neighbour matrix " + shape_str(H_N.shape()) + " and edge matrix " +
                          shape_str(E.shape()) + " are not parallel");
    return H_N.shape()[0];
}
} // namespace detail

/// beta_i = softmax_i(<W_a h_a, W_e e_ai>)
inline Var target_edge_attention(Var a_proj, Var e_proj, const DgatOptions& opt = {}) {
    if (e_proj.shape().at(0) == 0) throw value_error("target_edge_attention: graph has no neighbours");
    return softmax(detail::maybe_scale(matmul(a_proj, transpose(e_proj)), a_proj.shape()[0], opt));
}

/// omega_i = softmax_i(beta_i * <W_a h_a, W_i h_i>); beta scales logits, it never masks.
inline Var target_node_attention(Var a_proj, Var n_proj, Var beta, const DgatOptions& opt = {}) {
    if (n_proj.shape().at(0) == 0) throw value_error("target_node_attention: graph has no neighbours");
    Var logits = mul(beta, matmul(a_proj, transpose(n_proj)));
    return softmax(detail::maybe_scale(logits, a_proj.shape()[0], opt));
}

/// One dual-level head: sum_i omega_i psi(W_i h_i, W_e e_ai). Writes beta and omega to the trace.
inline Var dual_head(Var h_a, Var H_N, Var E, const DualHeadVars& p, const DgatOptions& opt,
                     DgatLayerTrace* trace = nullptr) {
    Var a = matmul(h_a, p.Wa);
    Var ep = matmul(E, p.We);
    Var np = matmul(H_N, p.Wi);
    Var beta = target_edge_attention(a, ep, opt);
    Var omega = target_node_attention(a, np, beta, opt);
    if (trace) {
        trace->beta.push_back(beta.value());
        trace->omega.push_back(omega.value());
    }
    return matmul(omega, circ_corr(np, ep));
}

/// rho_i = softmax_i(relu(e_ai W_v1 + b_v1) W_v2 + b_v2); output sum_i rho_i W_v h_i.
inline Var relational_head(Var H_N, Var E, const RelHeadVars& p, DgatLayerTrace* trace = nullptr) {
    const std::size_t m = detail::neighbours(H_N, E);
    if (m == 0) throw value_error("relational_head: graph has no neighbours");
    Var hidden = relu(add_bias(matmul(E, p.Wv1), p.bv1));
    Var logits = reshape(add_bias(matmul(hidden, p.Wv2), p.bv2), {m});
    Var rho = softmax(logits);
    if (trace) trace->rho.push_back(rho.value());
    return matmul(rho, matmul(H_N, p.Wv));
}

inline Var relation_update(Var E, Var Wr) { return matmul(E, Wr); }

inline std::size_t layer_width(const DgatLayerVars& p) {
    std::size_t w = 0;
    for (const auto& d : p.dual) w += d.Wa.shape().at(1);
    for (const auto& r : p.rel) w += r.Wv.shape().at(1);
    return w;
}

struct LayerOut {
    Var h_a;
    Var E;
};

/// h_a' = concat(dual heads, relational heads); E' = E W_r. An empty graph
/// yields a zero aspect vector and is flagged in the trace.
inline LayerOut dgat_layer(Var h_a, Var H_N, Var E, const DgatLayerVars& p, const DgatOptions& opt = {},
                           DgatLayerTrace* trace = nullptr) {
    Tape& t = *h_a.tape;
    const std::size_t m = detail::neighbours(H_N, E);
    if (trace) *trace = DgatLayerTrace{};
    if (m == 0) {
        if (trace) trace->empty = true;
        return {t.constant(Tensor({layer_width(p)})), relation_update(E, p.Wr)};
    }
    std::vector<Var> heads;
    for (const auto& d : p.dual) heads.push_back(dual_head(h_a, H_N, E, d, opt, trace));
    for (const auto& r : p.rel) heads.push_back(relational_head(H_N, E, r, trace));
    Var out = concat(heads);
    if (opt.dropout_rng && opt.dropout > 0.0) {
        Tensor keep(out.shape());
        const double inv = 1.0 / (1.0 - opt.dropout);
        for (double& k : keep.data()) k = opt.dropout_rng->uniform() < opt.dropout ? 0.0 : inv;
        out = mul(out, t.constant(std::move(keep)));
    }
    return {out, relation_update(E, p.Wr)};
}

/// L stacked layers; neighbour features stay at their input values, only the
/// aspect vector and the edge features evolve.
inline Var global_forward(Var h_a, Var H_N, Var E, const std::vector<DgatLayerVars>& layers,
                          const DgatOptions& opt = {}, std::vector<DgatLayerTrace>* trace = nullptr) {
    if (trace) trace->assign(layers.size(), DgatLayerTrace{});
    for (std::size_t l = 0; l < layers.size(); ++l) {
        LayerOut o = dgat_layer(h_a, H_N, E, layers[l], opt, trace ? &(*trace)[l] : nullptr);
        h_a = o.h_a;
        E = o.E;
    }
    return h_a;
}

inline DualHeadVars constants(Tape& t, const DualHeadParams& p) {
    return {t.constant(p.Wa), t.constant(p.We), t.constant(p.Wi)};
}

inline RelHeadVars constants(Tape& t, const RelHeadParams& p) {
    return {t.constant(p.Wv), t.constant(p.Wv1), t.constant(p.bv1), t.constant(p.Wv2), t.constant(p.bv2)};
}

inline DgatLayerVars constants(Tape& t, const DgatLayerParams& p) {
    DgatLayerVars v;
    for (const auto& d : p.dual) v.dual.push_back(constants(t, d));
    for (const auto& r : p.rel) v.rel.push_back(constants(t, r));
    v.Wr = t.constant(p.Wr);
    return v;
}

} // namespace ad

// Plain-tensor entry points over the same differentiable code.

inline Tensor target_edge_attention(const Tensor& h_a, const Tensor& E, const DualHeadParams& p,
                                    const DgatOptions& opt = {}) {
    ad::Tape t;
    return ad::target_edge_attention(ad::matmul(t.constant(h_a), t.constant(p.Wa)),
                                     ad::matmul(t.constant(E), t.constant(p.We)), opt)
        .value();
}

inline Tensor target_node_attention(const Tensor& h_a, const Tensor& H_N, const Tensor& beta, const DualHeadParams& p,
                                    const DgatOptions& opt = {}) {
    if (beta.shape() != Shape{H_N.dim(0)}) throw shape_error("target_node_attention: beta does not match neighbours");
    ad::Tape t;
    return ad::target_node_attention(ad::matmul(t.constant(h_a), t.constant(p.Wa)),
                                     ad::matmul(t.constant(H_N), t.constant(p.Wi)), t.constant(beta), opt)
        .value();
}

/// Concatenation of the U dual-level head outputs.
inline Tensor dual_head(const Tensor& h_a, const Tensor& H_N, const Tensor& E, const DgatLayerParams& p,
                        const DgatOptions& opt = {}) {
    if (H_N.rank() == 2 && H_N.dim(0) == 0) {
        std::size_t w = 0;
        for (const auto& d : p.dual) w += d.Wa.dim(1);
        return Tensor({w});
    }
    ad::Tape t;
    const auto vars = ad::constants(t, p);
    std::vector<ad::Var> heads;
    for (const auto& d : vars.dual) heads.push_back(ad::dual_head(t.constant(h_a), t.constant(H_N), t.constant(E), d, opt));
    return ad::concat(heads).value();
}

inline Tensor relation_update(const Tensor& E, const Tensor& Wr) {
    if (E.rank() != 2 || Wr.rank() != 2 || E.dim(1) != Wr.dim(0))
        throw shape_error("relation_update: edges " + shape_str(E.shape()) + " do not fit W_r " + shape_str(Wr.shape()));
    ad::Tape t;
    return ad::relation_update(t.constant(E), t.constant(Wr)).value();
}

inline Tensor relational_head(const Tensor& H_N, const Tensor& E, const RelHeadParams& p) {
    ad::Tape t;
    return ad::relational_head(t.constant(H_N), t.constant(E), ad::constants(t, p)).value();
}

struct LayerResult {
    Tensor h_a;
    Tensor E;
    DgatLayerTrace trace;
};

inline LayerResult dgat_layer(const GraphBatch& b, const DgatLayerParams& p, const DgatOptions& opt = {}) {
    ad::Tape t;
    LayerResult r;
    auto out = ad::dgat_layer(t.constant(b.h_a), t.constant(b.H_N), t.constant(b.E), ad::constants(t, p), opt, &r.trace);
    r.h_a = out.h_a.value();
    r.E = out.E.value();
    return r;
}

} // namespace gdd
