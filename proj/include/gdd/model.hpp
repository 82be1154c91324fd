#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "gdd/autograd.hpp"
#include "gdd/config.hpp"
#include "gdd/dataset.hpp"
#include "gdd/dep_graph.hpp"
#include "gdd/dgat.hpp"
#include "gdd/embeddings.hpp"
#include "gdd/local_encoder.hpp"
#include "gdd/ops.hpp"
#include "gdd/rng.hpp"

namespace gdd {

/// Biases are excluded from the L2 term; embeddings are included except row 0 (PAD).
enum class ParamKind { weight, bias, embedding };

inline const char* kind_name(ParamKind k) {
    switch (k) {
    case ParamKind::weight: return "weight";
    case ParamKind::bias: return "bias";
    case ParamKind::embedding: return "embedding";
    }
    return "?";
}

struct Param {
    std::string name;
    Tensor value;
    ParamKind kind;
    bool pad_row = false; // row 0 is a padding row, left out of the L2 term
};

/// Every trainable tensor, addressable by a unique hierarchical name and
/// kept in a fixed order (the order of registration).
class ModelParams {
public:
    void add(std::string name, Tensor value, ParamKind kind, bool pad_row = false) {
        if (index_.count(name)) throw value_error("duplicate parameter name '" + name + "'");
        index_.emplace(name, params_.size());
        params_.push_back(Param{std::move(name), std::move(value), kind, pad_row});
    }

    Tensor& at(const std::string& name) { return params_[index_of(name)].value; }
    const Tensor& at(const std::string& name) const { return params_[index_of(name)].value; }

    std::size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw value_error("unknown parameter '" + name + "'");
        return it->second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    std::size_t size() const noexcept { return params_.size(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.value.size();
        return n;
    }

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// An Example resolved against the vocabularies, with its AWIG built.
struct EncodedExample {
    std::vector<std::size_t> token_ids;
    Span span;
    Awig awig;
    std::vector<std::size_t> tag_ids; // m * kappa_max, row-major
    std::vector<std::size_t> hop_ids; // m
    Label label = Label::neutral;
    Tensor precomputed;               // [n x d_model] when external vectors are used, else empty

    std::size_t size() const noexcept { return token_ids.size(); }
};

struct Prediction {
    std::array<double, num_classes> probs{};
    Label label = Label::neutral;
};

struct ForwardTrace {
    ad::LocalTrace local;
    std::vector<DgatLayerTrace> dgat;
};

/// Output of the differentiable forward pass.
struct ForwardVars {
    ad::Var logits;    // [C]
    ad::Var log_probs; // [C]
};

class Model {
public:
    Model(ModelConfig cfg, Vocab vocab, TagVocab tags) : cfg_(std::move(cfg)), vocab_(std::move(vocab)), tags_(std::move(tags)) {
        cfg_.validate();
        if (tags_.kappa_max() != cfg_.kappa_max) throw value_error("tag vocabulary kappa_max differs from config");
        register_params();
    }

    /// Builds both vocabularies from the training data, then initializes.
    static Model from_data(const ModelConfig& cfg, const std::vector<Example>& train) {
        Vocab v;
        TagVocab t(cfg.kappa_max);
        for (const auto& e : train) {
            for (const auto& tok : e.tokens) v.add(tok);
            for (const auto& r : e.dep_rels) t.add(r);
        }
        return Model(cfg, std::move(v), std::move(t));
    }

    const ModelConfig& config() const noexcept { return cfg_; }
    ModelConfig& config() noexcept { return cfg_; }
    const Vocab& vocab() const noexcept { return vocab_; }
    const TagVocab& tag_vocab() const noexcept { return tags_; }
    ModelParams& params() noexcept { return params_; }
    const ModelParams& params() const noexcept { return params_; }

    EncodedExample encode(const Example& ex, const PrecomputedEmbeddings* pre = nullptr) const {
        if (auto p = example_problem(ex)) throw value_error("example: " + *p);
        EncodedExample e;
        e.token_ids = token_ids(ex.tokens, vocab_);
        e.span = ex.span();
        e.label = ex.label;
        e.awig = build_awig(ex.tree(), e.span, AwigOptions{cfg_.kappa_max, cfg_.drop_punct});
        for (const auto& edge : e.awig.edges) {
            auto ids = composed_tag_ids(edge.tag, tags_);
            e.hop_ids.push_back(ids.back());
            ids.pop_back();
            e.tag_ids.insert(e.tag_ids.end(), ids.begin(), ids.end());
        }
        if (pre) {
            const Tensor* h = pre->find(ex.tokens);
            if (!h) throw value_error("no precomputed vectors for sentence starting '" + ex.tokens.front() + "'");
            if (h->dim(1) != cfg_.d_model)
                throw shape_error("precomputed vectors have width " + std::to_string(h->dim(1)) + ", model expects " +
                                  std::to_string(cfg_.d_model));
            e.precomputed = *h;
        }
        return e;
    }

    /// Parameters placed on a tape: leaves when gradients are wanted,
    /// constants otherwise.
    struct Bound {
        std::vector<ad::Var> vars; // parallel to ModelParams
        ad::MaskVars mask;
        ad::AttentionVars attn;
        std::vector<ad::DgatLayerVars> layers;
        ad::Var tokens, tags, hops, WP, bP;
    };

    Bound bind(ad::Tape& t, bool with_grad) const {
        Bound b;
        for (const auto& p : params_) b.vars.push_back(with_grad ? t.leaf(p.value) : t.constant(p.value));
        auto v = [&](const std::string& name) { return b.vars[params_.index_of(name)]; };
        b.tokens = v("embed.tokens");
        b.tags = v("embed.tags");
        b.hops = v("embed.hops");
        b.mask = {v("local.mask.W1"), v("local.mask.b1"), v("local.mask.W2"), v("local.mask.b2")};
        b.attn = {v("local.attn.Wq"), v("local.attn.Wk"), v("local.attn.Wv")};
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            const std::string pre = "dgat.l" + std::to_string(l) + ".";
            ad::DgatLayerVars lv;
            for (std::size_t u = 0; u < cfg_.dual_heads; ++u) {
                const std::string h = pre + "dual" + std::to_string(u) + ".";
                lv.dual.push_back({v(h + "Wa"), v(h + "We"), v(h + "Wi")});
            }
            for (std::size_t r = 0; r < cfg_.rel_heads; ++r) {
                const std::string h = pre + "rel" + std::to_string(r) + ".";
                lv.rel.push_back({v(h + "Wv"), v(h + "Wv1"), v(h + "bv1"), v(h + "Wv2"), v(h + "bv2")});
            }
            lv.Wr = v(pre + "Wr");
            b.layers.push_back(std::move(lv));
        }
        b.WP = v("out.WP");
        b.bP = v("out.bP");
        return b;
    }

    /// h_final = concat(h_local, h_global); logits = h_final W_P + b_P.
    ForwardVars forward(ad::Tape& t, const Bound& b, const EncodedExample& e, Rng* dropout_rng = nullptr,
                        ForwardTrace* trace = nullptr) const {
        const std::size_t n = e.size();
        if (n == 0) throw value_error("forward: empty sentence");
        ad::Var H = e.precomputed.empty() ? ad::gather_rows(b.tokens, e.token_ids) : t.constant(e.precomputed);

        ad::LocalOptions lo;
        lo.sample_interval = cfg_.sample_interval;
        lo.use_mask = cfg_.use_mask;
        lo.normalize_mask = cfg_.normalize_mask;
        lo.variant = cfg_.attention;
        lo.heads = cfg_.local_heads;
        ad::Var h_local = ad::local_forward(H, e.span, b.mask, b.attn, lo, trace ? &trace->local : nullptr);

        // The multi-token aspect is merged into one node by summation.
        ad::Var h_a = ad::sum_rows(ad::gather_rows(H, e.awig.aspect_tokens));
        const std::size_t m = e.awig.size();
        ad::Var H_N = ad::gather_rows(H, e.awig.word_nodes);
        ad::Var tag_part = ad::reshape(ad::gather_rows(b.tags, e.tag_ids), {m, cfg_.kappa_max * cfg_.d_tag});
        ad::Var E = ad::concat_cols({tag_part, ad::gather_rows(b.hops, e.hop_ids)});

        DgatOptions go;
        go.scale_logits = cfg_.scale_logits;
        go.dropout = cfg_.dropout;
        go.dropout_rng = dropout_rng;
        ad::Var h_global = ad::global_forward(h_a, H_N, E, b.layers, go, trace ? &trace->dgat : nullptr);

        ad::Var h_final = ad::concat({h_local, h_global});
        ad::Var logits = ad::add_bias(ad::matmul(h_final, b.WP), b.bP);
        return {logits, ad::log_softmax(logits)};
    }

    /// Lambda * sum of squared weights (biases and PAD rows excluded).
    ad::Var regularizer(const Bound& b) const {
        std::vector<ad::Var> terms;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const Param& p = params_[i];
            if (p.kind == ParamKind::bias) continue;
            if (p.pad_row) {
                std::vector<std::size_t> rows;
                for (std::size_t r = 1; r < p.value.dim(0); ++r) rows.push_back(r);
                terms.push_back(ad::sum_squares(ad::gather_rows(b.vars[i], std::move(rows))));
            } else {
                terms.push_back(ad::sum_squares(b.vars[i]));
            }
        }
        return ad::scale(ad::sum(ad::concat(terms)), cfg_.l2);
    }

    Prediction predict(const EncodedExample& e, ForwardTrace* trace = nullptr) const {
        ad::Tape t;
        const Bound b = bind(t, false);
        const ForwardVars f = forward(t, b, e, nullptr, trace);
        return to_prediction(f.log_probs.value());
    }

    /// Cross-entropy of one example plus the regularizer.
    double loss(const EncodedExample& e) const {
        ad::Tape t;
        const Bound b = bind(t, false);
        const ForwardVars f = forward(t, b, e);
        return -f.log_probs.value()[static_cast<std::size_t>(e.label)] + regularizer(b).value()[0];
    }

    /// Sum of per-example cross-entropies plus one regularizer term.
    double dataset_loss(const std::vector<EncodedExample>& data) const {
        ad::Tape t;
        const Bound b = bind(t, false);
        double ce = 0.0;
        for (const auto& e : data) ce -= forward(t, b, e).log_probs.value()[static_cast<std::size_t>(e.label)];
        return ce + regularizer(b).value()[0];
    }

    /// Loss and gradient of a batch (sum of CE + one regularizer term).
    double loss_and_grad(const std::vector<const EncodedExample*>& batch, std::vector<Tensor>& grads,
                         Rng* dropout_rng = nullptr) const {
        ad::Tape t;
        const Bound b = bind(t, true);
        std::vector<ad::Var> terms;
        for (const EncodedExample* e : batch) {
            const ForwardVars f = forward(t, b, *e, dropout_rng);
            terms.push_back(ad::scale(ad::pick(f.log_probs, static_cast<std::size_t>(e->label)), -1.0));
        }
        terms.push_back(regularizer(b));
        ad::Var total = ad::sum(ad::concat(terms));
        t.backward(total);
        grads.clear();
        for (const auto& v : b.vars) grads.push_back(t.grad(v));
        return total.value()[0];
    }

    static Prediction to_prediction(const Tensor& log_probs) {
        Prediction p;
        std::size_t best = 0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            p.probs[c] = std::exp(log_probs[c]);
            if (log_probs[c] > log_probs[best]) best = c;
        }
        p.label = static_cast<Label>(best);
        return p;
    }

private:
    void register_params() {
        const Rng root(cfg_.seed);
        auto add = [&](const std::string& name, Shape shape, ParamKind kind, bool pad_row = false) {
            Rng r = root.fork(name);
            Tensor v = kind == ParamKind::bias ? Tensor(shape) : init_uniform(r, shape);
            if (pad_row)
                for (double& x : v.row(0)) x = 0.0;
            params_.add(name, std::move(v), kind, pad_row);
        };
        const auto& c = cfg_;
        add("embed.tokens", {vocab_.size(), c.d_model}, ParamKind::embedding, true);
        add("embed.tags", {tags_.size(), c.d_tag}, ParamKind::embedding, true);
        add("embed.hops", {c.kappa_max, c.d_tag}, ParamKind::embedding);
        add("local.mask.W1", {c.d_model, c.d_hid}, ParamKind::weight);
        add("local.mask.b1", {c.d_hid}, ParamKind::bias);
        add("local.mask.W2", {c.d_hid, 1}, ParamKind::weight);
        add("local.mask.b2", {1}, ParamKind::bias);
        add("local.attn.Wq", {c.d_model, c.d_k}, ParamKind::weight);
        add("local.attn.Wk", {c.d_model, c.d_k}, ParamKind::weight);
        add("local.attn.Wv", {c.d_model, c.d_k}, ParamKind::weight);
        for (std::size_t l = 0; l < c.layers; ++l) {
            const std::string pre = "dgat.l" + std::to_string(l) + ".";
            const std::size_t d_aspect = l == 0 ? c.d_model : c.global_width();
            const std::size_t d_edge = l == 0 ? c.d_edge() : c.d_model;
            for (std::size_t u = 0; u < c.dual_heads; ++u) {
                const std::string h = pre + "dual" + std::to_string(u) + ".";
                add(h + "Wa", {d_aspect, c.d_head}, ParamKind::weight);
                add(h + "We", {d_edge, c.d_head}, ParamKind::weight);
                add(h + "Wi", {c.d_model, c.d_head}, ParamKind::weight);
            }
            for (std::size_t r = 0; r < c.rel_heads; ++r) {
                const std::string h = pre + "rel" + std::to_string(r) + ".";
                add(h + "Wv", {c.d_model, c.d_head}, ParamKind::weight);
                add(h + "Wv1", {d_edge, c.d_head}, ParamKind::weight);
                add(h + "bv1", {c.d_head}, ParamKind::bias);
                add(h + "Wv2", {c.d_head, 1}, ParamKind::weight);
                add(h + "bv2", {1}, ParamKind::bias);
            }
            // Edge features move into the node space (d_model) for the next layer.
            add(pre + "Wr", {d_edge, c.d_model}, ParamKind::weight);
        }
        add("out.WP", {c.final_width(), num_classes}, ParamKind::weight);
        add("out.bP", {num_classes}, ParamKind::bias);
    }

    ModelConfig cfg_;
    Vocab vocab_;
    TagVocab tags_;
    ModelParams params_;
};

} // namespace gdd
