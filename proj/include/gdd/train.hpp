#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gdd/metrics.hpp"
#include "gdd/model.hpp"
#include "gdd/optim.hpp"

namespace gdd {

inline std::vector<Prediction> predict_all(const Model& model, const std::vector<EncodedExample>& data) {
    std::vector<Prediction> out;
    out.reserve(data.size());
    for (const auto& e : data) out.push_back(model.predict(e));
    return out;
}

inline Metrics evaluate(const Model& model, const std::vector<EncodedExample>& data) {
    if (data.empty()) throw value_error("evaluate: empty dataset");
    std::vector<Label> pred, gold;
    for (const auto& e : data) {
        pred.push_back(model.predict(e).label);
        gold.push_back(e.label);
    }
    return compute_metrics(pred, gold);
}

struct EpochStats {
    std::size_t epoch = 0;        // 1-based
    double train_loss = 0.0;      // mean over examples of the batch objective
    std::optional<Metrics> dev;   // absent without a dev set
    std::optional<double> train_accuracy; // filled when TrainOptions::track_train_accuracy
};

struct TrainOptions {
    bool track_train_accuracy = false;
    bool stop_when_fit = false; // end once train accuracy reaches 1 (implies tracking)
};

/// Seeded per-epoch shuffle, mini-batches of cfg.batch_size accumulated into
/// one Adam step. Returns the stats of every completed epoch.
inline std::vector<EpochStats> train(Model& model, const std::vector<EncodedExample>& train_set,
                                     const std::vector<EncodedExample>& dev_set,
                                     const std::function<void(const EpochStats&)>& on_epoch = {},
                                     const TrainOptions& topt = {}) {
    if (train_set.empty()) throw value_error("train: empty training set");
    const ModelConfig& cfg = model.config();
    const Rng root(cfg.seed);
    Rng dropout_rng = root.fork("dropout");
    AdamState state;
    AdamOptions aopt;
    aopt.lr = cfg.lr;

    std::vector<std::size_t> order(train_set.size());
    std::vector<EpochStats> history;
    std::vector<Tensor> grads;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng = root.fork("shuffle").fork(epoch);
        shuffle_rng.shuffle(order);

        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<const EncodedExample*> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
                batch.push_back(&train_set[order[i]]);
            total += model.loss_and_grad(batch, grads, cfg.dropout > 0.0 ? &dropout_rng : nullptr);
            for (const auto& g : grads) require_finite(g, "training gradient");
            adam_step(model.params(), grads, state, aopt);
        }

        EpochStats s;
        s.epoch = epoch;
        s.train_loss = total / static_cast<double>(train_set.size());
        if (!std::isfinite(s.train_loss)) throw numeric_error("train: loss diverged at epoch " + std::to_string(epoch));
        if (!dev_set.empty()) s.dev = evaluate(model, dev_set);
        if (topt.track_train_accuracy || topt.stop_when_fit) s.train_accuracy = evaluate(model, train_set).accuracy;
        history.push_back(s);
        if (on_epoch) on_epoch(s);
        if (topt.stop_when_fit && *s.train_accuracy == 1.0) break;
    }
    return history;
}

struct TensorCheck {
    std::string name;
    std::size_t size = 0;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    bool finite = true;
};

struct GradcheckReport {
    std::vector<TensorCheck> tensors;
    double eps = 1e-6;

    double worst() const {
        double w = 0.0;
        for (const auto& t : tensors) w = std::max(w, t.finite ? t.max_rel_err : INFINITY);
        return w;
    }
    bool passed(double tol) const { return worst() < tol; }
};

/// |a - f| / max(|a|, |f|, floor). The floor keeps exactly-zero gradients
/// (e.g. a bias that softmax is invariant to) from producing 0/0.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Analytic gradient of the single-example loss against central differences,
/// element by element, for every named tensor. Dropout must be off.
inline GradcheckReport gradcheck_model(Model& model, const EncodedExample& e, double eps = 1e-6) {
    if (model.config().dropout != 0.0) throw value_error("gradcheck: dropout must be 0");
    std::vector<Tensor> grads;
    model.loss_and_grad({&e}, grads);
    GradcheckReport rep;
    rep.eps = eps;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        Param& p = model.params()[i];
        TensorCheck c;
        c.name = p.name;
        c.size = p.value.size();
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double orig = p.value[k];
            p.value[k] = orig + eps;
            const double up = model.loss(e);
            p.value[k] = orig - eps;
            const double down = model.loss(e);
            p.value[k] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = grads[i][k];
            if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
                c.finite = false;
                continue;
            }
            c.max_abs_err = std::max(c.max_abs_err, std::abs(analytic - numeric));
            c.max_rel_err = std::max(c.max_rel_err, relative_error(analytic, numeric));
        }
        rep.tensors.push_back(c);
    }
    return rep;
}

} // namespace gdd
