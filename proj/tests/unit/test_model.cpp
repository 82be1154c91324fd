#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "gdd/model.hpp"
#include "gdd/optim.hpp"
#include "gdd/synthetic.hpp"
#include "gdd/train.hpp"

using namespace gdd;

namespace {

struct Fixture {
    std::vector<Example> raw = generate_synthetic(9, 3);
    Model model;
    std::vector<EncodedExample> data;

    explicit Fixture(ModelConfig cfg = ModelConfig::toy()) : model(Model::from_data(cfg, raw)) {
        for (const auto& e : raw) data.push_back(model.encode(e));
    }
};

void zero_all(Model& m) {
    for (auto& p : m.params())
        for (double& v : p.value.data()) v = 0.0;
}

} // namespace

TEST(Model, ParameterNamesAndShapes) {
    Fixture f;
    const auto& c = f.model.config();
    const auto& P = f.model.params();
    EXPECT_EQ(P.at("embed.tokens").shape(), (Shape{f.model.vocab().size(), c.d_model}));
    EXPECT_EQ(P.at("embed.hops").shape(), (Shape{c.kappa_max, c.d_tag}));
    EXPECT_EQ(P.at("dgat.l0.dual0.We").shape(), (Shape{c.d_edge(), c.d_head}));
    EXPECT_EQ(P.at("dgat.l0.Wr").shape(), (Shape{c.d_edge(), c.d_model}));
    EXPECT_EQ(P.at("out.WP").shape(), (Shape{c.final_width(), num_classes}));
    EXPECT_TRUE(P[P.index_of("embed.tokens")].pad_row);
    EXPECT_EQ(P[P.index_of("out.bP")].kind, ParamKind::bias);
    std::set<std::string> names;
    for (const auto& p : P) EXPECT_TRUE(names.insert(p.name).second) << p.name;
    for (std::size_t col = 0; col < c.d_model; ++col) EXPECT_EQ(P.at("embed.tokens")(0, col), 0.0);
}

TEST(Model, InitializationIsSeeded) {
    Fixture a, b;
    ModelConfig other = ModelConfig::toy();
    other.seed = 7;
    Fixture c(other);
    for (std::size_t i = 0; i < a.model.params().size(); ++i)
        EXPECT_EQ(a.model.params()[i].value, b.model.params()[i].value);
    EXPECT_NE(a.model.params().at("out.WP"), c.model.params().at("out.WP"));
}

TEST(Model, ZeroClassifierGivesUniformProbabilities) {
    Fixture f;
    f.model.params().at("out.WP").fill(0.0);
    f.model.params().at("out.bP").fill(0.0);
    for (const auto& e : f.data) {
        const auto p = f.model.predict(e);
        for (double v : p.probs) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    }
}

TEST(Model, ProbabilitiesFormADistributionAndForwardIsDeterministic) {
    Fixture f;
    for (const auto& e : f.data) {
        const auto p = f.model.predict(e);
        double s = 0.0;
        for (double v : p.probs) {
            EXPECT_GT(v, 0.0);
            s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
        const auto q = f.model.predict(e);
        EXPECT_EQ(p.probs, q.probs);
        EXPECT_EQ(p.label, q.label);
    }
}

TEST(Model, LossOfUniformPredictorIsLogThree) {
    ModelConfig cfg = ModelConfig::toy();
    cfg.l2 = 0.0;
    Fixture f(cfg);
    zero_all(f.model);
    for (const auto& e : f.data) EXPECT_NEAR(f.model.loss(e), std::log(3.0), 1e-12);
}

TEST(Model, RegularizerCountsWeightsOnly) {
    ModelConfig cfg = ModelConfig::toy();
    cfg.l2 = 1.0;
    Fixture f(cfg);
    zero_all(f.model);
    auto& W1 = f.model.params().at("local.mask.W1");
    W1[0] = 1.0;
    W1[1] = 2.0;
    // equal biases and a PAD row leave both the softmax and the penalty untouched
    f.model.params().at("out.bP").fill(7.0);
    f.model.params().at("embed.tags")(0, 0) = 100.0;
    EXPECT_NEAR(f.model.loss(f.data[0]), std::log(3.0) + 5.0, 1e-12);
}

TEST(Model, DatasetLossAddsCrossEntropiesAndOneRegularizer) {
    Fixture f;
    const double l2 = f.model.config().l2;
    f.model.config().l2 = 0.0;
    double ce = 0.0;
    for (const auto& e : f.data) ce += f.model.loss(e);
    f.model.config().l2 = l2;
    const double reg = f.model.loss(f.data[0]) - [&] {
        f.model.config().l2 = 0.0;
        const double v = f.model.loss(f.data[0]);
        f.model.config().l2 = l2;
        return v;
    }();
    EXPECT_GT(reg, 0.0);
    EXPECT_NEAR(f.model.dataset_loss(f.data), ce + reg, 1e-10);

    std::vector<const EncodedExample*> batch;
    for (const auto& e : f.data) batch.push_back(&e);
    std::vector<Tensor> grads;
    EXPECT_NEAR(f.model.loss_and_grad(batch, grads), ce + reg, 1e-10);
}

TEST(Model, UnusedEmbeddingRowsGetNoGradient) {
    ModelConfig cfg = ModelConfig::toy();
    cfg.l2 = 0.0;
    Fixture f(cfg);
    const auto& e = f.data[0];
    std::vector<Tensor> grads;
    f.model.loss_and_grad({&e}, grads);
    const Tensor& g = grads[f.model.params().index_of("embed.tokens")];
    const std::set<std::size_t> used(e.token_ids.begin(), e.token_ids.end());
    bool some_used_nonzero = false;
    for (std::size_t r = 0; r < g.dim(0); ++r)
        for (std::size_t c = 0; c < g.dim(1); ++c) {
            if (!used.count(r)) EXPECT_EQ(g(r, c), 0.0) << "row " << r;
            else if (g(r, c) != 0.0) some_used_nonzero = true;
        }
    EXPECT_TRUE(some_used_nonzero);
}

TEST(Model, GradientMatchesCentralDifferences) {
    Fixture f;
    Rng r(11);
    const EncodedExample e = f.model.encode(detail::far_template(r, Label::negative));
    const auto rep = gradcheck_model(f.model, e);
    for (const auto& t : rep.tensors) EXPECT_LT(t.max_rel_err, 1e-4) << t.name;
    EXPECT_EQ(rep.tensors.size(), f.model.params().size());
}

TEST(Model, GradcheckIsStableAcrossStepSizes) {
    Fixture f;
    const EncodedExample& e = f.data[1];
    for (double eps : {1e-5, 1e-6}) EXPECT_LT(gradcheck_model(f.model, e, eps).worst(), 1e-4) << eps;
}

TEST(Model, OriginalAttentionAndNoMaskAlsoDifferentiate) {
    for (int variant = 0; variant < 2; ++variant) {
        ModelConfig cfg = ModelConfig::toy();
        if (variant == 0) cfg.attention = AttentionVariant::original;
        else cfg.use_mask = false;
        Fixture f(cfg);
        EXPECT_LT(gradcheck_model(f.model, f.data[2]).worst(), 1e-4) << variant;
    }
}

TEST(Model, AdamStepsReduceLoss) {
    ModelConfig cfg = ModelConfig::toy();
    cfg.lr = 0.01;
    Fixture f(cfg);
    std::vector<const EncodedExample*> batch;
    for (const auto& e : f.data) batch.push_back(&e);
    const double before = f.model.dataset_loss(f.data);
    AdamState st;
    AdamOptions opt;
    opt.lr = cfg.lr;
    std::vector<Tensor> grads;
    for (int i = 0; i < 10; ++i) {
        f.model.loss_and_grad(batch, grads);
        adam_step(f.model.params(), grads, st, opt);
    }
    EXPECT_LT(f.model.dataset_loss(f.data), before);
}

TEST(Model, TraceShapes) {
    Fixture f;
    const EncodedExample& e = f.data[1];
    ForwardTrace tr;
    f.model.predict(e, &tr);
    EXPECT_EQ(tr.dgat.size(), f.model.config().layers);
    EXPECT_EQ(tr.dgat[0].beta.size(), f.model.config().dual_heads);
    EXPECT_EQ(tr.dgat[0].beta[0].size(), e.awig.size());
}

TEST(Model, PrecomputedVectorsWidthIsChecked) {
    Fixture f;
    nlohmann::json rec = {{"tokens", f.raw[0].tokens},
                          {"vectors", std::vector<std::vector<double>>(f.raw[0].tokens.size(), {0.0, 0.0, 0.0})}};
    std::istringstream in(rec.dump() + "\n");
    const auto pre = PrecomputedEmbeddings::load(in);
    EXPECT_THROW(f.model.encode(f.raw[0], &pre), shape_error);
    std::size_t other = 1;
    while (f.raw[other].tokens == f.raw[0].tokens) ++other;
    EXPECT_THROW(f.model.encode(f.raw[other], &pre), value_error);
}
