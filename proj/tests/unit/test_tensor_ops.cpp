#include <cmath>

#include <gtest/gtest.h>

#include "gdd/ops.hpp"
#include "gdd/rng.hpp"
#include "gdd/tensor.hpp"
#include "../support/oracles.hpp"

using namespace gdd;

TEST(Tensor, DataLengthMustMatchShape) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), shape_error);
    EXPECT_NO_THROW(Tensor({2, 3}, std::vector<double>(6)));
}

TEST(Tensor, ZeroExtentIsAllowed) {
    Tensor t({0, 4});
    EXPECT_EQ(t.size(), 0u);
    EXPECT_EQ(t.dim(1), 4u);
}

TEST(Matmul, SmallProduct) {
    const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
    const Tensor b = Tensor::matrix({{5, 6}, {7, 8}});
    EXPECT_EQ(matmul(a, b), Tensor::matrix({{19, 22}, {43, 50}}));
}

TEST(Matmul, IdentityAndHandArithmetic) {
    const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
    EXPECT_EQ(matmul(Tensor::identity(2), a), a);
    EXPECT_EQ(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})), Tensor::matrix({{11}}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    try {
        matmul(Tensor({2, 3}), Tensor({4, 2}));
        FAIL();
    } catch (const shape_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[4x2]"), std::string::npos) << msg;
    }
}

TEST(Matmul, MatchesLoopOracle) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(5), k = 1 + rng.below(5), m = 1 + rng.below(5);
        Tensor a({n, k}), b({k, m});
        for (double& v : a.data()) v = rng.uniform(-2, 2);
        for (double& v : b.data()) v = rng.uniform(-2, 2);
        const auto want = oracle::mat_mul(oracle::rows_of(a), oracle::rows_of(b));
        const Tensor got = matmul(a, b);
        for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-13);
    }
}

TEST(Transpose, Involution) {
    const Tensor a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    EXPECT_EQ(transpose(a).shape(), (Shape{3, 2}));
    EXPECT_EQ(transpose(transpose(a)), a);
}

TEST(Softmax, LogTwoAndZero) {
    const Tensor p = softmax(Tensor::vector({std::log(2.0), 0.0}));
    EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ZerosAreUniform) {
    const Tensor p = softmax(Tensor::vector({0.0, 0.0}));
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, LargeLogitsStayFinite) {
    const Tensor p = softmax(Tensor::vector({1000.0, 1000.0}));
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, EmptyAxisIsError) { EXPECT_THROW(softmax(Tensor({0})), value_error); }

TEST(Softmax, RowsAreDistributionsAndShiftInvariant) {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(6);
        Tensor x({r, c});
        for (double& v : x.data()) v = rng.uniform(-30, 30);
        const Tensor p = softmax(x);
        Tensor shifted = x;
        const double s = rng.uniform(-50, 50);
        for (double& v : shifted.data()) v += s;
        const Tensor q = softmax(shifted);
        for (std::size_t i = 0; i < r; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                EXPECT_GE(p(i, j), 0.0);
                sum += p(i, j);
                EXPECT_NEAR(p(i, j), q(i, j), 1e-12);
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(Softmax, ColumnAxis) {
    const Tensor p = softmax(Tensor::matrix({{0, 1}, {0, 1}}), 0);
    EXPECT_NEAR(p(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(p(1, 1), 0.5, 1e-15);
}

TEST(Activations, Values) {
    EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
    EXPECT_NEAR(softplus(0.0), 0.693147, 1e-6);
    EXPECT_NEAR(softplus(50.0), 50.0, 1e-12);
    EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
    EXPECT_GT(softplus(-800.0), -1e-300);
    EXPECT_EQ(relu(-3.0), 0.0);
    EXPECT_EQ(relu(3.0), 3.0);
    EXPECT_EQ(relu(-1.5), 0.0);
    EXPECT_EQ(relu(2.5), 2.5);
}

TEST(CircCorr, ImpulseOnLeftReturnsRightOperand) {
    const Tensor b = Tensor::vector({1, 2, 3, 4});
    const Tensor delta = Tensor::vector({1, 0, 0, 0});
    EXPECT_LT(max_abs_diff(circ_corr_fft(delta, b), b), 1e-12);
}

TEST(CircCorr, ImpulseOnRightReversesLeftOperand) {
    // psi(a, delta)[k] = a[-k mod d]
    const Tensor a = Tensor::vector({1, 2, 3, 4});
    const Tensor delta = Tensor::vector({1, 0, 0, 0});
    EXPECT_LT(max_abs_diff(circ_corr_fft(a, delta), Tensor::vector({1, 4, 3, 2})), 1e-12);
}

TEST(CircCorr, HandEvaluatedPair) {
    const Tensor want = Tensor::vector({5, 5});
    EXPECT_LT(max_abs_diff(circ_corr_naive(Tensor::vector({1, 1}), Tensor::vector({2, 3})), want), 1e-15);
    EXPECT_LT(max_abs_diff(circ_corr_fft(Tensor::vector({1, 1}), Tensor::vector({2, 3})), want), 1e-12);
}

TEST(CircCorr, ThreeElementExpansion) {
    // c0 = a0 b0 + a1 b1 + a2 b2; c1 = a0 b1 + a1 b2 + a2 b0; c2 = a0 b2 + a1 b0 + a2 b1
    const double a0 = 0.3, a1 = -1.2, a2 = 2.0, b0 = 1.5, b1 = 0.25, b2 = -0.7;
    const Tensor want = Tensor::vector({a0 * b0 + a1 * b1 + a2 * b2, a0 * b1 + a1 * b2 + a2 * b0, a0 * b2 + a1 * b0 + a2 * b1});
    const Tensor a = Tensor::vector({a0, a1, a2}), b = Tensor::vector({b0, b1, b2});
    EXPECT_LT(max_abs_diff(circ_corr_naive(a, b), want), 1e-15);
    EXPECT_LT(max_abs_diff(circ_corr_fft(a, b), want), 1e-12);
}

TEST(CircCorr, LengthOne) {
    EXPECT_NEAR(circ_corr_fft(Tensor::vector({3}), Tensor::vector({-2}))[0], -6.0, 1e-14);
}

TEST(CircCorr, MismatchedLengthsAreError) {
    EXPECT_THROW(circ_corr_fft(Tensor({3}), Tensor({4})), shape_error);
    EXPECT_THROW(circ_corr_naive(Tensor({3}), Tensor({4})), shape_error);
}

TEST(CircCorr, FftAndNaiveAgreeWithLoopOracle) {
    Rng rng(5);
    for (std::size_t d : {1, 2, 3, 5, 7, 8, 12, 17, 31, 64}) {
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> a(d), b(d);
            for (auto& v : a) v = rng.uniform(-1, 1);
            for (auto& v : b) v = rng.uniform(-1, 1);
            const auto want = oracle::circular_correlation(a, b);
            const Tensor fa = circ_corr_fft(Tensor::vector(a), Tensor::vector(b));
            const Tensor na = circ_corr_naive(Tensor::vector(a), Tensor::vector(b));
            for (std::size_t k = 0; k < d; ++k) {
                EXPECT_NEAR(fa[k], want[k], 1e-10);
                EXPECT_NEAR(na[k], want[k], 1e-12);
            }
        }
    }
}

TEST(FiniteDiff, QuadraticGradient) {
    auto f = [](const Tensor& x) { return x[0] * x[0] + 3.0 * x[1]; };
    const Tensor g = finite_diff_grad(f, Tensor::vector({2.0, -1.0}));
    EXPECT_NEAR(g[0], 4.0, 1e-8);
    EXPECT_NEAR(g[1], 3.0, 1e-8);
}

TEST(FiniteDiff, DotSelfAndSoftplusSum) {
    auto sq = [](const Tensor& x) { return x[0] * x[0]; };
    EXPECT_NEAR(finite_diff_grad(sq, Tensor::vector({3.0}))[0], 6.0, 1e-6);
    auto sp = [](const Tensor& x) {
        double s = 0.0;
        for (double v : x.data()) s += softplus(v);
        return s;
    };
    const Tensor g = finite_diff_grad(sp, Tensor({4}));
    for (double v : g.data()) EXPECT_NEAR(v, 0.5, 1e-6);
}

TEST(FiniteDiff, NonFiniteValueIsError) {
    auto f = [](const Tensor& x) { return std::log(x[0]); };
    EXPECT_THROW(finite_diff_grad(f, Tensor::vector({0.0})), numeric_error);
}

TEST(Init, GlorotBoundAndDeterminism) {
    EXPECT_NEAR(glorot_bound({4, 2}), 1.0, 1e-15);
    EXPECT_EQ(glorot_bound({4}), 0.0);
    Rng a(9), b(9);
    const Tensor x = init_uniform(a, {8, 4}), y = init_uniform(b, {8, 4});
    EXPECT_EQ(x, y);
    const double bound = glorot_bound({8, 4});
    for (double v : x.data()) EXPECT_LE(std::abs(v), bound);
}

TEST(Init, BiasShapeIsZeroAndSamplesCentered) {
    Rng r(12);
    const Tensor bias = init_uniform(r, {7});
    for (double v : bias.data()) EXPECT_EQ(v, 0.0);
    const Tensor x = init_uniform(r, {10000, 1}, 0.5);
    double mean = 0.0;
    for (double v : x.data()) mean += v / 10000.0;
    EXPECT_LT(std::abs(mean), 0.05 * 0.5);
}

TEST(Rng, ForksAreIndependentAndStable) {
    const Rng root(42);
    Rng a = root.fork("layer.W"), b = root.fork("layer.W"), c = root.fork("layer.b");
    EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_NE(a.next_u64(), c.next_u64());
}

TEST(Rng, BelowIsInRangeAndRoughlyUniform) {
    Rng r(1);
    std::array<int, 5> counts{};
    for (int i = 0; i < 50000; ++i) ++counts[r.below(5)];
    for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}
