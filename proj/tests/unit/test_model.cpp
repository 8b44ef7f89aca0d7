#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "palcare/error.hpp"
#include "palcare/model.hpp"
#include "temp_dir.hpp"

using namespace palcare;
using namespace palcare::oracle;

namespace {

constexpr Activation kAll[] = {Activation::Selu, Activation::Relu, Activation::Tanh};

MLPParams small_net(Activation a, std::vector<size_t> hidden, size_t in = 12, uint64_t seed = 1) {
    ModelConfig c;
    c.input_dim = in;
    c.hidden_dims = std::move(hidden);
    c.activation = a;
    c.seed = seed;
    return init_params(c);
}

std::vector<SparseVector> random_inputs(std::mt19937_64& rng, size_t n, size_t dim) {
    std::vector<SparseVector> xs;
    for (size_t i = 0; i < n; ++i) xs.push_back(random_sparse(rng, dim));
    return xs;
}

}  // namespace

TEST(Activation, SeluConstants) {
    EXPECT_EQ(activate(0.0, Activation::Selu), 0.0);
    EXPECT_NEAR(activate(1.0, Activation::Selu), 1.0507009873554805, 1e-12);
    EXPECT_NEAR(activate(-50.0, Activation::Selu), -kSeluLambda * kSeluAlpha, 1e-6);
    EXPECT_NEAR(-kSeluLambda * kSeluAlpha, -1.758099, 1e-6);
    EXPECT_NEAR(activate_derivative(2.0, Activation::Selu), kSeluLambda, 1e-15);
    EXPECT_NEAR(activate_derivative(-1.0, Activation::Selu), kSeluLambda * kSeluAlpha * std::exp(-1.0),
                1e-15);
}

TEST(Activation, ReluTanhAndTokens) {
    EXPECT_EQ(activate(-3.0, Activation::Relu), 0.0);
    EXPECT_EQ(activate(3.0, Activation::Relu), 3.0);
    EXPECT_EQ(activate_derivative(3.0, Activation::Relu), 1.0);
    EXPECT_EQ(activate_derivative(-3.0, Activation::Relu), 0.0);
    EXPECT_DOUBLE_EQ(activate(0.5, Activation::Tanh), std::tanh(0.5));
    EXPECT_DOUBLE_EQ(activate_derivative(0.5, Activation::Tanh), 1.0 - std::tanh(0.5) * std::tanh(0.5));
    for (auto a : kAll) EXPECT_EQ(parse_activation(activation_token(a)), a);
    EXPECT_FALSE(parse_activation("sigmoid"));
    std::vector<double> v = {-1.0, 2.0};
    activate_inplace(v, Activation::Relu);
    EXPECT_EQ(v, (std::vector<double>{0.0, 2.0}));
}

TEST(Forward, ZeroParametersGiveOneHalf) {
    auto p = small_net(Activation::Selu, {4, 4}).zeros_like();
    SparseVector x{{1, 5}, {3.0, 1.0}};
    EXPECT_EQ(forward(p, x.view()), 0.5);
}

TEST(Forward, HandComputedSingleUnit) {
    MLPParams p;
    p.activation = Activation::Tanh;
    p.layers.emplace_back(2, 1);
    p.layers.emplace_back(1, 1);
    p.layers[0].weight(0, 0) = 0.5;
    p.layers[0].weight(0, 1) = -0.25;
    p.layers[0].bias[0] = 0.1;
    p.layers[1].weight(0, 0) = 2.0;
    p.layers[1].bias[0] = -0.3;
    SparseVector x{{0, 1}, {1.0, 2.0}};
    EXPECT_NEAR(forward(p, x.view()), 0.4748552269021189, 1e-15);
}

TEST(Forward, SparseMatchesDense) {
    std::mt19937_64 rng(2);
    for (auto a : kAll) {
        auto p = small_net(a, {16, 8, 8}, 40);
        for (const auto& x : random_inputs(rng, 20, 40)) {
            EXPECT_NEAR(forward(p, x.view()), forward_dense(p, x.to_dense(40)), 1e-12);
        }
    }
}

TEST(Forward, StrictlyInsideUnitInterval) {
    auto p = small_net(Activation::Selu, {2}).zeros_like();
    SparseVector none;
    p.layers.back().bias[0] = 1000.0;
    EXPECT_LT(forward(p, none.view()), 1.0);
    p.layers.back().bias[0] = -1000.0;
    EXPECT_GT(forward(p, none.view()), 0.0);
    EXPECT_TRUE(std::isfinite(logistic_loss(-1000.0, 1.0)));
    EXPECT_DOUBLE_EQ(logistic_loss(-1000.0, 1.0), 1000.0);
}

TEST(Forward, RejectsOutOfRangeInput) {
    auto p = small_net(Activation::Selu, {2}, 4);
    SparseVector x{{4}, {1.0}};
    EXPECT_THROW(forward(p, x.view()), Error);
    EXPECT_THROW(forward_dense(p, std::vector<double>(3)), Error);
}

TEST(Loss, AnalyticCases) {
    EXPECT_DOUBLE_EQ(logistic_loss(0.0, 1.0), std::log(2.0));
    EXPECT_DOUBLE_EQ(logistic_loss(0.0, 0.0), std::log(2.0));

    auto p = small_net(Activation::Selu, {3}).zeros_like();
    p.layers.back().bias[0] = 800.0;
    SparseVector x;
    std::vector<SparseRow> rows = {x.view()};
    std::vector<double> y = {1.0};
    auto lg = loss_and_gradients(p, rows, y);
    EXPECT_EQ(lg.loss, 0.0);
    EXPECT_EQ(lg.gradients.layers.back().bias[0], 0.0);
    for (double g : lg.gradients.layers.back().weights) EXPECT_EQ(g, 0.0);
}

TEST(Loss, BatchIsMeanOfExamples) {
    std::mt19937_64 rng(4);
    auto p = small_net(Activation::Tanh, {8, 8}, 20);
    auto xs = random_inputs(rng, 17, 20);
    std::vector<double> ys;
    std::vector<SparseRow> rows;
    for (size_t i = 0; i < xs.size(); ++i) {
        ys.push_back(double(i % 2));
        rows.push_back(xs[i].view());
    }
    EXPECT_NEAR(loss_and_gradients(p, rows, ys).loss, batch_loss(p, xs, ys), 1e-12);
}

TEST(Loss, GradientCheck) {
    std::mt19937_64 rng(5);
    for (auto a : kAll) {
        for (std::vector<size_t> hidden : {std::vector<size_t>{6}, std::vector<size_t>{5, 4, 3}}) {
            auto p = small_net(a, hidden, 10, 9);
            for (auto& l : p.layers) for (double& b : l.bias) b = 0.05;
            auto xs = random_inputs(rng, 6, 10);
            std::vector<double> ys = {1, 0, 1, 1, 0, 0};
            EXPECT_LT(gradient_check(p, xs, ys), 1e-4) << activation_token(a) << " depth "
                                                       << hidden.size();
        }
    }
}

TEST(Loss, NonFiniteReportsLayer) {
    auto p = small_net(Activation::Selu, {3, 3});
    p.layers[1].bias[0] = std::nan("");
    SparseVector x{{0}, {1.0}};
    std::vector<SparseRow> rows = {x.view()};
    std::vector<double> y = {1.0};
    try {
        loss_and_gradients(p, rows, y);
        FAIL() << "expected a numeric error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numeric);
        EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
    }
}

TEST(Init, ShapesAndScale) {
    auto p = small_net(Activation::Selu, {400, 7}, 900, 3);
    ASSERT_EQ(p.layers.size(), 3u);
    EXPECT_EQ(p.hidden_dims(), (std::vector<size_t>{400, 7}));
    EXPECT_EQ(p.input_dim(), 900u);
    EXPECT_EQ(p.parameter_count(), 900u * 400 + 400 + 400 * 7 + 7 + 7 + 1);
    double sum = 0, sq = 0;
    for (double w : p.layers[0].weights) {
        sum += w;
        sq += w * w;
    }
    const double n = double(p.layers[0].weights.size());
    EXPECT_NEAR(sum / n, 0.0, 1e-3);
    EXPECT_NEAR(std::sqrt(sq / n), 1.0 / 30.0, 1e-3);
    for (double b : p.layers[0].bias) EXPECT_EQ(b, 0.0);
    EXPECT_EQ(p, small_net(Activation::Selu, {400, 7}, 900, 3));
    EXPECT_NE(p, small_net(Activation::Selu, {400, 7}, 900, 4));
}

TEST(Adam, ZeroGradientLeavesParameters) {
    auto p = small_net(Activation::Selu, {4});
    auto before = p;
    auto state = AdamState::fresh(p);
    adam_step(p, p.zeros_like(), state);
    EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepUnitGradient) {
    auto p = small_net(Activation::Selu, {4});
    auto before = p;
    auto g = p.zeros_like();
    for_each_parameter(g, [](double& v) { v = 1.0; });
    auto state = AdamState::fresh(p);
    adam_step(p, g, state);
    EXPECT_EQ(state.step, 1u);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        for (size_t i = 0; i < p.layers[l].weights.size(); ++i) {
            EXPECT_NEAR(p.layers[l].weights[i] - before.layers[l].weights[i], -0.0009999999900000003,
                        1e-15);
        }
    }
}

TEST(Adam, OddInGradient) {
    std::mt19937_64 rng(8);
    auto p = small_net(Activation::Tanh, {5}, 6);
    auto g = p.zeros_like();
    std::normal_distribution<double> normal;
    for_each_parameter(g, [&](double& v) { v = normal(rng); });
    auto neg = g;
    for_each_parameter(neg, [](double& v) { v = -v; });
    auto a = p, b = p;
    auto sa = AdamState::fresh(p), sb = AdamState::fresh(p);
    adam_step(a, g, sa);
    adam_step(b, neg, sb);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        for (size_t i = 0; i < p.layers[l].weights.size(); ++i) {
            EXPECT_EQ(a.layers[l].weights[i] - p.layers[l].weights[i],
                      -(b.layers[l].weights[i] - p.layers[l].weights[i]));
        }
    }
    for_each_parameter(sa.second_moment, [](double& v) { EXPECT_GE(v, 0.0); });
}

TEST(Checkpoint, RoundTripAndRejections) {
    testutil::TempDir dir;
    auto p = small_net(Activation::Relu, {7, 3}, 11);
    save_checkpoint(dir / "m.ckpt", p, "abc123");
    auto c = load_checkpoint(dir / "m.ckpt");
    EXPECT_EQ(c.params, p);
    EXPECT_EQ(c.vocabulary_checksum, "abc123");

    auto bytes = testutil::slurp(dir / "m.ckpt");
    EXPECT_EQ(bytes.substr(0, 8), "PALCAREM");
    dir.write("trailing.ckpt", bytes + "x");
    EXPECT_THROW(load_checkpoint(dir / "trailing.ckpt"), Error);
    dir.write("short.ckpt", bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(load_checkpoint(dir / "short.ckpt"), Error);
    dir.write("magic.ckpt", "PALCAREX" + bytes.substr(8));
    EXPECT_THROW(load_checkpoint(dir / "magic.ckpt"), Error);
    EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), Error);
}
