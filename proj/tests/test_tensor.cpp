#include <gtest/gtest.h>

#include "hsr/tensor.hpp"
#include "oracles.hpp"

using hsr::Tensor;

TEST(Tensor, RejectsZeroDimensions) {
    EXPECT_THROW(Tensor(0, 4, 3), hsr::ShapeError);
    EXPECT_THROW(Tensor(4, 4, 0), hsr::ShapeError);
    EXPECT_THROW(Tensor(2, 2, 1, std::vector<double>(3)), hsr::ShapeError);
}

TEST(Tensor, InterleavedLayout) {
    Tensor t(2, 3, 2);
    t(1, 2, 1) = 7.0;
    EXPECT_EQ(t[(1 * 3 + 2) * 2 + 1], 7.0);
}

TEST(Concat, TwoTensorsStackChannelsInOrder) {
    std::mt19937_64 rng(1);
    const Tensor a = oracle::random_tensor(4, 4, 3, rng), b = oracle::random_tensor(4, 4, 3, rng);
    const Tensor c = hsr::concat_channels({a, b});
    ASSERT_EQ(c.shape(), (hsr::Shape{4, 4, 6}));
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            for (std::size_t k = 0; k < 3; ++k) {
                EXPECT_EQ(c(y, x, k), a(y, x, k));
                EXPECT_EQ(c(y, x, k + 3), b(y, x, k));
            }
}

TEST(Concat, SingleInputIsIdentity) {
    std::mt19937_64 rng(2);
    const Tensor a = oracle::random_tensor(3, 5, 2, rng);
    EXPECT_EQ(hsr::concat_channels({a}), a);
}

TEST(Concat, ThreeUpsamplingBranches) {
    const Tensor a(32, 32, 8, 1.0), b(32, 32, 8, 2.0), c(32, 32, 8, 3.0);
    const Tensor out = hsr::concat_channels({a, b, c});
    EXPECT_EQ(out.shape(), (hsr::Shape{32, 32, 24}));
    EXPECT_EQ(out(5, 7, 23), 3.0);
}

TEST(Concat, SpatialMismatchThrows) {
    EXPECT_THROW(hsr::concat_channels({Tensor(4, 4, 1), Tensor(4, 5, 1)}), hsr::ShapeError);
}

TEST(Concat, SplitInverts) {
    std::mt19937_64 rng(3);
    const Tensor a = oracle::random_tensor(3, 3, 2, rng), b = oracle::random_tensor(3, 3, 5, rng);
    const std::vector<std::size_t> counts{2, 5};
    const auto parts = hsr::split_channels(hsr::concat_channels({a, b}), counts);
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[0], a);
    EXPECT_EQ(parts[1], b);
}

TEST(Relu, Examples) {
    const Tensor x(1, 3, 1, {-1.5, 0.0, 2.0});
    EXPECT_EQ(hsr::relu(x), Tensor(1, 3, 1, {0.0, 0.0, 2.0}));
    EXPECT_EQ(hsr::relu(Tensor(2, 2, 2, -3.0)), Tensor(2, 2, 2, 0.0));
    const Tensor pos(2, 2, 1, {0.0, 1.0, 2.0, 3.0});
    EXPECT_EQ(hsr::relu(pos), pos);
}

TEST(Relu, BackwardExamples) {
    EXPECT_EQ(hsr::relu_backward(Tensor(1, 2, 1, {-1.0, 2.0}), Tensor(1, 2, 1, {5.0, 5.0})),
              Tensor(1, 2, 1, {0.0, 5.0}));
    EXPECT_EQ(hsr::relu_backward(Tensor(1, 1, 1, {0.0}), Tensor(1, 1, 1, {3.0})), Tensor(1, 1, 1, {0.0}));
    std::mt19937_64 rng(4);
    const Tensor x = oracle::random_tensor(3, 3, 2, rng, 0.1, 1.0), g = oracle::random_tensor(3, 3, 2, rng);
    EXPECT_EQ(hsr::relu_backward(x, g), g);
}

TEST(Relu, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    Tensor x = oracle::random_tensor(4, 4, 3, rng, -1.0, 1.0);
    const Tensor w = oracle::random_tensor(4, 4, 3, rng, -1.0, 1.0);
    auto loss = [&] {
        const Tensor y = hsr::relu(x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
        return s;
    };
    const Tensor g = hsr::relu_backward(x, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + 1e-5;
        const double up = loss();
        x[i] = keep - 1e-5;
        const double down = loss();
        x[i] = keep;
        EXPECT_NEAR(g[i], (up - down) / 2e-5, 1e-6) << "element " << i;
    }
}
