#include <gtest/gtest.h>

#include "hsr/interp.hpp"
#include "oracles.hpp"

using hsr::InterpKind;
using hsr::Tensor;

namespace {

constexpr InterpKind kKinds[] = {InterpKind::Nearest, InterpKind::Bilinear, InterpKind::Bicubic};

}  // namespace

TEST(Interp, NearestUpscaleRepeatsPixels) {
    const Tensor in(2, 2, 1, {1, 2, 3, 4});
    const Tensor expect(4, 4, 1, {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4});
    EXPECT_EQ(hsr::upscale(in, InterpKind::Nearest, 2), expect);
}

TEST(Interp, ConstantImageStaysConstant) {
    for (InterpKind k : kKinds)
        for (hsr::ScaleFactor s : {hsr::ScaleFactor::up(2), hsr::ScaleFactor::up(4), hsr::ScaleFactor::down(2),
                                   hsr::ScaleFactor::down(4)}) {
            const Tensor out = hsr::resample(Tensor(8, 12, 3, 42.5), k, s);
            EXPECT_EQ(out.height(), static_cast<std::size_t>(8 * s.value()));
            EXPECT_EQ(out.width(), static_cast<std::size_t>(12 * s.value()));
            for (double v : out.values()) EXPECT_NEAR(v, 42.5, 1e-12);
        }
}

TEST(Interp, BicubicMatchesDirectKernelSum) {
    std::mt19937_64 rng(11);
    const Tensor in = oracle::random_tensor(8, 8, 3, rng, 0, 255);
    EXPECT_LT(hsr::max_abs_diff(hsr::upscale(in, InterpKind::Bicubic, 2), oracle::resample(in, InterpKind::Bicubic, 2)),
              1e-9);
}

TEST(Interp, AllKindsMatchOracleAcrossScales) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor in = oracle::random_tensor(8 + trial, 12 - trial, 2, rng, 0, 255);
        for (InterpKind k : kKinds) {
            EXPECT_LT(hsr::max_abs_diff(hsr::upscale(in, k, 2), oracle::resample(in, k, 2.0)), 1e-9);
            EXPECT_LT(hsr::max_abs_diff(hsr::upscale(in, k, 4), oracle::resample(in, k, 4.0)), 1e-9);
        }
    }
}

TEST(Interp, DownscaleMatchesOracle) {
    std::mt19937_64 rng(13);
    const Tensor in = oracle::random_tensor(16, 24, 3, rng, 0, 255);
    for (InterpKind k : kKinds) {
        EXPECT_LT(hsr::max_abs_diff(hsr::downscale(in, k, 2), oracle::resample(in, k, 0.5)), 1e-9);
        EXPECT_LT(hsr::max_abs_diff(hsr::downscale(in, k, 4), oracle::resample(in, k, 0.25)), 1e-9);
    }
}

TEST(Interp, NearestDownscaleTakesTopLeftOfBlock) {
    std::mt19937_64 rng(14);
    const Tensor in = oracle::random_tensor(6, 8, 2, rng);
    const Tensor out = hsr::downscale(in, InterpKind::Nearest, 2);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(out(y, x, c), in(2 * y, 2 * x, c));
}

TEST(Interp, KeysKernelValues) {
    EXPECT_DOUBLE_EQ(hsr::keys_cubic(0.0), 1.0);
    EXPECT_DOUBLE_EQ(hsr::keys_cubic(1.0), 0.0);
    EXPECT_DOUBLE_EQ(hsr::keys_cubic(2.0), 0.0);
    EXPECT_DOUBLE_EQ(hsr::keys_cubic(0.5), 0.5625);
    EXPECT_DOUBLE_EQ(hsr::keys_cubic(-1.5), -0.0625);
    for (double x = -2.5; x <= 2.5; x += 0.01) EXPECT_NEAR(hsr::keys_cubic(x), oracle::cubic(x), 1e-14);
}

TEST(Interp, PlanWeightsSumToOne) {
    for (InterpKind k : kKinds) {
        const hsr::AxisPlan p = hsr::make_axis_plan(k, hsr::ScaleFactor::up(4), 7);
        EXPECT_EQ(p.target, 28u);
        for (std::size_t d = 0; d < p.target; ++d) {
            double s = 0.0;
            for (std::size_t t = 0; t < p.taps; ++t) s += p.weight[d * p.taps + t];
            EXPECT_NEAR(s, 1.0, 1e-14);
        }
    }
}

TEST(Interp, TapsPerPixel) {
    EXPECT_EQ(hsr::ResamplePlan(InterpKind::Nearest, hsr::ScaleFactor::up(2), 4, 4).taps_per_pixel(), 1u);
    EXPECT_EQ(hsr::ResamplePlan(InterpKind::Bilinear, hsr::ScaleFactor::up(2), 4, 4).taps_per_pixel(), 4u);
    EXPECT_EQ(hsr::ResamplePlan(InterpKind::Bicubic, hsr::ScaleFactor::up(2), 4, 4).taps_per_pixel(), 16u);
}

TEST(Interp, UnsupportedScaleThrows) {
    EXPECT_THROW(hsr::resample(Tensor(4, 4, 1), InterpKind::Bicubic, {3, 1}), std::invalid_argument);
}

TEST(Interp, TransposeIsAdjoint) {
    std::mt19937_64 rng(15);
    for (InterpKind k : kKinds) {
        const hsr::ResamplePlan plan(k, hsr::ScaleFactor::up(2), 5, 7);
        const Tensor x = oracle::random_tensor(5, 7, 3, rng), g = oracle::random_tensor(10, 14, 3, rng);
        const Tensor ax = plan.apply(x), atg = plan.apply_transpose(g);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < ax.size(); ++i) lhs += ax[i] * g[i];
        for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * atg[i];
        EXPECT_NEAR(lhs, rhs, 1e-10);
    }
}

TEST(Interp, NearestTransposeSumsBlocks) {
    std::mt19937_64 rng(16);
    const Tensor g = oracle::random_tensor(8, 8, 1, rng);
    const Tensor back = hsr::ResamplePlan(InterpKind::Nearest, hsr::ScaleFactor::up(2), 4, 4).apply_transpose(g);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            EXPECT_DOUBLE_EQ(back(y, x, 0),
                             g(2 * y, 2 * x, 0) + g(2 * y, 2 * x + 1, 0) + g(2 * y + 1, 2 * x, 0) +
                                 g(2 * y + 1, 2 * x + 1, 0));
}

TEST(Blur, ConstantImageUnchanged) {
    const Tensor out = hsr::gaussian_blur(Tensor(7, 9, 3, 17.0));
    for (double v : out.values()) EXPECT_NEAR(v, 17.0, 1e-12);
}

TEST(Blur, ImpulseGivesKernel) {
    Tensor in(9, 9, 1);
    in(4, 4, 0) = 1.0;
    const Tensor out = hsr::gaussian_blur(in, 5, 1.0);
    double norm = 0.0;
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) norm += std::exp(-(dy * dy + dx * dx) / 2.0);
    for (int dy = -4; dy <= 4; ++dy)
        for (int dx = -4; dx <= 4; ++dx) {
            const double expect =
                (std::abs(dy) <= 2 && std::abs(dx) <= 2) ? std::exp(-(dy * dy + dx * dx) / 2.0) / norm : 0.0;
            EXPECT_NEAR(out(static_cast<std::size_t>(4 + dy), static_cast<std::size_t>(4 + dx), 0), expect, 1e-15);
        }
}

TEST(Blur, MatchesDirectConvolution) {
    std::mt19937_64 rng(17);
    const Tensor in = oracle::random_tensor(12, 10, 3, rng, 0, 255);
    const Tensor got = hsr::gaussian_blur(in), want = oracle::blur(in, 5, 1.0);
    EXPECT_LT(hsr::max_abs_diff(got, want), 1e-9);
}

TEST(Blur, EvenKernelRejected) { EXPECT_THROW(hsr::gaussian_kernel_1d(4), std::invalid_argument); }

TEST(Pyramid, ConstantImage) {
    const Tensor out = hsr::pyramid_downsample(Tensor(16, 8, 3, 90.0), 4);
    EXPECT_EQ(out.shape(), (hsr::Shape{4, 2, 3}));
    for (double v : out.values()) EXPECT_NEAR(v, 90.0, 1e-12);
}

TEST(Pyramid, CheckerboardBecomesMidGray) {
    Tensor board(4, 4, 1);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) board(y, x, 0) = (x + y) % 2 ? 255.0 : 0.0;
    const Tensor out = hsr::pyramid_downsample(board, 2);
    ASSERT_EQ(out.shape(), (hsr::Shape{2, 2, 1}));
    const Tensor blurred = oracle::blur(board, 5, 1.0);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 2; ++x) EXPECT_NEAR(out(y, x, 0), blurred(2 * y, 2 * x, 0), 1e-9);
    // Hand-evaluated with edge replication, which breaks the pattern's
    // parity at the border; only the interior sample is near mid-gray.
    EXPECT_NEAR(out(0, 0, 0), 94.129193749, 1e-6);
    EXPECT_NEAR(out(0, 1, 0), 133.095492800, 1e-6);
    EXPECT_NEAR(out(1, 0, 0), 133.095492800, 1e-6);
    EXPECT_NEAR(out(1, 1, 0), 126.561768560, 1e-6);
}

TEST(Pyramid, InteriorOfLargeCheckerboardIsMidGray) {
    Tensor board(32, 32, 1);
    for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x) board(y, x, 0) = (x + y) % 2 ? 255.0 : 0.0;
    const Tensor out = hsr::pyramid_downsample(board, 2);
    // 127.5 (1 - a^2), a = alternating sum of the 1-D kernel.
    double a = 0.0;
    const auto k = hsr::gaussian_kernel_1d(5);
    for (std::size_t i = 0; i < 5; ++i) a += (i % 2 ? -1.0 : 1.0) * k[i];
    for (std::size_t y = 2; y < 14; ++y)
        for (std::size_t x = 2; x < 14; ++x) {
            EXPECT_NEAR(out(y, x, 0), 127.5 * (1.0 - a * a), 1e-9);
            EXPECT_NEAR(out(y, x, 0), 127.5, 0.1);
        }
}

TEST(Interp, NearestUpThenDownIsIdentity) {
    std::mt19937_64 rng(19);
    const Tensor in = oracle::random_tensor(5, 7, 3, rng);
    EXPECT_EQ(hsr::downscale(hsr::upscale(in, InterpKind::Nearest, 2), InterpKind::Nearest, 2), in);
}

TEST(Interp, NearestHasMoreVariationThanBilinearOnStep) {
    Tensor step(8, 8, 1);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 4; x < 8; ++x) step(y, x, 0) = 255.0;
    auto tv = [](const Tensor& t) {
        double s = 0.0;
        for (std::size_t y = 0; y < t.height(); ++y)
            for (std::size_t x = 1; x < t.width(); ++x) s += std::abs(t(y, x, 0) - t(y, x - 1, 0));
        return s;
    };
    EXPECT_GE(tv(hsr::upscale(step, InterpKind::Nearest, 2)), tv(hsr::upscale(step, InterpKind::Bilinear, 2)));
}

TEST(Interp, TwoDoublingsMatchQuadrupleShape) {
    const Tensor in(5, 9, 2);
    for (InterpKind k : kKinds)
        EXPECT_EQ(hsr::upscale(hsr::upscale(in, k, 2), k, 2).shape(), hsr::upscale(in, k, 4).shape());
}

TEST(Pyramid, FactorFourIsTwoTwice) {
    std::mt19937_64 rng(18);
    const Tensor in = oracle::random_tensor(16, 16, 3, rng, 0, 255);
    EXPECT_EQ(hsr::pyramid_downsample(in, 4), hsr::pyramid_downsample(hsr::pyramid_downsample(in, 2), 2));
}

TEST(Pyramid, RejectsIndivisible) {
    EXPECT_THROW(hsr::pyramid_downsample(Tensor(6, 6, 1), 4), hsr::ShapeError);
    EXPECT_THROW(hsr::pyramid_downsample(Tensor(8, 8, 1), 3), std::invalid_argument);
}
