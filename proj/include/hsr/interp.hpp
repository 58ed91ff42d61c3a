#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsr/tensor.hpp"

namespace hsr {

enum class InterpKind { Nearest, Bilinear, Bicubic };

std::string_view to_string(InterpKind kind);
std::optional<InterpKind> parse_interp_kind(std::string_view name);

// One of 2, 4, 1/2, 1/4.
struct ScaleFactor {
    int num = 1;
    int den = 1;

    static ScaleFactor up(int factor) { return {factor, 1}; }
    static ScaleFactor down(int factor) { return {1, factor}; }

    bool supported() const;
    double value() const { return static_cast<double>(num) / den; }
    friend bool operator==(const ScaleFactor&, const ScaleFactor&) = default;
};

std::string to_string(ScaleFactor s);

// Keys cubic convolution kernel, a = -0.5.
double keys_cubic(double x);

// Per-axis taps of a separable resampler: every output index reads exactly
// `taps` source indices (clamped to the edge, so they may repeat).
struct AxisPlan {
    std::size_t source = 0;
    std::size_t target = 0;
    std::size_t taps = 0;
    std::vector<std::size_t> index;  // target * taps
    std::vector<double> weight;      // target * taps
};

AxisPlan make_axis_plan(InterpKind kind, ScaleFactor scale, std::size_t source);

class ResamplePlan {
public:
    ResamplePlan(InterpKind kind, ScaleFactor scale, std::size_t src_height, std::size_t src_width);

    InterpKind kind() const { return kind_; }
    ScaleFactor scale() const { return scale_; }
    std::size_t source_height() const { return rows_.source; }
    std::size_t source_width() const { return cols_.source; }
    std::size_t target_height() const { return rows_.target; }
    std::size_t target_width() const { return cols_.target; }
    // 1, 4 or 16 source taps per output pixel.
    std::size_t taps_per_pixel() const { return rows_.taps * cols_.taps; }
    const AxisPlan& rows() const { return rows_; }
    const AxisPlan& cols() const { return cols_; }

    Tensor apply(const Tensor& image) const;
    // Transpose of apply: scatters target-space values back onto source pixels.
    Tensor apply_transpose(const Tensor& target_grad) const;

private:
    InterpKind kind_;
    ScaleFactor scale_;
    AxisPlan rows_;
    AxisPlan cols_;
};

// Channels are resampled independently and are not clamped.
Tensor resample(const Tensor& image, InterpKind kind, ScaleFactor scale);
inline Tensor upscale(const Tensor& image, InterpKind kind, int factor) {
    return resample(image, kind, ScaleFactor::up(factor));
}
inline Tensor downscale(const Tensor& image, InterpKind kind, int factor) {
    return resample(image, kind, ScaleFactor::down(factor));
}

inline constexpr double kDefaultBlurSigma = 1.0;

std::vector<double> gaussian_kernel_1d(int kernel_size, double sigma = kDefaultBlurSigma);

// Normalized Gaussian, clamp-to-edge borders, shape preserved.
Tensor gaussian_blur(const Tensor& image, int kernel_size = 5, double sigma = kDefaultBlurSigma);

// Blur then keep every second row and column; repeated log2(factor) times.
Tensor pyramid_downsample(const Tensor& image, int factor);

}  // namespace hsr
