#include "hsr/interp.hpp"

#include <algorithm>
#include <cmath>

namespace hsr {

std::string_view to_string(InterpKind kind) {
    switch (kind) {
        case InterpKind::Nearest: return "nearest";
        case InterpKind::Bilinear: return "bilinear";
        case InterpKind::Bicubic: return "bicubic";
    }
    return "?";
}

std::optional<InterpKind> parse_interp_kind(std::string_view name) {
    if (name == "nearest") return InterpKind::Nearest;
    if (name == "bilinear") return InterpKind::Bilinear;
    if (name == "bicubic") return InterpKind::Bicubic;
    return std::nullopt;
}

bool ScaleFactor::supported() const {
    return (den == 1 && (num == 2 || num == 4)) || (num == 1 && (den == 2 || den == 4));
}

std::string to_string(ScaleFactor s) {
    return s.den == 1 ? std::to_string(s.num) : std::to_string(s.num) + "/" + std::to_string(s.den);
}

double keys_cubic(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

namespace {

std::size_t clamp_index(long i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
}

}  // namespace

AxisPlan make_axis_plan(InterpKind kind, ScaleFactor scale, std::size_t source) {
    if (!scale.supported()) throw std::invalid_argument("unsupported resample scale " + to_string(scale));
    if (source == 0) throw ShapeError("cannot resample an empty axis");

    AxisPlan plan;
    plan.source = source;
    plan.target = static_cast<std::size_t>(std::lround(static_cast<double>(source) * scale.value()));
    if (plan.target == 0) throw ShapeError("resample target axis would be empty");
    plan.taps = kind == InterpKind::Nearest ? 1 : kind == InterpKind::Bilinear ? 2 : 4;
    plan.index.resize(plan.target * plan.taps);
    plan.weight.resize(plan.target * plan.taps);

    const double inv = static_cast<double>(scale.den) / scale.num;
    for (std::size_t d = 0; d < plan.target; ++d) {
        std::size_t* idx = plan.index.data() + d * plan.taps;
        double* w = plan.weight.data() + d * plan.taps;
        if (kind == InterpKind::Nearest) {
            // Source pixel whose footprint contains the target pixel's top-left corner.
            idx[0] = clamp_index(static_cast<long>(std::floor(static_cast<double>(d) * inv)), source);
            w[0] = 1.0;
            continue;
        }
        const double src = (static_cast<double>(d) + 0.5) * inv - 0.5;
        const double base = std::floor(src);
        const double t = src - base;
        const long i0 = static_cast<long>(base);
        if (kind == InterpKind::Bilinear) {
            idx[0] = clamp_index(i0, source);
            idx[1] = clamp_index(i0 + 1, source);
            w[0] = 1.0 - t;
            w[1] = t;
        } else {
            for (int k = 0; k < 4; ++k) {
                idx[k] = clamp_index(i0 - 1 + k, source);
                w[k] = keys_cubic(t - (k - 1));
            }
        }
    }
    return plan;
}

ResamplePlan::ResamplePlan(InterpKind kind, ScaleFactor scale, std::size_t src_height,
                           std::size_t src_width)
    : kind_(kind),
      scale_(scale),
      rows_(make_axis_plan(kind, scale, src_height)),
      cols_(make_axis_plan(kind, scale, src_width)) {}

Tensor ResamplePlan::apply(const Tensor& image) const {
    if (image.height() != rows_.source || image.width() != cols_.source)
        throw ShapeError("resample plan built for " + std::to_string(rows_.source) + "x" +
                         std::to_string(cols_.source) + ", got " + to_string(image.shape()));
    const std::size_t c = image.channels();

    Tensor horiz(rows_.source, cols_.target, c);
    for (std::size_t y = 0; y < rows_.source; ++y) {
        for (std::size_t x = 0; x < cols_.target; ++x) {
            double* out = &horiz(y, x, 0);
            for (std::size_t k = 0; k < cols_.taps; ++k) {
                const double w = cols_.weight[x * cols_.taps + k];
                const double* in = &image(y, cols_.index[x * cols_.taps + k], 0);
                for (std::size_t ch = 0; ch < c; ++ch) out[ch] += w * in[ch];
            }
        }
    }

    Tensor out(rows_.target, cols_.target, c);
    const std::size_t row = cols_.target * c;
    for (std::size_t y = 0; y < rows_.target; ++y) {
        double* dst = &out(y, 0, 0);
        for (std::size_t k = 0; k < rows_.taps; ++k) {
            const double w = rows_.weight[y * rows_.taps + k];
            const double* src = &horiz(rows_.index[y * rows_.taps + k], 0, 0);
            for (std::size_t i = 0; i < row; ++i) dst[i] += w * src[i];
        }
    }
    return out;
}

Tensor ResamplePlan::apply_transpose(const Tensor& target_grad) const {
    if (target_grad.height() != rows_.target || target_grad.width() != cols_.target)
        throw ShapeError("resample transpose expects " + std::to_string(rows_.target) + "x" +
                         std::to_string(cols_.target) + ", got " + to_string(target_grad.shape()));
    const std::size_t c = target_grad.channels();

    Tensor horiz(rows_.source, cols_.target, c);
    const std::size_t row = cols_.target * c;
    for (std::size_t y = 0; y < rows_.target; ++y) {
        const double* src = &target_grad(y, 0, 0);
        for (std::size_t k = 0; k < rows_.taps; ++k) {
            const double w = rows_.weight[y * rows_.taps + k];
            double* dst = &horiz(rows_.index[y * rows_.taps + k], 0, 0);
            for (std::size_t i = 0; i < row; ++i) dst[i] += w * src[i];
        }
    }

    Tensor out(rows_.source, cols_.source, c);
    for (std::size_t y = 0; y < rows_.source; ++y) {
        for (std::size_t x = 0; x < cols_.target; ++x) {
            const double* in = &horiz(y, x, 0);
            for (std::size_t k = 0; k < cols_.taps; ++k) {
                const double w = cols_.weight[x * cols_.taps + k];
                double* dst = &out(y, cols_.index[x * cols_.taps + k], 0);
                for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += w * in[ch];
            }
        }
    }
    return out;
}

Tensor resample(const Tensor& image, InterpKind kind, ScaleFactor scale) {
    if (image.empty()) throw ShapeError("resample: empty image");
    return ResamplePlan(kind, scale, image.height(), image.width()).apply(image);
}

std::vector<double> gaussian_kernel_1d(int kernel_size, double sigma) {
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("gaussian kernel size must be odd, got " + std::to_string(kernel_size));
    const int r = kernel_size / 2;
    std::vector<double> k(static_cast<std::size_t>(kernel_size));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i + r)];
    }
    for (double& v : k) v /= sum;
    return k;
}

Tensor gaussian_blur(const Tensor& image, int kernel_size, double sigma) {
    const std::vector<double> k = gaussian_kernel_1d(kernel_size, sigma);
    const long r = kernel_size / 2;
    const std::size_t h = image.height(), w = image.width(), c = image.channels();

    Tensor horiz(image.shape());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (long i = -r; i <= r; ++i) {
                const double wt = k[static_cast<std::size_t>(i + r)];
                const std::size_t sx = clamp_index(static_cast<long>(x) + i, w);
                for (std::size_t ch = 0; ch < c; ++ch) horiz(y, x, ch) += wt * image(y, sx, ch);
            }

    Tensor out(image.shape());
    for (std::size_t y = 0; y < h; ++y)
        for (long i = -r; i <= r; ++i) {
            const double wt = k[static_cast<std::size_t>(i + r)];
            const std::size_t sy = clamp_index(static_cast<long>(y) + i, h);
            for (std::size_t j = 0; j < w * c; ++j) out.data()[y * w * c + j] += wt * horiz.data()[sy * w * c + j];
        }
    return out;
}

Tensor pyramid_downsample(const Tensor& image, int factor) {
    if (factor != 2 && factor != 4) throw std::invalid_argument("pyramid factor must be 2 or 4");
    if (image.height() % factor != 0 || image.width() % factor != 0)
        throw ShapeError("pyramid_downsample: " + to_string(image.shape()) + " not divisible by " +
                         std::to_string(factor));
    Tensor level = image;
    for (int f = factor; f > 1; f /= 2) {
        const Tensor blurred = gaussian_blur(level);
        Tensor next(level.height() / 2, level.width() / 2, level.channels());
        for (std::size_t y = 0; y < next.height(); ++y)
            for (std::size_t x = 0; x < next.width(); ++x)
                for (std::size_t ch = 0; ch < next.channels(); ++ch)
                    next(y, x, ch) = blurred(2 * y, 2 * x, ch);
        level = std::move(next);
    }
    return level;
}

}  // namespace hsr
