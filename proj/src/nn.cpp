#include "hsr/nn.hpp"

#include <Eigen/Core>
#include <cmath>
#include <random>

namespace hsr {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

// One row per output pixel holding its ky, kx, c receptive field (zeros outside).
RowMatrix im2col(const Tensor& input, std::size_t k) {
    const std::size_t h = input.height(), w = input.width(), c = input.channels();
    const long pad = static_cast<long>(k / 2);
    RowMatrix cols = RowMatrix::Zero(static_cast<long>(h * w), static_cast<long>(k * k * c));
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double* row = cols.data() + (y * w + x) * k * k * c;
            for (std::size_t ky = 0; ky < k; ++ky) {
                const long sy = static_cast<long>(y + ky) - pad;
                if (sy < 0 || sy >= static_cast<long>(h)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const long sx = static_cast<long>(x + kx) - pad;
                    if (sx < 0 || sx >= static_cast<long>(w)) continue;
                    const double* src = &input(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), 0);
                    std::copy(src, src + c, row + (ky * k + kx) * c);
                }
            }
        }
    }
    return cols;
}

void col2im_add(const RowMatrix& cols, std::size_t k, Tensor& out) {
    const std::size_t h = out.height(), w = out.width(), c = out.channels();
    const long pad = static_cast<long>(k / 2);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double* row = cols.data() + (y * w + x) * k * k * c;
            for (std::size_t ky = 0; ky < k; ++ky) {
                const long sy = static_cast<long>(y + ky) - pad;
                if (sy < 0 || sy >= static_cast<long>(h)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const long sx = static_cast<long>(x + kx) - pad;
                    if (sx < 0 || sx >= static_cast<long>(w)) continue;
                    double* dst = &out(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), 0);
                    const double* src = row + (ky * k + kx) * c;
                    for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
                }
            }
        }
    }
}

void check_layer(const ConvLayer& layer) {
    if (layer.weights.size() != layer.weight_count() || layer.biases.size() != layer.out_filters)
        throw ShapeError("conv layer parameter arrays do not match its dimensions");
}

}  // namespace

ConvLayer::ConvLayer(std::size_t in, std::size_t out, std::size_t k)
    : in_channels(in), out_filters(out), kernel_size(k) {
    if (k != 1 && k != 3 && k != 5) throw std::invalid_argument("kernel size must be 1, 3 or 5");
    if (in == 0 || out == 0) throw std::invalid_argument("conv layer needs at least one channel and filter");
    weights.assign(weight_count(), 0.0);
    biases.assign(out, 0.0);
}

Tensor conv_forward(const ConvLayer& layer, const Tensor& input) {
    check_layer(layer);
    if (input.channels() != layer.in_channels)
        throw ShapeError("conv_forward: layer expects " + std::to_string(layer.in_channels) +
                         " channels, input has " + std::to_string(input.channels()));
    const std::size_t k = layer.kernel_size;
    const long pixels = static_cast<long>(input.height() * input.width());
    const long fan_in = static_cast<long>(k * k * layer.in_channels);
    const long filters = static_cast<long>(layer.out_filters);

    Tensor out(input.height(), input.width(), layer.out_filters);
    MutMap o(out.data(), pixels, filters);
    ConstMap w(layer.weights.data(), filters, fan_in);
    if (k == 1) {
        o.noalias() = ConstMap(input.data(), pixels, fan_in) * w.transpose();
    } else {
        const RowMatrix cols = im2col(input, k);
        o.noalias() = cols * w.transpose();
    }
    o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(layer.biases.data(), filters);
    return out;
}

ConvGrads conv_backward(const ConvLayer& layer, const Tensor& input, const Tensor& upstream_grad) {
    check_layer(layer);
    if (input.channels() != layer.in_channels)
        throw ShapeError("conv_backward: input channel mismatch");
    if (upstream_grad.height() != input.height() || upstream_grad.width() != input.width() ||
        upstream_grad.channels() != layer.out_filters)
        throw ShapeError("conv_backward: upstream gradient " + to_string(upstream_grad.shape()) +
                         " does not match output shape");
    const std::size_t k = layer.kernel_size;
    const long pixels = static_cast<long>(input.height() * input.width());
    const long fan_in = static_cast<long>(k * k * layer.in_channels);
    const long filters = static_cast<long>(layer.out_filters);

    ConvGrads g;
    g.weights.assign(layer.weight_count(), 0.0);
    g.biases.assign(layer.out_filters, 0.0);
    g.input = Tensor(input.shape());

    ConstMap up(upstream_grad.data(), pixels, filters);
    ConstMap w(layer.weights.data(), filters, fan_in);
    MutMap gw(g.weights.data(), filters, fan_in);
    // Plain loop: Eigen's vectorized reductions reorder sums by buffer alignment.
    for (long p = 0; p < pixels; ++p)
        for (long f = 0; f < filters; ++f) g.biases[static_cast<std::size_t>(f)] += up(p, f);

    if (k == 1) {
        gw.noalias() = up.transpose() * ConstMap(input.data(), pixels, fan_in);
        MutMap(g.input.data(), pixels, fan_in).noalias() = up * w;
    } else {
        const RowMatrix cols = im2col(input, k);
        gw.noalias() = up.transpose() * cols;
        const RowMatrix dcols = up * w;
        col2im_add(dcols, k, g.input);
    }
    return g;
}

LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
    require_same_shape(prediction, target, "mse_loss");
    const double n = static_cast<double>(prediction.size());
    LossResult r;
    r.grad = Tensor(prediction.shape());
    double sum = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - target[i];
        sum += d * d;
        r.grad[i] = 2.0 * d / n;
    }
    r.loss = sum / n;
    return r;
}

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamState::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw ShapeError("adam step: expected " + std::to_string(m_.size()) + " parameters, got " +
                         std::to_string(params.size()) + " params and " + std::to_string(grads.size()) +
                         " grads");
    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
}

ConvLayer init_layer(std::size_t in_channels, std::size_t out_filters, std::size_t kernel_size,
                     std::uint64_t seed) {
    ConvLayer layer(in_channels, out_filters, kernel_size);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(
        0.0, std::sqrt(2.0 / static_cast<double>(kernel_size * kernel_size * in_channels)));
    for (double& w : layer.weights) w = normal(rng);
    return layer;
}

LayerComplexity layer_complexity(const ConvLayer& layer, std::size_t out_height, std::size_t out_width) {
    LayerComplexity c;
    c.in_channels = layer.in_channels;
    c.kernel_size = layer.kernel_size;
    c.out_filters = layer.out_filters;
    c.out_height = out_height;
    c.out_width = out_width;
    c.parameters = layer.parameter_count();
    c.macs = static_cast<std::uint64_t>(layer.in_channels) * layer.kernel_size * layer.kernel_size *
             layer.out_filters * out_height * out_width;
    return c;
}

}  // namespace hsr
