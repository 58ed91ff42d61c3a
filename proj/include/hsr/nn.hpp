#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hsr/tensor.hpp"

namespace hsr {

struct ConvLayer {
    std::size_t in_channels = 0;
    std::size_t out_filters = 0;
    std::size_t kernel_size = 0;
    // out_filters x kernel_size x kernel_size x in_channels, row-major.
    std::vector<double> weights;
    std::vector<double> biases;

    ConvLayer() = default;
    ConvLayer(std::size_t in_channels, std::size_t out_filters, std::size_t kernel_size);

    std::size_t weight_count() const { return out_filters * kernel_size * kernel_size * in_channels; }
    std::size_t parameter_count() const { return weight_count() + out_filters; }

    double& weight(std::size_t f, std::size_t ky, std::size_t kx, std::size_t c) {
        return weights[((f * kernel_size + ky) * kernel_size + kx) * in_channels + c];
    }
    double weight(std::size_t f, std::size_t ky, std::size_t kx, std::size_t c) const {
        return weights[((f * kernel_size + ky) * kernel_size + kx) * in_channels + c];
    }
};

struct ConvGrads {
    Tensor input;
    std::vector<double> weights;
    std::vector<double> biases;
};

// Zero-padded "same" cross-correlation.
Tensor conv_forward(const ConvLayer& layer, const Tensor& input);
ConvGrads conv_backward(const ConvLayer& layer, const Tensor& input, const Tensor& upstream_grad);

struct LossResult {
    double loss = 0.0;
    Tensor grad;
};

// Per-element mean squared error and its gradient w.r.t. prediction.
LossResult mse_loss(const Tensor& prediction, const Tensor& target);

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class AdamState {
public:
    AdamState(std::size_t parameter_count, AdamConfig config = {});

    const AdamConfig& config() const { return config_; }
    std::uint64_t step_count() const { return step_; }
    std::size_t size() const { return m_.size(); }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }

    // Bias-corrected Adam update, in place.
    void step(std::span<double> params, std::span<const double> grads);

private:
    AdamConfig config_;
    std::uint64_t step_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

// He-normal weights, zero biases; fully determined by seed.
ConvLayer init_layer(std::size_t in_channels, std::size_t out_filters, std::size_t kernel_size,
                     std::uint64_t seed);

struct LayerComplexity {
    std::size_t in_channels = 0;   // n_{l-1}
    std::size_t kernel_size = 0;   // s_l
    std::size_t out_filters = 0;   // n_l
    std::size_t out_height = 0;    // m_l (rows)
    std::size_t out_width = 0;     // m_l (cols)
    std::uint64_t parameters = 0;
    std::uint64_t macs = 0;
};

struct ComplexityReport {
    std::size_t depth = 0;
    std::vector<LayerComplexity> layers;
    std::uint64_t total_macs = 0;
    std::uint64_t total_parameters = 0;
    std::size_t total_filters = 0;
};

LayerComplexity layer_complexity(const ConvLayer& layer, std::size_t out_height, std::size_t out_width);

}  // namespace hsr
