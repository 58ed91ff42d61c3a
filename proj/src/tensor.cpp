#include "hsr/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace hsr {

std::string to_string(const Shape& s) {
    return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

Tensor::Tensor(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : shape_{height, width, channels} {
    if (height == 0 || width == 0 || channels == 0)
        throw ShapeError("tensor dimensions must be positive, got " + to_string(shape_));
    data_.assign(shape_.size(), fill);
}

Tensor::Tensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
    : shape_{height, width, channels}, data_(std::move(data)) {
    if (height == 0 || width == 0 || channels == 0)
        throw ShapeError("tensor dimensions must be positive, got " + to_string(shape_));
    if (data_.size() != shape_.size())
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match " +
                         to_string(shape_));
}

Tensor Tensor::channel(std::size_t c) const {
    if (c >= channels()) throw ShapeError("channel index out of range");
    Tensor out(height(), width(), 1);
    const std::size_t n = height() * width();
    for (std::size_t i = 0; i < n; ++i) out[i] = data_[i * channels() + c];
    return out;
}

Tensor Tensor::crop(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) const {
    if (y0 + h > height() || x0 + w > width())
        throw ShapeError("crop window exceeds tensor " + to_string(shape_));
    Tensor out(h, w, channels());
    const std::size_t row = w * channels();
    for (std::size_t y = 0; y < h; ++y) {
        const double* src = data() + ((y0 + y) * width() + x0) * channels();
        std::copy(src, src + row, out.data() + y * row);
    }
    return out;
}

Tensor& Tensor::operator+=(const Tensor& other) {
    require_same_shape(*this, other, "tensor +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
}

Tensor concat_channels(std::span<const Tensor> inputs) {
    if (inputs.empty()) throw ShapeError("concat_channels: empty input list");
    const std::size_t h = inputs.front().height();
    const std::size_t w = inputs.front().width();
    std::size_t total = 0;
    for (const Tensor& t : inputs) {
        if (t.height() != h || t.width() != w)
            throw ShapeError("concat_channels: spatial mismatch " + to_string(inputs.front().shape()) +
                             " vs " + to_string(t.shape()));
        total += t.channels();
    }
    Tensor out(h, w, total);
    double* dst = out.data();
    for (std::size_t p = 0; p < h * w; ++p) {
        for (const Tensor& t : inputs) {
            const double* src = t.data() + p * t.channels();
            dst = std::copy(src, src + t.channels(), dst);
        }
    }
    return out;
}

Tensor concat_channels(std::initializer_list<Tensor> inputs) {
    return concat_channels(std::span<const Tensor>(inputs.begin(), inputs.size()));
}

std::vector<Tensor> split_channels(const Tensor& t, std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    if (total != t.channels())
        throw ShapeError("split_channels: counts sum to " + std::to_string(total) + ", tensor has " +
                         std::to_string(t.channels()) + " channels");
    std::vector<Tensor> parts;
    parts.reserve(counts.size());
    for (std::size_t c : counts) parts.emplace_back(t.height(), t.width(), c);
    const double* src = t.data();
    for (std::size_t p = 0; p < t.height() * t.width(); ++p) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            std::copy(src, src + counts[i], parts[i].data() + p * counts[i]);
            src += counts[i];
        }
    }
    return parts;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.values()) v = std::max(v, 0.0);
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream_grad) {
    require_same_shape(input, upstream_grad, "relu_backward");
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? upstream_grad[i] : 0.0;
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace hsr
