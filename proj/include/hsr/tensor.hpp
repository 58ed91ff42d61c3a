#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsr {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Shape {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;

    std::size_t size() const { return height * width * channels; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// Dense height x width x channels array, channel-interleaved row-major.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
    Tensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);
    explicit Tensor(const Shape& shape, double fill = 0.0)
        : Tensor(shape.height, shape.width, shape.channels, fill) {}

    std::size_t height() const { return shape_.height; }
    std::size_t width() const { return shape_.width; }
    std::size_t channels() const { return shape_.channels; }
    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t y, std::size_t x, std::size_t c) {
        return data_[(y * shape_.width + x) * shape_.channels + c];
    }
    const double& operator()(std::size_t y, std::size_t x, std::size_t c) const {
        return data_[(y * shape_.width + x) * shape_.channels + c];
    }
    double& operator[](std::size_t i) { return data_[i]; }
    const double& operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    Tensor channel(std::size_t c) const;
    Tensor crop(std::size_t y0, std::size_t x0, std::size_t height, std::size_t width) const;

    Tensor& operator+=(const Tensor& other);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// Channels of each input are laid out in list order.
Tensor concat_channels(std::span<const Tensor> inputs);
Tensor concat_channels(std::initializer_list<Tensor> inputs);

// Inverse of concat_channels: splits `t` into consecutive channel groups.
std::vector<Tensor> split_channels(const Tensor& t, std::span<const std::size_t> counts);

Tensor relu(const Tensor& input);
// d relu / d input, with the derivative at exactly 0 taken as 0.
Tensor relu_backward(const Tensor& input, const Tensor& upstream_grad);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace hsr
