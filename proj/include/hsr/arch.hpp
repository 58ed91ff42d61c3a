#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hsr/interp.hpp"
#include "hsr/nn.hpp"
#include "hsr/tensor.hpp"

namespace hsr {

enum class ArchName { I2C, CI2, CB2SNN, I4C, I2CI2C, BicubicCNN, BilinearCNN, NNCNN };

std::string_view to_string(ArchName name);
std::optional<ArchName> parse_arch_name(std::string_view name);
// Upscale factor the architecture is defined for (2 or 4).
int native_scale(ArchName name);
std::vector<ArchName> all_architectures();

enum class NodeKind { Input, Interp, Conv, Relu, Concat };

struct Node {
    NodeKind kind = NodeKind::Input;
    std::vector<std::size_t> inputs;  // indices of earlier nodes
    InterpKind interp = InterpKind::Nearest;
    int factor = 1;
    std::size_t layer = 0;  // Conv only
};

struct LayerDims {
    std::size_t in_channels = 0;
    std::size_t out_filters = 0;
    std::size_t kernel_size = 0;
    friend bool operator==(const LayerDims&, const LayerDims&) = default;
};

// Topologically ordered graph; node 0 is the input image, the last node the output.
struct ArchitectureSpec {
    ArchName name = ArchName::I2C;
    int scale = 2;
    bool final_relu = false;
    std::vector<Node> nodes;
    std::vector<LayerDims> layers;

    std::size_t output() const { return nodes.size() - 1; }
};

struct BuildOptions {
    // Apply ReLU after the output convolution as well.
    bool final_relu = false;
};

ArchitectureSpec make_spec(ArchName name, int scale, BuildOptions options = {});

struct Model {
    ArchitectureSpec spec;
    std::vector<ConvLayer> layers;
    std::uint64_t seed = 0;

    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);
};

Model build(ArchName name, int scale, std::uint64_t seed, BuildOptions options = {});

std::vector<Shape> infer_shapes(const ArchitectureSpec& spec, std::size_t height, std::size_t width);

struct ForwardTrace {
    std::vector<Tensor> values;  // one per node
    const Tensor& output() const { return values.back(); }
};

ForwardTrace forward_trace(const Model& model, const Tensor& input);
Tensor forward(const Model& model, const Tensor& input);

struct ModelGrads {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    Tensor input;

    // Same order as Model::parameters().
    std::vector<double> flat() const;
};

ModelGrads backward(const Model& model, const ForwardTrace& trace, const Tensor& upstream_grad);

ComplexityReport complexity(const Model& model, std::size_t in_height, std::size_t in_width);

class ModelFileError : public std::runtime_error {
public:
    enum class Kind { Io, Truncated, BadMagic, UnsupportedVersion, ChecksumMismatch, Malformed, SpecMismatch };
    ModelFileError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize(const Model& model);
Model deserialize(std::span<const std::uint8_t> bytes);

// Writes to a sibling temp file and renames it into place.
void save(const Model& model, const std::filesystem::path& path);
Model load(const std::filesystem::path& path);

}  // namespace hsr
