#include "hsr/arch.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "bytes.hpp"

namespace hsr {

namespace {

constexpr std::array<std::pair<ArchName, std::string_view>, 8> kNames{{
    {ArchName::I2C, "I2C"},
    {ArchName::CI2, "CI2"},
    {ArchName::CB2SNN, "CB2SNN"},
    {ArchName::I4C, "I4C"},
    {ArchName::I2CI2C, "I2CI2C"},
    {ArchName::BicubicCNN, "BicubicCNN"},
    {ArchName::BilinearCNN, "BilinearCNN"},
    {ArchName::NNCNN, "NNCNN"},
}};

constexpr std::array<InterpKind, 3> kAllInterps{InterpKind::Bicubic, InterpKind::Bilinear, InterpKind::Nearest};

class GraphBuilder {
public:
    explicit GraphBuilder(ArchitectureSpec& spec) : spec_(spec) {
        spec_.nodes.push_back(Node{});
        channels_.push_back(3);
    }

    std::size_t interp(std::size_t src, InterpKind kind, int factor) {
        Node n;
        n.kind = NodeKind::Interp;
        n.inputs = {src};
        n.interp = kind;
        n.factor = factor;
        return push(std::move(n), channels_[src]);
    }

    std::size_t conv(std::size_t src, std::size_t filters, std::size_t kernel) {
        Node n;
        n.kind = NodeKind::Conv;
        n.inputs = {src};
        n.layer = spec_.layers.size();
        spec_.layers.push_back({channels_[src], filters, kernel});
        return push(std::move(n), filters);
    }

    std::size_t relu(std::size_t src) {
        Node n;
        n.kind = NodeKind::Relu;
        n.inputs = {src};
        return push(std::move(n), channels_[src]);
    }

    std::size_t conv_relu(std::size_t src, std::size_t filters, std::size_t kernel) {
        return relu(conv(src, filters, kernel));
    }

    std::size_t concat(std::vector<std::size_t> srcs) {
        std::size_t c = 0;
        for (std::size_t s : srcs) c += channels_[s];
        Node n;
        n.kind = NodeKind::Concat;
        n.inputs = std::move(srcs);
        return push(std::move(n), c);
    }

    // Bicubic, bilinear and nearest copies of `src`, concatenated in that order.
    std::size_t interp3(std::size_t src, int factor) {
        std::vector<std::size_t> branches;
        for (InterpKind k : kAllInterps) branches.push_back(interp(src, k, factor));
        return concat(std::move(branches));
    }

    // Output layer: linear unless the strict variant is requested.
    void output_conv(std::size_t src, std::size_t kernel) {
        const std::size_t out = conv(src, 3, kernel);
        if (spec_.final_relu) relu(out);
    }

private:
    std::size_t push(Node n, std::size_t channels) {
        spec_.nodes.push_back(std::move(n));
        channels_.push_back(channels);
        return spec_.nodes.size() - 1;
    }

    ArchitectureSpec& spec_;
    std::vector<std::size_t> channels_;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(ArchName name) {
    for (const auto& [n, s] : kNames)
        if (n == name) return s;
    return "?";
}

std::optional<ArchName> parse_arch_name(std::string_view name) {
    for (const auto& [n, s] : kNames)
        if (s == name) return n;
    return std::nullopt;
}

int native_scale(ArchName name) {
    return name == ArchName::I4C || name == ArchName::I2CI2C ? 4 : 2;
}

std::vector<ArchName> all_architectures() {
    std::vector<ArchName> out;
    for (const auto& [n, s] : kNames) out.push_back(n);
    return out;
}

ArchitectureSpec make_spec(ArchName name, int scale, BuildOptions options) {
    if (scale != native_scale(name))
        throw std::invalid_argument(std::string(to_string(name)) + " is defined for scale " +
                                    std::to_string(native_scale(name)) + ", not " + std::to_string(scale));
    ArchitectureSpec spec;
    spec.name = name;
    spec.scale = scale;
    spec.final_relu = options.final_relu;
    GraphBuilder g(spec);
    constexpr std::size_t in = 0;

    switch (name) {
        case ArchName::I2C: {
            std::size_t z = g.interp3(in, 2);
            z = g.conv_relu(z, 8, 5);
            z = g.conv_relu(z, 4, 3);
            g.output_conv(z, 3);
            break;
        }
        case ArchName::CI2: {
            std::size_t z = g.conv_relu(in, 16, 5);
            z = g.conv_relu(z, 8, 3);
            z = g.conv_relu(z, 8, 3);
            z = g.interp3(z, 2);
            g.output_conv(z, 3);
            break;
        }
        case ArchName::CB2SNN: {
            const std::size_t skip = g.interp(in, InterpKind::Nearest, 2);
            std::size_t z = g.conv_relu(in, 8, 5);
            z = g.conv_relu(z, 8, 3);
            z = g.conv_relu(z, 3, 1);
            z = g.interp(z, InterpKind::Bicubic, 2);
            z = g.concat({z, skip});
            g.output_conv(z, 3);
            break;
        }
        case ArchName::I4C: {
            std::vector<std::size_t> branches;
            for (InterpKind k : kAllInterps) branches.push_back(g.conv_relu(g.interp(in, k, 4), 6, 5));
            std::size_t z = g.concat(std::move(branches));
            z = g.conv_relu(z, 16, 5);
            z = g.conv_relu(z, 8, 3);
            z = g.conv_relu(z, 8, 1);
            g.output_conv(z, 3);
            break;
        }
        case ArchName::I2CI2C: {
            std::vector<std::size_t> branches;
            for (InterpKind k : kAllInterps) {
                std::size_t b = g.conv_relu(g.interp(in, k, 2), 8, 3);
                branches.push_back(g.conv_relu(b, 4, 1));
            }
            std::size_t z = g.concat(std::move(branches));
            z = g.interp3(z, 2);
            z = g.conv_relu(z, 9, 3);
            g.output_conv(z, 3);
            break;
        }
        case ArchName::BicubicCNN:
        case ArchName::BilinearCNN:
        case ArchName::NNCNN: {
            const InterpKind k = name == ArchName::BicubicCNN    ? InterpKind::Bicubic
                                 : name == ArchName::BilinearCNN ? InterpKind::Bilinear
                                                                 : InterpKind::Nearest;
            std::size_t z = g.interp(in, k, 2);
            z = g.conv_relu(z, 8, 5);
            z = g.conv_relu(z, 4, 3);
            g.output_conv(z, 3);
            break;
        }
    }
    return spec;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const ConvLayer& l : layers) n += l.parameter_count();
    return n;
}

std::vector<double> Model::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const ConvLayer& l : layers) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.biases.begin(), l.biases.end());
    }
    return flat;
}

void Model::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count())
        throw ShapeError("set_parameters: expected " + std::to_string(parameter_count()) + " values, got " +
                         std::to_string(flat.size()));
    std::size_t off = 0;
    for (ConvLayer& l : layers) {
        std::copy_n(flat.begin() + static_cast<long>(off), l.weights.size(), l.weights.begin());
        off += l.weights.size();
        std::copy_n(flat.begin() + static_cast<long>(off), l.biases.size(), l.biases.begin());
        off += l.biases.size();
    }
}

Model build(ArchName name, int scale, std::uint64_t seed, BuildOptions options) {
    Model m;
    m.spec = make_spec(name, scale, options);
    m.seed = seed;
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        const LayerDims& d = m.spec.layers[i];
        m.layers.push_back(init_layer(d.in_channels, d.out_filters, d.kernel_size, splitmix64(seed + i)));
    }
    return m;
}

std::vector<Shape> infer_shapes(const ArchitectureSpec& spec, std::size_t height, std::size_t width) {
    std::vector<Shape> shapes(spec.nodes.size());
    shapes[0] = {height, width, 3};
    for (std::size_t i = 1; i < spec.nodes.size(); ++i) {
        const Node& n = spec.nodes[i];
        const Shape& s = shapes[n.inputs.front()];
        switch (n.kind) {
            case NodeKind::Input: break;
            case NodeKind::Interp:
                shapes[i] = {s.height * static_cast<std::size_t>(n.factor),
                             s.width * static_cast<std::size_t>(n.factor), s.channels};
                break;
            case NodeKind::Conv: shapes[i] = {s.height, s.width, spec.layers[n.layer].out_filters}; break;
            case NodeKind::Relu: shapes[i] = s; break;
            case NodeKind::Concat: {
                shapes[i] = {s.height, s.width, 0};
                for (std::size_t in : n.inputs) shapes[i].channels += shapes[in].channels;
                break;
            }
        }
    }
    return shapes;
}

ForwardTrace forward_trace(const Model& model, const Tensor& input) {
    if (input.channels() != 3)
        throw ShapeError("model input must have 3 channels, got " + std::to_string(input.channels()));
    const auto& nodes = model.spec.nodes;
    ForwardTrace t;
    t.values.resize(nodes.size());
    t.values[0] = input;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const Node& n = nodes[i];
        const Tensor& x = t.values[n.inputs.front()];
        switch (n.kind) {
            case NodeKind::Input: break;
            case NodeKind::Interp: t.values[i] = upscale(x, n.interp, n.factor); break;
            case NodeKind::Conv: t.values[i] = conv_forward(model.layers[n.layer], x); break;
            case NodeKind::Relu: t.values[i] = relu(x); break;
            case NodeKind::Concat: {
                std::vector<Tensor> parts;
                parts.reserve(n.inputs.size());
                for (std::size_t in : n.inputs) parts.push_back(t.values[in]);
                t.values[i] = concat_channels(parts);
                break;
            }
        }
    }
    return t;
}

Tensor forward(const Model& model, const Tensor& input) { return forward_trace(model, input).values.back(); }

std::vector<double> ModelGrads::flat() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.insert(out.end(), weights[i].begin(), weights[i].end());
        out.insert(out.end(), biases[i].begin(), biases[i].end());
    }
    return out;
}

ModelGrads backward(const Model& model, const ForwardTrace& trace, const Tensor& upstream_grad) {
    const auto& nodes = model.spec.nodes;
    if (trace.values.size() != nodes.size()) throw ShapeError("backward: trace does not belong to this model");
    require_same_shape(trace.output(), upstream_grad, "model backward");

    ModelGrads g;
    g.weights.resize(model.layers.size());
    g.biases.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        g.weights[l].assign(model.layers[l].weight_count(), 0.0);
        g.biases[l].assign(model.layers[l].out_filters, 0.0);
    }

    std::vector<Tensor> grad(nodes.size());
    grad.back() = upstream_grad;
    auto accumulate = [&](std::size_t node, Tensor&& gnew) {
        if (grad[node].empty())
            grad[node] = std::move(gnew);
        else
            grad[node] += gnew;
    };

    for (std::size_t i = nodes.size(); i-- > 1;) {
        if (grad[i].empty()) continue;
        const Node& n = nodes[i];
        const std::size_t src = n.inputs.front();
        const Tensor& x = trace.values[src];
        switch (n.kind) {
            case NodeKind::Input: break;
            case NodeKind::Interp: {
                const ResamplePlan plan(n.interp, ScaleFactor::up(n.factor), x.height(), x.width());
                accumulate(src, plan.apply_transpose(grad[i]));
                break;
            }
            case NodeKind::Conv: {
                ConvGrads cg = conv_backward(model.layers[n.layer], x, grad[i]);
                g.weights[n.layer] = std::move(cg.weights);
                g.biases[n.layer] = std::move(cg.biases);
                accumulate(src, std::move(cg.input));
                break;
            }
            case NodeKind::Relu: accumulate(src, relu_backward(x, grad[i])); break;
            case NodeKind::Concat: {
                std::vector<std::size_t> counts;
                for (std::size_t in : n.inputs) counts.push_back(trace.values[in].channels());
                std::vector<Tensor> parts = split_channels(grad[i], counts);
                for (std::size_t k = 0; k < n.inputs.size(); ++k) accumulate(n.inputs[k], std::move(parts[k]));
                break;
            }
        }
        grad[i] = Tensor();
    }
    g.input = grad[0].empty() ? Tensor(trace.values[0].shape()) : std::move(grad[0]);
    return g;
}

ComplexityReport complexity(const Model& model, std::size_t in_height, std::size_t in_width) {
    const ArchitectureSpec& spec = model.spec;
    const std::vector<Shape> shapes = infer_shapes(spec, in_height, in_width);
    ComplexityReport r;
    std::vector<std::size_t> depth(spec.nodes.size(), 0);
    for (std::size_t i = 1; i < spec.nodes.size(); ++i) {
        const Node& n = spec.nodes[i];
        for (std::size_t in : n.inputs) depth[i] = std::max(depth[i], depth[in]);
        if (n.kind == NodeKind::Conv) {
            ++depth[i];
            const ConvLayer& layer = model.layers[n.layer];
            r.layers.push_back(layer_complexity(layer, shapes[i].height, shapes[i].width));
            r.total_macs += r.layers.back().macs;
            r.total_parameters += r.layers.back().parameters;
            r.total_filters += layer.out_filters;
        }
    }
    r.depth = depth.back();
    return r;
}

// Model file: "HSRM" | u32 version | u32 metadata length | metadata text |
// u64 parameter count | f64 parameters (graph order) | u32 crc32 of all prior bytes.

std::vector<std::uint8_t> serialize(const Model& model) {
    std::ostringstream meta;
    meta << "arch: " << to_string(model.spec.name) << "\n"
         << "scale: " << model.spec.scale << "\n"
         << "final_relu: " << (model.spec.final_relu ? 1 : 0) << "\n"
         << "seed: " << model.seed << "\n"
         << "layers: " << model.layers.size() << "\n";
    for (const ConvLayer& l : model.layers)
        meta << "layer: " << l.in_channels << " " << l.out_filters << " " << l.kernel_size << "\n";
    const std::string text = meta.str();

    bytes::Writer w;
    w.raw("HSRM");
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.raw(text);
    const std::vector<double> params = model.parameters();
    w.u64(params.size());
    for (double p : params) w.f64(p);
    w.u32(bytes::crc32(w.buffer()));
    return std::move(w.buffer());
}

Model deserialize(std::span<const std::uint8_t> data) {
    using K = ModelFileError::Kind;
    bytes::Reader r(data);
    if (!r.has(4)) throw ModelFileError(K::Truncated, "model file truncated before magic");
    if (r.raw(4) != "HSRM") throw ModelFileError(K::BadMagic, "not a model file (bad magic)");
    if (!r.has(8)) throw ModelFileError(K::Truncated, "model file truncated in header");
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw ModelFileError(K::UnsupportedVersion, "unsupported model format version " + std::to_string(version));
    const std::uint32_t meta_len = r.u32();
    if (!r.has(meta_len)) throw ModelFileError(K::Truncated, "model file truncated in metadata");
    const std::string text = r.raw(meta_len);
    if (!r.has(8)) throw ModelFileError(K::Truncated, "model file truncated before parameters");
    const std::uint64_t count = r.u64();
    if (count > r.remaining() / 8 || r.remaining() - count * 8 < 4)
        throw ModelFileError(K::Truncated, "model file truncated in parameters");
    std::vector<double> params(count);
    for (double& p : params) p = r.f64();
    const std::size_t body = r.position();
    const std::uint32_t stored = r.u32();
    if (r.remaining() != 0) throw ModelFileError(K::Malformed, "trailing bytes after model checksum");
    if (stored != bytes::crc32(data.first(body)))
        throw ModelFileError(K::ChecksumMismatch, "model file checksum mismatch");

    std::istringstream meta(text);
    std::string key, arch;
    int scale = 0, final_relu = 0;
    std::uint64_t seed = 0;
    std::size_t nlayers = 0;
    std::vector<LayerDims> dims;
    auto malformed = [](const std::string& why) { return ModelFileError(K::Malformed, "model metadata: " + why); };
    if (!(meta >> key >> arch) || key != "arch:") throw malformed("missing arch");
    if (!(meta >> key >> scale) || key != "scale:") throw malformed("missing scale");
    if (!(meta >> key >> final_relu) || key != "final_relu:") throw malformed("missing final_relu");
    if (!(meta >> key >> seed) || key != "seed:") throw malformed("missing seed");
    if (!(meta >> key >> nlayers) || key != "layers:") throw malformed("missing layer count");
    for (std::size_t i = 0; i < nlayers; ++i) {
        LayerDims d;
        if (!(meta >> key >> d.in_channels >> d.out_filters >> d.kernel_size) || key != "layer:")
            throw malformed("bad layer line");
        dims.push_back(d);
    }

    const auto name = parse_arch_name(arch);
    if (!name) throw ModelFileError(K::SpecMismatch, "unknown architecture '" + arch + "'");
    ArchitectureSpec spec;
    try {
        spec = make_spec(*name, scale, BuildOptions{final_relu != 0});
    } catch (const std::invalid_argument& e) {
        throw ModelFileError(K::SpecMismatch, e.what());
    }
    if (spec.layers != dims)
        throw ModelFileError(K::SpecMismatch, "layer dimensions do not match architecture " + arch);

    Model m;
    m.spec = std::move(spec);
    m.seed = seed;
    for (const LayerDims& d : m.spec.layers) m.layers.emplace_back(d.in_channels, d.out_filters, d.kernel_size);
    if (count != m.parameter_count())
        throw ModelFileError(K::SpecMismatch, "parameter count " + std::to_string(count) + " does not match " +
                                                  arch + " (" + std::to_string(m.parameter_count()) + ")");
    m.set_parameters(params);
    return m;
}

void save(const Model& model, const std::filesystem::path& path) {
    bytes::write_file_atomic(path, serialize(model));
}

Model load(const std::filesystem::path& path) {
    std::vector<std::uint8_t> data;
    try {
        data = bytes::read_file(path);
    } catch (const std::exception& e) {
        throw ModelFileError(ModelFileError::Kind::Io, e.what());
    }
    try {
        return deserialize(data);
    } catch (const ModelFileError& e) {
        throw ModelFileError(e.kind(), path.string() + ": " + e.what());
    }
}

}  // namespace hsr
