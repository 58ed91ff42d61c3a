#include "hsr/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "bytes.hpp"

namespace hsr {

std::string to_string(const Degradation& d) {
    std::string s;
    switch (d.method) {
        case Degradation::Method::Bicubic: s = "bicubic"; break;
        case Degradation::Method::Bilinear: s = "bilinear"; break;
        case Degradation::Method::Nearest: s = "nearest"; break;
        case Degradation::Method::Pyramid: s = "pyramid"; break;
    }
    return d.blur ? s + "+blur" : s;
}

std::optional<Degradation> parse_degradation(std::string_view name) {
    Degradation d;
    constexpr std::string_view suffix = "+blur";
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
        d.blur = true;
        name.remove_suffix(suffix.size());
    }
    if (name == "bicubic")
        d.method = Degradation::Method::Bicubic;
    else if (name == "bilinear")
        d.method = Degradation::Method::Bilinear;
    else if (name == "nearest")
        d.method = Degradation::Method::Nearest;
    else if (name == "pyramid")
        d.method = Degradation::Method::Pyramid;
    else
        return std::nullopt;
    return d;
}

std::optional<std::vector<Degradation>> parse_degradation_list(std::string_view csv) {
    std::vector<Degradation> out;
    while (true) {
        const std::size_t comma = csv.find(',');
        const auto d = parse_degradation(csv.substr(0, comma));
        if (!d) return std::nullopt;
        if (std::find(out.begin(), out.end(), *d) == out.end()) out.push_back(*d);
        if (comma == std::string_view::npos) break;
        csv.remove_prefix(comma + 1);
    }
    return out;
}

Tensor crop_to_multiple(const Tensor& image, int factor) {
    const std::size_t f = static_cast<std::size_t>(factor);
    const std::size_t h = image.height() / f * f, w = image.width() / f * f;
    if (h == 0 || w == 0)
        throw ShapeError("image " + to_string(image.shape()) + " is smaller than the scale factor");
    if (h == image.height() && w == image.width()) return image;
    return image.crop(0, 0, h, w);
}

Tensor degrade(const Tensor& image, const Degradation& kind, int factor) {
    Tensor hr = crop_to_multiple(image, factor);
    if (kind.blur) hr = gaussian_blur(hr, 5);
    Tensor lr;
    switch (kind.method) {
        case Degradation::Method::Bicubic: lr = downscale(hr, InterpKind::Bicubic, factor); break;
        case Degradation::Method::Bilinear: lr = downscale(hr, InterpKind::Bilinear, factor); break;
        case Degradation::Method::Nearest: lr = downscale(hr, InterpKind::Nearest, factor); break;
        case Degradation::Method::Pyramid: lr = pyramid_downsample(hr, factor); break;
    }
    for (double& v : lr.values()) v = std::clamp(v, 0.0, 255.0);
    return lr;
}

std::vector<PatchPosition> patch_grid(std::size_t lr_height, std::size_t lr_width, std::size_t stride,
                                      std::size_t image) {
    if (stride == 0) throw std::invalid_argument("patch stride must be at least 1");
    std::vector<PatchPosition> out;
    if (lr_height < kLrPatch || lr_width < kLrPatch) return out;
    for (std::size_t y = 0; y + kLrPatch <= lr_height; y += stride)
        for (std::size_t x = 0; x + kLrPatch <= lr_width; x += stride) out.push_back({image, y, x});
    return out;
}

std::vector<PatchPosition> limit_positions(std::vector<PatchPosition> positions, std::size_t limit,
                                           std::uint64_t seed) {
    if (limit == 0 || positions.size() <= limit) return positions;
    std::vector<std::size_t> order(positions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(limit);
    std::sort(order.begin(), order.end());
    std::vector<PatchPosition> kept;
    kept.reserve(limit);
    for (std::size_t i : order) kept.push_back(positions[i]);
    return kept;
}

std::vector<PatchPair> extract_patch_pairs(const Tensor& hr_image, const Degradation& degradation, int scale,
                                           std::size_t stride, std::size_t limit, std::uint64_t seed,
                                           std::size_t image_id) {
    if (stride == 0) throw std::invalid_argument("patch stride must be at least 1");
    const std::size_t s = static_cast<std::size_t>(scale);
    if (hr_image.height() < kLrPatch * s || hr_image.width() < kLrPatch * s) return {};
    const Tensor hr = crop_to_multiple(hr_image, scale);
    const Tensor lr = degrade(hr, degradation, scale);
    std::vector<PatchPair> out;
    for (const PatchPosition& p : limit_positions(patch_grid(lr.height(), lr.width(), stride, image_id), limit, seed))
        out.push_back({lr.crop(p.lr_y, p.lr_x, kLrPatch, kLrPatch),
                       hr.crop(p.lr_y * s, p.lr_x * s, kLrPatch * s, kLrPatch * s), image_id, p.lr_y, p.lr_x});
    return out;
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
    std::filesystem::path p = manifest;
    p.replace_extension(".hsrp");
    return p;
}

std::string DatasetManifest::to_text() const {
    std::ostringstream o;
    o << "format: hsr-patches 1\n"
      << "scale: " << scale << "\n"
      << "lr_patch: " << lr_patch << "\n"
      << "hr_patch: " << hr_patch << "\n"
      << "channels: 3\n"
      << "value_type: f32le\n"
      << "stride: " << stride << "\n"
      << "limit: " << limit << "\n"
      << "seed: " << seed << "\n"
      << "image_dir: " << image_dir << "\n"
      << "images: " << images.size() << "\n";
    for (const std::string& im : images) o << "image: " << im << "\n";
    for (const DatasetSegment& s : segments)
        o << "segment: " << to_string(s.degradation) << " " << s.first << " " << s.count << "\n";
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", blob_crc32);
    o << "pairs: " << pairs << "\n"
      << "blob: " << blob << "\n"
      << "blob_crc32: " << crc << "\n";
    return o.str();
}

DatasetManifest DatasetManifest::parse(std::string_view text) {
    DatasetManifest m;
    std::istringstream in{std::string(text)};
    std::string line;
    bool have_format = false;
    auto fail = [](const std::string& why) { return std::runtime_error("dataset manifest: " + why); };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t colon = line.find(": ");
        if (colon == std::string::npos) throw fail("malformed line '" + line + "'");
        const std::string key = line.substr(0, colon);
        const std::string value = line.substr(colon + 2);
        std::istringstream v(value);
        if (key == "format") {
            if (value != "hsr-patches 1") throw fail("unsupported format '" + value + "'");
            have_format = true;
        } else if (key == "scale") {
            v >> m.scale;
        } else if (key == "lr_patch") {
            v >> m.lr_patch;
        } else if (key == "hr_patch") {
            v >> m.hr_patch;
        } else if (key == "stride") {
            v >> m.stride;
        } else if (key == "limit") {
            v >> m.limit;
        } else if (key == "seed") {
            v >> m.seed;
        } else if (key == "image_dir") {
            m.image_dir = value;
        } else if (key == "image") {
            m.images.push_back(value);
        } else if (key == "segment") {
            std::string name;
            DatasetSegment s;
            if (!(v >> name >> s.first >> s.count)) throw fail("bad segment line");
            const auto d = parse_degradation(name);
            if (!d) throw fail("unknown degradation '" + name + "'");
            s.degradation = *d;
            m.segments.push_back(s);
        } else if (key == "pairs") {
            v >> m.pairs;
        } else if (key == "blob") {
            m.blob = value;
        } else if (key == "blob_crc32") {
            m.blob_crc32 = static_cast<std::uint32_t>(std::stoul(value, nullptr, 16));
        }
        if (v.fail() && !v.eof()) throw fail("bad value for " + key);
    }
    if (!have_format) throw fail("missing format line");
    if (m.scale != 2 && m.scale != 4) throw fail("scale must be 2 or 4");
    if (m.lr_patch != kLrPatch || m.hr_patch != kLrPatch * static_cast<std::size_t>(m.scale))
        throw fail("patch sizes do not match scale");
    return m;
}

DatasetManifest build_dataset(const DatasetOptions& options, const std::filesystem::path& manifest_path) {
    if (options.scale != 2 && options.scale != 4) throw std::invalid_argument("scale must be 2 or 4");
    if (options.stride == 0) throw std::invalid_argument("stride must be at least 1");
    if (options.degradations.empty()) throw std::invalid_argument("at least one degradation is required");
    const std::vector<std::filesystem::path> files = list_images(options.image_dir);
    if (files.empty()) throw ImageIoError("no PNG/BMP images in " + options.image_dir.string());

    const std::size_t s = static_cast<std::size_t>(options.scale);
    DatasetManifest m;
    m.scale = options.scale;
    m.hr_patch = kLrPatch * s;
    m.stride = options.stride;
    m.limit = options.limit;
    m.seed = options.seed;
    m.image_dir = options.image_dir.string();
    m.blob = blob_path_for(manifest_path).filename().string();

    std::vector<std::pair<std::size_t, std::size_t>> lr_dims;
    for (const auto& f : files) {
        const Tensor im = load_image(f);
        m.images.push_back(f.filename().string());
        lr_dims.emplace_back(im.height() / s, im.width() / s);
    }

    const std::filesystem::path blob = blob_path_for(manifest_path);
    std::filesystem::path tmp = blob;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    std::uint32_t crc = bytes::crc32({});

    for (std::size_t d = 0; d < options.degradations.size(); ++d) {
        const Degradation& deg = options.degradations[d];
        std::vector<PatchPosition> positions;
        for (std::size_t i = 0; i < files.size(); ++i) {
            auto grid = patch_grid(lr_dims[i].first, lr_dims[i].second, options.stride, i);
            positions.insert(positions.end(), grid.begin(), grid.end());
        }
        positions = limit_positions(std::move(positions), options.limit, options.seed + d);

        m.segments.push_back({deg, m.pairs, positions.size()});
        std::size_t next = 0;
        for (std::size_t i = 0; i < files.size() && next < positions.size(); ++i) {
            if (positions[next].image != i) continue;
            const Tensor hr = crop_to_multiple(load_image(files[i]), options.scale);
            const Tensor lr = degrade(hr, deg, options.scale);
            bytes::Writer w;
            for (; next < positions.size() && positions[next].image == i; ++next) {
                const PatchPosition& p = positions[next];
                const Tensor lr_patch = lr.crop(p.lr_y, p.lr_x, kLrPatch, kLrPatch);
                const Tensor hr_patch = hr.crop(p.lr_y * s, p.lr_x * s, m.hr_patch, m.hr_patch);
                for (double v : lr_patch.values()) w.f32(static_cast<float>(v));
                for (double v : hr_patch.values()) w.f32(static_cast<float>(v));
            }
            crc = bytes::crc32_update(crc, w.buffer());
            out.write(reinterpret_cast<const char*>(w.buffer().data()),
                      static_cast<std::streamsize>(w.buffer().size()));
        }
        m.pairs += positions.size();
    }
    out.close();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
    std::filesystem::rename(tmp, blob);

    m.blob_crc32 = crc;
    bytes::write_file_atomic(manifest_path, m.to_text());
    return m;
}

PatchDataset load_dataset(const std::filesystem::path& manifest_path, std::optional<Degradation> only) {
    std::vector<std::uint8_t> text;
    try {
        text = bytes::read_file(manifest_path);
    } catch (const std::exception&) {
        throw std::runtime_error("cannot read dataset manifest " + manifest_path.string());
    }
    PatchDataset ds;
    ds.manifest = DatasetManifest::parse(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
    const DatasetManifest& m = ds.manifest;

    const std::filesystem::path blob = manifest_path.parent_path() / m.blob;
    const std::vector<std::uint8_t> data = bytes::read_file(blob);
    const std::size_t lr_vals = m.lr_patch * m.lr_patch * 3, hr_vals = m.hr_patch * m.hr_patch * 3;
    const std::size_t record = (lr_vals + hr_vals) * 4;
    if (data.size() != record * m.pairs)
        throw std::runtime_error(blob.string() + ": size does not match manifest pair count");
    if (bytes::crc32(data) != m.blob_crc32) throw std::runtime_error(blob.string() + ": checksum mismatch");

    std::size_t first = 0, count = m.pairs;
    if (only) {
        const auto seg = std::find_if(m.segments.begin(), m.segments.end(),
                                      [&](const DatasetSegment& s) { return s.degradation == *only; });
        if (seg == m.segments.end())
            throw std::runtime_error("dataset has no '" + to_string(*only) + "' segment");
        first = seg->first;
        count = seg->count;
    }

    const std::span<const std::uint8_t> all(data);
    bytes::Reader r(all.subspan(first * record, count * record));
    ds.pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        PatchPair p;
        p.lr = Tensor(m.lr_patch, m.lr_patch, 3);
        p.hr = Tensor(m.hr_patch, m.hr_patch, 3);
        for (double& v : p.lr.values()) v = r.f32();
        for (double& v : p.hr.values()) v = r.f32();
        ds.pairs.push_back(std::move(p));
    }
    return ds;
}

}  // namespace hsr
