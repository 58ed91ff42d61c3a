#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "bytes.hpp"
#include "hsr/data.hpp"

namespace hsr {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e;
}

Tensor from_rgb8(const std::uint8_t* px, std::size_t h, std::size_t w) {
    Tensor t(h, w, 3);
    for (std::size_t i = 0; i < h * w * 3; ++i) t[i] = px[i];
    return t;
}

Tensor load_png(const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw ImageIoError(path.string() + ": " + img.message);
    img.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&img);
        throw ImageIoError(path.string() + ": " + img.message);
    }
    return from_rgb8(buf.data(), img.height, img.width);
}

void save_png(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w,
              const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(w);
    img.height = static_cast<png_uint_32>(h);
    img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(img, size, 0, rgb.data(), 0, nullptr))
        throw ImageIoError(path.string() + ": " + img.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, rgb.data(), 0, nullptr))
        throw ImageIoError(path.string() + ": " + img.message);
    out.resize(size);
    bytes::write_file_atomic(path, out);
}

std::uint32_t le32(const std::uint8_t* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// Uncompressed 24/32-bit BMP, bottom-up or top-down.
Tensor load_bmp(const std::filesystem::path& path, const std::vector<std::uint8_t>& f) {
    auto fail = [&](const std::string& why) { return ImageIoError(path.string() + ": " + why); };
    if (f.size() < 54) throw fail("truncated BMP header");
    const std::uint32_t offset = le32(&f[10]);
    const std::int32_t width = static_cast<std::int32_t>(le32(&f[18]));
    const std::int32_t raw_height = static_cast<std::int32_t>(le32(&f[22]));
    const unsigned bpp = f[28] | (f[29] << 8);
    const std::uint32_t compression = le32(&f[30]);
    if (compression != 0 && !(compression == 3 && bpp == 32))
        throw fail("compressed BMP is not supported");
    if (bpp != 24 && bpp != 32) throw fail("only 24/32-bit BMP is supported");
    if (width <= 0 || raw_height == 0) throw fail("bad BMP dimensions");
    const bool top_down = raw_height < 0;
    const std::size_t w = static_cast<std::size_t>(width);
    const std::size_t h = static_cast<std::size_t>(std::abs(raw_height));
    const std::size_t step = bpp / 8;
    const std::size_t stride = (w * step + 3) & ~std::size_t{3};
    if (offset + stride * h > f.size()) throw fail("truncated BMP pixel data");
    Tensor t(h, w, 3);
    for (std::size_t y = 0; y < h; ++y) {
        const std::uint8_t* row = &f[offset + stride * (top_down ? y : h - 1 - y)];
        for (std::size_t x = 0; x < w; ++x) {
            t(y, x, 0) = row[x * step + 2];
            t(y, x, 1) = row[x * step + 1];
            t(y, x, 2) = row[x * step + 0];
        }
    }
    return t;
}

void save_bmp(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w,
              const std::filesystem::path& path) {
    const std::size_t stride = (w * 3 + 3) & ~std::size_t{3};
    bytes::Writer out;
    out.raw("BM");
    out.u32(static_cast<std::uint32_t>(54 + stride * h));
    out.u32(0);
    out.u32(54);
    out.u32(40);
    out.u32(static_cast<std::uint32_t>(w));
    out.u32(static_cast<std::uint32_t>(h));
    out.buffer().push_back(1);
    out.buffer().push_back(0);
    out.buffer().push_back(24);
    out.buffer().push_back(0);
    out.u32(0);
    out.u32(static_cast<std::uint32_t>(stride * h));
    out.u32(2835);
    out.u32(2835);
    out.u32(0);
    out.u32(0);
    for (std::size_t y = h; y-- > 0;) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::uint8_t* p = &rgb[(y * w + x) * 3];
            out.buffer().push_back(p[2]);
            out.buffer().push_back(p[1]);
            out.buffer().push_back(p[0]);
        }
        for (std::size_t pad = w * 3; pad < stride; ++pad) out.buffer().push_back(0);
    }
    bytes::write_file_atomic(path, out.buffer());
}

}  // namespace

std::uint8_t quantize_pixel(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

Tensor load_image(const std::filesystem::path& path) {
    std::vector<std::uint8_t> f;
    try {
        f = bytes::read_file(path);
    } catch (const std::exception&) {
        throw ImageIoError("cannot read image " + path.string());
    }
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (f.size() >= 8 && std::equal(png_sig, png_sig + 8, f.begin())) return load_png(path);
    if (f.size() >= 2 && f[0] == 'B' && f[1] == 'M') return load_bmp(path, f);
    throw ImageIoError(path.string() + ": unsupported image format (expected PNG or BMP)");
}

void save_image(const Tensor& image, const std::filesystem::path& path) {
    if (image.channels() != 3)
        throw ImageIoError(path.string() + ": can only save 3-channel images, got " + to_string(image.shape()));
    std::vector<std::uint8_t> rgb(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) rgb[i] = quantize_pixel(image[i]);
    const std::string ext = lower_ext(path);
    if (ext == ".png")
        save_png(rgb, image.height(), image.width(), path);
    else if (ext == ".bmp")
        save_bmp(rgb, image.height(), image.width(), path);
    else
        throw ImageIoError(path.string() + ": output extension must be .png or .bmp");
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw ImageIoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const std::string ext = lower_ext(e.path());
        if (e.is_regular_file() && (ext == ".png" || ext == ".bmp")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace hsr
