#include "hsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hsr/interp.hpp"

namespace hsr {

double psnr(const Tensor& a, const Tensor& b, double peak) {
    require_same_shape(a, b, "psnr");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    if (sum == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = sum / static_cast<double>(a.size());
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

// Valid-region separable Gaussian filter of a single-channel image.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::vector<double>& k) {
    const std::size_t n = k.size();
    const std::size_t ow = w - n + 1, oh = h - n + 1;
    std::vector<double> horiz(h * ow, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += k[i] * img[y * w + x + i];
            horiz[y * ow + x] = s;
        }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t x = 0; x < ow; ++x) out[y * ow + x] += k[i] * horiz[(y + i) * ow + x];
    return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b, const SsimConfig& cfg) {
    require_same_shape(a, b, "ssim");
    if (a.channels() != 1) throw ShapeError("ssim expects single-channel images");
    const std::size_t win = static_cast<std::size_t>(cfg.window);
    if (a.height() < win || a.width() < win)
        throw ShapeError("ssim: image " + to_string(a.shape()) + " is smaller than the " +
                         std::to_string(win) + "x" + std::to_string(win) + " window");
    const std::vector<double> k = gaussian_kernel_1d(cfg.window, cfg.sigma);
    const std::size_t h = a.height(), w = a.width(), n = h * w;
    std::vector<double> x(a.values().begin(), a.values().end()), y(b.values().begin(), b.values().end());
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    const auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k), sxy = filter_valid(xy, h, w, k);
    const double c1 = std::pow(cfg.k1 * cfg.dynamic_range, 2);
    const double c2 = std::pow(cfg.k2 * cfg.dynamic_range, 2);

    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

Tensor rgb_to_ycbcr(const Tensor& rgb) {
    if (rgb.channels() != 3) throw ShapeError("rgb_to_ycbcr expects 3 channels");
    Tensor out(rgb.shape());
    for (std::size_t p = 0; p < rgb.height() * rgb.width(); ++p) {
        const double r = rgb[3 * p], g = rgb[3 * p + 1], b = rgb[3 * p + 2];
        out[3 * p] = 0.299 * r + 0.587 * g + 0.114 * b;
        out[3 * p + 1] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
        out[3 * p + 2] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    }
    return out;
}

Tensor ycbcr_to_rgb(const Tensor& ycc) {
    if (ycc.channels() != 3) throw ShapeError("ycbcr_to_rgb expects 3 channels");
    // Exact inverse of the forward matrix.
    static const std::array<std::array<double, 3>, 3> inv = [] {
        const double m[3][3] = {{0.299, 0.587, 0.114}, {-0.168736, -0.331264, 0.5}, {0.5, -0.418688, -0.081312}};
        const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        std::array<std::array<double, 3>, 3> r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int a1 = (j + 1) % 3, a2 = (j + 2) % 3, b1 = (i + 1) % 3, b2 = (i + 2) % 3;
                r[i][j] = (m[a1][b1] * m[a2][b2] - m[a1][b2] * m[a2][b1]) / det;
            }
        return r;
    }();
    Tensor out(ycc.shape());
    for (std::size_t p = 0; p < ycc.height() * ycc.width(); ++p) {
        const double v[3] = {ycc[3 * p], ycc[3 * p + 1] - 128.0, ycc[3 * p + 2] - 128.0};
        for (int i = 0; i < 3; ++i) out[3 * p + i] = inv[i][0] * v[0] + inv[i][1] * v[1] + inv[i][2] * v[2];
    }
    return out;
}

ImageMetrics compare_images(const Tensor& output, const Tensor& reference) {
    require_same_shape(output, reference, "compare_images");
    if (output.channels() != 3) throw ShapeError("compare_images expects RGB images");
    ImageMetrics m;
    m.values[0] = psnr(output, reference);
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += ssim(output.channel(c), reference.channel(c));
    m.values[1] = s / 3.0;
    const Tensor yo = rgb_to_ycbcr(output), yr = rgb_to_ycbcr(reference);
    for (std::size_t c = 0; c < 3; ++c) {
        const Tensor a = yo.channel(c), b = yr.channel(c);
        m.values[2 + 2 * c] = psnr(a, b);
        m.values[3 + 2 * c] = ssim(a, b);
    }
    return m;
}

EvalReport make_report(std::vector<ImageMetrics> images) {
    if (images.empty()) throw std::invalid_argument("evaluation report needs at least one image");
    EvalReport r;
    r.images = std::move(images);
    for (const ImageMetrics& im : r.images)
        for (std::size_t k = 0; k < 8; ++k) r.mean[k] += im.values[k];
    for (double& v : r.mean) v /= static_cast<double>(r.images.size());
    return r;
}

std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string EvalReport::to_tsv() const {
    std::ostringstream o;
    o << "image";
    for (const char* n : kMetricNames) o << '\t' << n;
    o << '\n';
    auto row = [&](const std::string& name, const std::array<double, 8>& v) {
        o << name;
        for (double x : v) o << '\t' << format_metric(x);
        o << '\n';
    };
    for (const ImageMetrics& im : images) row(im.image, im.values);
    row("MEAN", mean);
    return o.str();
}

std::string EvalReport::to_key_values() const {
    std::ostringstream o;
    o << "images: " << images.size() << '\n';
    for (const ImageMetrics& im : images)
        for (std::size_t k = 0; k < 8; ++k)
            o << "image." << im.image << '.' << kMetricNames[k] << ": " << format_metric(im.values[k]) << '\n';
    for (std::size_t k = 0; k < 8; ++k) o << "mean." << kMetricNames[k] << ": " << format_metric(mean[k]) << '\n';
    return o.str();
}

EvalReport evaluate(const Upscaler& upscaler, const std::vector<EvalImage>& images, const Degradation& degradation,
                    int scale) {
    if (images.empty()) throw std::invalid_argument("evaluate: empty image set");
    std::vector<ImageMetrics> rows;
    for (const EvalImage& im : images) {
        const Tensor hr = crop_to_multiple(im.hr, scale);
        Tensor out = upscaler(degrade(hr, degradation, scale));
        if (out.shape() != hr.shape())
            throw ShapeError("upscaler produced " + to_string(out.shape()) + " for reference " +
                             to_string(hr.shape()));
        for (double& v : out.values()) v = std::clamp(v, 0.0, 255.0);
        ImageMetrics m = compare_images(out, hr);
        m.image = im.name;
        rows.push_back(std::move(m));
    }
    return make_report(std::move(rows));
}

std::vector<EvalImage> load_eval_images(const std::filesystem::path& dir) {
    std::vector<EvalImage> out;
    for (const auto& p : list_images(dir)) out.push_back({p.stem().string(), load_image(p)});
    return out;
}

}  // namespace hsr
