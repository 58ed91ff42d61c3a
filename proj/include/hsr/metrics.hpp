#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hsr/data.hpp"
#include "hsr/tensor.hpp"

namespace hsr {

// 10 log10(peak^2 / MSE) over every element; +inf for identical inputs.
double psnr(const Tensor& a, const Tensor& b, double peak = 255.0);

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

// Mean SSIM over all fully-contained Gaussian windows of a single-channel pair.
double ssim(const Tensor& a, const Tensor& b, const SsimConfig& config = {});

// BT.601 full range, unclamped.
Tensor rgb_to_ycbcr(const Tensor& rgb);
Tensor ycbcr_to_rgb(const Tensor& ycbcr);

inline constexpr std::array<const char*, 8> kMetricNames{"P_RGB", "S_RGB", "P_Y", "S_Y",
                                                         "P_Cb",  "S_Cb",  "P_Cr", "S_Cr"};

struct ImageMetrics {
    std::string image;
    // Ordered as kMetricNames.
    std::array<double, 8> values{};
};

// S_RGB is the mean of the per-channel SSIMs over R, G and B.
ImageMetrics compare_images(const Tensor& output, const Tensor& reference);

struct EvalReport {
    std::vector<ImageMetrics> images;
    std::array<double, 8> mean{};

    std::string to_tsv() const;
    std::string to_key_values() const;
};

EvalReport make_report(std::vector<ImageMetrics> images);

using Upscaler = std::function<Tensor(const Tensor&)>;

struct EvalImage {
    std::string name;
    Tensor hr;
};

// For each image: crop to a multiple of scale, degrade, upscale, clamp, score.
EvalReport evaluate(const Upscaler& upscaler, const std::vector<EvalImage>& images, const Degradation& degradation,
                    int scale);

std::vector<EvalImage> load_eval_images(const std::filesystem::path& dir);

std::string format_metric(double v);

}  // namespace hsr
