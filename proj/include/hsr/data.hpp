#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsr/interp.hpp"
#include "hsr/tensor.hpp"

namespace hsr {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// 8-bit RGB PNG or BMP to a [0,255] real tensor.
Tensor load_image(const std::filesystem::path& path);
// Rounds half away from zero and clamps to [0,255]. Format follows the extension (.png/.bmp).
void save_image(const Tensor& image, const std::filesystem::path& path);
std::uint8_t quantize_pixel(double v);

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct Degradation {
    enum class Method { Bicubic, Bilinear, Nearest, Pyramid };
    Method method = Method::Bicubic;
    bool blur = false;  // 5x5 Gaussian before downsampling

    friend bool operator==(const Degradation&, const Degradation&) = default;
};

// "bicubic", "bilinear", "nearest", "pyramid", each optionally suffixed "+blur".
std::string to_string(const Degradation& d);
std::optional<Degradation> parse_degradation(std::string_view name);
std::optional<std::vector<Degradation>> parse_degradation_list(std::string_view csv);

// Bottom/right crop to the largest size divisible by `factor`.
Tensor crop_to_multiple(const Tensor& image, int factor);

// LR image at 1/factor size, clamped to [0,255]. Crops to a divisible size first.
Tensor degrade(const Tensor& image, const Degradation& kind, int factor);

inline constexpr std::size_t kLrPatch = 16;

struct PatchPair {
    Tensor lr;
    Tensor hr;
    std::size_t image = 0;
    std::size_t lr_y = 0;
    std::size_t lr_x = 0;
};

struct PatchPosition {
    std::size_t image = 0;
    std::size_t lr_y = 0;
    std::size_t lr_x = 0;
    friend bool operator==(const PatchPosition&, const PatchPosition&) = default;
};

// Grid positions of LR patches. `limit` > 0 keeps a seeded random subset, in grid order.
std::vector<PatchPosition> patch_grid(std::size_t lr_height, std::size_t lr_width, std::size_t stride,
                                      std::size_t image = 0);
std::vector<PatchPosition> limit_positions(std::vector<PatchPosition> positions, std::size_t limit,
                                           std::uint64_t seed);

std::vector<PatchPair> extract_patch_pairs(const Tensor& hr_image, const Degradation& degradation, int scale,
                                           std::size_t stride, std::size_t limit, std::uint64_t seed,
                                           std::size_t image_id = 0);

struct DatasetOptions {
    std::filesystem::path image_dir;
    std::vector<Degradation> degradations{Degradation{}};
    int scale = 2;
    std::size_t stride = 4;
    std::size_t limit = 0;  // per degradation; 0 = all
    std::uint64_t seed = 42;
};

struct DatasetSegment {
    Degradation degradation;
    std::size_t first = 0;
    std::size_t count = 0;
};

struct DatasetManifest {
    int scale = 2;
    std::size_t lr_patch = kLrPatch;
    std::size_t hr_patch = 2 * kLrPatch;
    std::size_t stride = 0;
    std::size_t limit = 0;
    std::uint64_t seed = 0;
    std::string image_dir;
    std::vector<std::string> images;
    std::vector<DatasetSegment> segments;
    std::size_t pairs = 0;
    std::string blob;
    std::uint32_t blob_crc32 = 0;

    std::string to_text() const;
    static DatasetManifest parse(std::string_view text);
};

// Blob path for a manifest: same stem, ".hsrp" extension.
std::filesystem::path blob_path_for(const std::filesystem::path& manifest);

// Writes the manifest and its patch blob; returns the manifest.
DatasetManifest build_dataset(const DatasetOptions& options, const std::filesystem::path& manifest_path);

struct PatchDataset {
    DatasetManifest manifest;
    std::vector<PatchPair> pairs;
};

// Loads every record, or only the segment for `only` when given.
PatchDataset load_dataset(const std::filesystem::path& manifest_path,
                          std::optional<Degradation> only = std::nullopt);

}  // namespace hsr
