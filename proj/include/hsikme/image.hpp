#ifndef HSIKME_IMAGE_HPP
#define HSIKME_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsikme/error.hpp"

namespace hsikme {

/// H x W x D reflectance cube stored band-interleaved-by-pixel, so the
/// spectrum of a pixel is one contiguous run of `bands()` values.
/// Immutable after construction.
class HyperspectralImage {
public:
    HyperspectralImage() = default;

    HyperspectralImage(std::size_t height, std::size_t width, std::size_t bands,
                       std::vector<double> data, std::vector<double> band_centers = {})
        : height_(height), width_(width), bands_(bands),
          data_(std::move(data)), band_centers_(std::move(band_centers))
    {
        if (height_ == 0 || width_ == 0 || bands_ == 0)
            throw ShapeError("hyperspectral image dimensions must be positive");
        if (data_.size() != height_ * width_ * bands_)
            throw ShapeError("hyperspectral image data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(height_) + "x" +
                             std::to_string(width_) + "x" + std::to_string(bands_));
        if (!band_centers_.empty() && band_centers_.size() != bands_)
            throw ShapeError("band_centers length does not match band count");
        for (double v : data_)
            if (!std::isfinite(v))
                throw FormatError("hyperspectral image contains a non-finite value");
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t bands() const noexcept { return bands_; }
    std::size_t pixel_count() const noexcept { return height_ * width_; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> band_centers() const noexcept { return band_centers_; }

    std::span<const double> spectrum(std::size_t pixel) const noexcept
    {
        return {data_.data() + pixel * bands_, bands_};
    }

    std::span<const double> spectrum(std::size_t row, std::size_t col) const noexcept
    {
        return spectrum(row * width_ + col);
    }

    friend bool operator==(const HyperspectralImage&, const HyperspectralImage&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t bands_ = 0;
    std::vector<double> data_;
    std::vector<double> band_centers_;
};

/// Per-pixel class labels, 0 = unlabeled, 1..N_c labeled.
class GroundTruthMap {
public:
    GroundTruthMap() = default;

    GroundTruthMap(std::size_t height, std::size_t width, std::vector<int> labels)
        : height_(height), width_(width), labels_(std::move(labels))
    {
        if (height_ == 0 || width_ == 0)
            throw ShapeError("ground truth dimensions must be positive");
        if (labels_.size() != height_ * width_)
            throw ShapeError("ground truth label count does not match height*width");
        for (int v : labels_) {
            if (v < 0)
                throw FormatError("ground truth contains a negative label");
            class_count_ = std::max(class_count_, v);
        }
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t pixel_count() const noexcept { return labels_.size(); }
    /// N_c = largest label present.
    int class_count() const noexcept { return class_count_; }

    int at(std::size_t pixel) const noexcept { return labels_[pixel]; }
    int at(std::size_t row, std::size_t col) const noexcept { return labels_[row * width_ + col]; }
    std::span<const int> labels() const noexcept { return labels_; }

    std::size_t labeled_count() const noexcept
    {
        return static_cast<std::size_t>(
            std::count_if(labels_.begin(), labels_.end(), [](int v) { return v > 0; }));
    }

    /// Pixel indices per class; entry 0 holds the unlabeled pixels.
    std::vector<std::vector<std::size_t>> pixels_by_class() const
    {
        std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(class_count_) + 1);
        for (std::size_t i = 0; i < labels_.size(); ++i)
            out[static_cast<std::size_t>(labels_[i])].push_back(i);
        return out;
    }

    friend bool operator==(const GroundTruthMap&, const GroundTruthMap&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<int> labels_;
    int class_count_ = 0;
};

enum class BorderPolicy { clamp, mirror };

struct PatchSpec {
    std::size_t side = 1;
    BorderPolicy border = BorderPolicy::clamp;
};

/// Inclusive window offsets [-floor((s-1)/2), ceil((s-1)/2)] along one axis.
/// For even s the window centre is the top-left pixel of the central 2x2 block.
struct WindowExtent {
    int lo;
    int hi;
};

inline WindowExtent window_extent(std::size_t side)
{
    if (side == 0)
        throw ParameterError("patch side must be at least 1");
    return {-static_cast<int>((side - 1) / 2), static_cast<int>(side / 2)};
}

/// Maps a possibly out-of-range coordinate onto [0, n).
/// mirror reflects about the edge pixel without repeating it (-1 -> 1) and is
/// periodic with period 2(n-1), so any offset resolves.
inline std::size_t resolve_coordinate(long long i, std::size_t n, BorderPolicy policy)
{
    const auto last = static_cast<long long>(n) - 1;
    if (i >= 0 && i <= last)
        return static_cast<std::size_t>(i);
    if (policy == BorderPolicy::clamp || last == 0)
        return static_cast<std::size_t>(std::clamp(i, 0LL, last));
    const long long period = 2 * last;
    long long m = i % period;
    if (m < 0)
        m += period;
    return static_cast<std::size_t>(m <= last ? m : period - m);
}

struct PatchPixel {
    int d_row;         ///< offset from the window centre
    int d_col;
    std::size_t pixel; ///< resolved in-image pixel index
};

/// The side^2 window around (row, col) in row-major order.
inline std::vector<PatchPixel> patch_pixels(std::size_t height, std::size_t width,
                                            std::size_t row, std::size_t col, const PatchSpec& spec)
{
    if (row >= height || col >= width)
        throw ContractViolation("patch centre outside the image");
    const auto ext = window_extent(spec.side);
    std::vector<PatchPixel> out;
    out.reserve(spec.side * spec.side);
    for (int dr = ext.lo; dr <= ext.hi; ++dr) {
        const std::size_t r = resolve_coordinate(static_cast<long long>(row) + dr, height, spec.border);
        for (int dc = ext.lo; dc <= ext.hi; ++dc) {
            const std::size_t c = resolve_coordinate(static_cast<long long>(col) + dc, width, spec.border);
            out.push_back({dr, dc, r * width + c});
        }
    }
    return out;
}

/// Spectra of the side^2 window around (row, col), row-major.
inline std::vector<std::span<const double>> extract_patch(const HyperspectralImage& image,
                                                          std::size_t row, std::size_t col,
                                                          const PatchSpec& spec)
{
    const auto pixels = patch_pixels(image.height(), image.width(), row, col, spec);
    std::vector<std::span<const double>> out;
    out.reserve(pixels.size());
    for (const auto& p : pixels)
        out.push_back(image.spectrum(p.pixel));
    return out;
}

inline double euclidean_norm(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

/// Scales every nonzero spectrum to unit Euclidean norm; zero spectra stay zero.
inline HyperspectralImage normalize_spectra(const HyperspectralImage& image)
{
    std::vector<double> data(image.data().begin(), image.data().end());
    const std::size_t d = image.bands();
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
        std::span<double> s(data.data() + p * d, d);
        const double norm = euclidean_norm(s);
        if (norm > 0.0)
            for (double& x : s)
                x /= norm;
    }
    return {image.height(), image.width(), d, std::move(data),
            std::vector<double>(image.band_centers().begin(), image.band_centers().end())};
}

} // namespace hsikme

#endif // HSIKME_IMAGE_HPP
