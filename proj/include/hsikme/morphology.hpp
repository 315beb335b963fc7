#ifndef HSIKME_MORPHOLOGY_HPP
#define HSIKME_MORPHOLOGY_HPP

// Flat grey-level morphology, geodesic reconstruction, PCA band reduction and
// morphological profiles. Borders replicate the edge pixel; for the disk and
// square elements used here that is the same as ignoring out-of-image
// offsets, so erosion and dilation stay an adjoint pair and openings are
// idempotent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hsikme/error.hpp"
#include "hsikme/image.hpp"
#include "hsikme/matrix_io.hpp"
#include "hsikme/parallel.hpp"

namespace hsikme {

class GrayImage {
public:
    GrayImage() = default;

    GrayImage(std::size_t height, std::size_t width, std::vector<double> values)
        : height_(height), width_(width), values_(std::move(values))
    {
        if (height_ == 0 || width_ == 0)
            throw ShapeError("grey image dimensions must be positive");
        if (values_.size() != height_ * width_)
            throw ShapeError("grey image value count does not match height*width");
        for (double v : values_)
            if (!std::isfinite(v))
                throw FormatError("grey image contains a non-finite value");
    }

    GrayImage(std::size_t height, std::size_t width, double fill)
        : GrayImage(height, width, std::vector<double>(height * width, fill)) {}

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * width_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * width_ + c]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    std::span<const double> values() const noexcept { return values_; }

    GrayImage operator-() const
    {
        GrayImage out = *this;
        for (double& v : out.values_)
            v = -v;
        return out;
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> values_;
};

/// a <= b at every pixel.
inline bool pointwise_leq(const GrayImage& a, const GrayImage& b)
{
    if (a.height() != b.height() || a.width() != b.width())
        throw ShapeError("grey images differ in size");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i])
            return false;
    return true;
}

enum class SeShape { disk, square };

struct StructuringElement {
    std::vector<std::pair<int, int>> offsets;
    int radius = 0;

    /// Discrete disk: all (dr, dc) with dr^2 + dc^2 <= r^2.
    static StructuringElement disk(int r)
    {
        if (r < 0)
            throw ParameterError("structuring element radius must be non-negative");
        StructuringElement se;
        se.radius = r;
        for (int dr = -r; dr <= r; ++dr)
            for (int dc = -r; dc <= r; ++dc)
                if (dr * dr + dc * dc <= r * r)
                    se.offsets.emplace_back(dr, dc);
        return se;
    }

    static StructuringElement square(int r)
    {
        if (r < 0)
            throw ParameterError("structuring element radius must be non-negative");
        StructuringElement se;
        se.radius = r;
        for (int dr = -r; dr <= r; ++dr)
            for (int dc = -r; dc <= r; ++dc)
                se.offsets.emplace_back(dr, dc);
        return se;
    }

    static StructuringElement make(SeShape shape, int r) { return shape == SeShape::disk ? disk(r) : square(r); }
};

namespace detail {

template <typename Select>
GrayImage flat_filter(const GrayImage& f, const StructuringElement& se, int sign, Select select)
{
    const auto h = static_cast<long long>(f.height()), w = static_cast<long long>(f.width());
    GrayImage out(f.height(), f.width(), 0.0);
    for (long long r = 0; r < h; ++r)
        for (long long c = 0; c < w; ++c) {
            bool first = true;
            double acc = 0.0;
            for (const auto& [dr, dc] : se.offsets) {
                const auto rr = static_cast<std::size_t>(std::clamp(r + sign * dr, 0LL, h - 1));
                const auto cc = static_cast<std::size_t>(std::clamp(c + sign * dc, 0LL, w - 1));
                const double v = f(rr, cc);
                acc = first ? v : select(acc, v);
                first = false;
            }
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = first ? f(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) : acc;
        }
    return out;
}

} // namespace detail

/// out(x) = min_{h in B} f(x + h).
inline GrayImage erode(const GrayImage& f, const StructuringElement& se)
{
    return detail::flat_filter(f, se, +1, [](double a, double b) { return std::min(a, b); });
}

/// out(x) = max_{h in B} f(x - h).
inline GrayImage dilate(const GrayImage& f, const StructuringElement& se)
{
    return detail::flat_filter(f, se, -1, [](double a, double b) { return std::max(a, b); });
}

inline GrayImage open(const GrayImage& f, const StructuringElement& se) { return dilate(erode(f, se), se); }
inline GrayImage close(const GrayImage& f, const StructuringElement& se) { return erode(dilate(f, se), se); }

enum class Polarity { dilation, erosion };

/// Geodesic reconstruction of `mask` from `marker` with 4-connectivity.
///
/// Dilation polarity needs marker <= mask and yields the fixpoint of
/// J <- min(dilate_cross(J), mask); erosion polarity is the dual. Computed with
/// the raster / anti-raster / FIFO hybrid scheme, which gives the same result
/// as iterating the elementary geodesic step to stability.
inline GrayImage reconstruct(const GrayImage& marker, const GrayImage& mask, Polarity polarity)
{
    if (marker.height() != mask.height() || marker.width() != mask.width())
        throw ShapeError("reconstruction marker and mask differ in size");
    if (polarity == Polarity::erosion) {
        if (!pointwise_leq(mask, marker))
            throw ContractViolation("reconstruction by erosion requires marker >= mask");
        return -reconstruct(-marker, -mask, Polarity::dilation);
    }
    if (!pointwise_leq(marker, mask))
        throw ContractViolation("reconstruction by dilation requires marker <= mask");

    const std::size_t h = mask.height(), w = mask.width();
    GrayImage j = marker;

    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            double v = j(r, c);
            if (r > 0)
                v = std::max(v, j(r - 1, c));
            if (c > 0)
                v = std::max(v, j(r, c - 1));
            j(r, c) = std::min(v, mask(r, c));
        }

    std::deque<std::size_t> fifo;
    for (std::size_t r = h; r-- > 0;)
        for (std::size_t c = w; c-- > 0;) {
            double v = j(r, c);
            if (r + 1 < h)
                v = std::max(v, j(r + 1, c));
            if (c + 1 < w)
                v = std::max(v, j(r, c + 1));
            v = std::min(v, mask(r, c));
            j(r, c) = v;
            const bool down = r + 1 < h && j(r + 1, c) < v && j(r + 1, c) < mask(r + 1, c);
            const bool right = c + 1 < w && j(r, c + 1) < v && j(r, c + 1) < mask(r, c + 1);
            if (down || right)
                fifo.push_back(r * w + c);
        }

    while (!fifo.empty()) {
        const std::size_t p = fifo.front();
        fifo.pop_front();
        const std::size_t r = p / w, c = p % w;
        const double jp = j[p];
        auto visit = [&](std::size_t q) {
            if (j[q] < jp && j[q] != mask[q]) {
                j[q] = std::min(jp, mask[q]);
                fifo.push_back(q);
            }
        };
        if (r > 0)
            visit(p - w);
        if (r + 1 < h)
            visit(p + w);
        if (c > 0)
            visit(p - 1);
        if (c + 1 < w)
            visit(p + 1);
    }
    return j;
}

/// Opening by reconstruction at scale i: reconstruct(erode(f, B_i), f).
inline GrayImage open_by_reconstruction(const GrayImage& f, int scale, SeShape shape = SeShape::disk)
{
    if (scale < 1)
        throw ParameterError("reconstruction scale index must be >= 1");
    return reconstruct(erode(f, StructuringElement::make(shape, scale)), f, Polarity::dilation);
}

inline GrayImage close_by_reconstruction(const GrayImage& f, int scale, SeShape shape = SeShape::disk)
{
    if (scale < 1)
        throw ParameterError("reconstruction scale index must be >= 1");
    return reconstruct(dilate(f, StructuringElement::make(shape, scale)), f, Polarity::erosion);
}

// ---------------------------------------------------------------------------
// PCA

/// Principal axes of a sample matrix (rows = observations).
/// Eigenvalues are of the unbiased covariance (divisor n - 1, or n when n = 1),
/// sorted descending; each axis is signed so that its largest-magnitude
/// coordinate is positive (first such coordinate on ties).
struct PcaModel {
    Vector mean;
    RowMatrix axes; ///< D x D, column k = k-th principal axis
    Vector eigenvalues;

    RowMatrix project(const RowMatrix& samples, std::size_t dims) const
    {
        if (static_cast<Eigen::Index>(dims) > axes.cols())
            throw ParameterError("projection dimension exceeds input dimension");
        if (samples.cols() != mean.size())
            throw ShapeError("PCA projection input has wrong dimension");
        return (samples.rowwise() - mean.transpose()) * axes.leftCols(static_cast<Eigen::Index>(dims));
    }
};

inline PcaModel fit_pca(const RowMatrix& samples)
{
    if (samples.rows() == 0 || samples.cols() == 0)
        throw DegenerateDataError("PCA needs a non-empty sample matrix");
    PcaModel model;
    model.mean = samples.colwise().mean().transpose();
    const RowMatrix centered = samples.rowwise() - model.mean.transpose();
    const double denom = samples.rows() > 1 ? static_cast<double>(samples.rows() - 1) : 1.0;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw NumericalError("covariance eigendecomposition failed");

    const Eigen::Index d = cov.rows();
    model.axes.resize(d, d);
    model.eigenvalues.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        // Eigen returns ascending eigenvalues.
        const Eigen::Index src = d - 1 - k;
        Vector axis = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        for (Eigen::Index i = 1; i < d; ++i)
            if (std::abs(axis(i)) > std::abs(axis(arg)))
                arg = i;
        if (axis(arg) < 0)
            axis = -axis;
        model.axes.col(k) = axis;
        model.eigenvalues(k) = solver.eigenvalues()(src);
    }
    return model;
}

inline RowMatrix pixel_matrix(const HyperspectralImage& image)
{
    return Eigen::Map<const RowMatrix>(image.data().data(), static_cast<Eigen::Index>(image.pixel_count()),
                                       static_cast<Eigen::Index>(image.bands()));
}

struct PcaReduction {
    PcaModel model;
    std::vector<GrayImage> bands;
};

/// Projects every pixel onto the top-d principal axes; returns one grey image per axis.
inline PcaReduction pca_reduce(const HyperspectralImage& image, std::size_t dims)
{
    if (dims < 1 || dims > image.bands())
        throw ParameterError("PCA dimension " + std::to_string(dims) + " outside [1, " +
                             std::to_string(image.bands()) + "]");
    const RowMatrix pixels = pixel_matrix(image);
    PcaReduction out{fit_pca(pixels), {}};
    const RowMatrix projected = out.model.project(pixels, dims);
    for (std::size_t k = 0; k < dims; ++k) {
        std::vector<double> values(image.pixel_count());
        for (std::size_t p = 0; p < values.size(); ++p)
            values[p] = projected(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k));
        out.bands.emplace_back(image.height(), image.width(), std::move(values));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Morphological profile

struct MorphoProfileConfig {
    std::size_t pca_dims = 4;
    std::size_t scales = 4;
    SeShape shape = SeShape::disk;

    std::size_t row_dim() const noexcept { return pca_dims * (2 * scales + 1); }
};

/// Per-pixel rows of d * (2n + 1) values: for each PCA band f,
/// [open_rec_1(f) ... open_rec_n(f), f, close_rec_1(f) ... close_rec_n(f)].
inline RowMatrix morphological_profile(const HyperspectralImage& image, const MorphoProfileConfig& config)
{
    if (config.pca_dims < 1)
        throw ParameterError("morphological profile needs at least one PCA band");
    const PcaReduction reduced = pca_reduce(image, config.pca_dims);
    const std::size_t n = config.scales, per_band = 2 * n + 1;
    RowMatrix table(static_cast<Eigen::Index>(image.pixel_count()), static_cast<Eigen::Index>(config.row_dim()));

    parallel_for(0, config.pca_dims, [&](std::size_t k) {
        const GrayImage& f = reduced.bands[k];
        auto put = [&](std::size_t slot, const GrayImage& g) {
            const auto col = static_cast<Eigen::Index>(k * per_band + slot);
            for (std::size_t p = 0; p < g.size(); ++p)
                table(static_cast<Eigen::Index>(p), col) = g[p];
        };
        for (std::size_t i = 1; i <= n; ++i) {
            put(i - 1, open_by_reconstruction(f, static_cast<int>(i), config.shape));
            put(n + i, close_by_reconstruction(f, static_cast<int>(i), config.shape));
        }
        put(n, f);
    });
    return table;
}

} // namespace hsikme

#endif // HSIKME_MORPHOLOGY_HPP
