#ifndef HSIKME_EMBEDDING_HPP
#define HSIKME_EMBEDDING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hsikme/error.hpp"
#include "hsikme/image.hpp"
#include "hsikme/matrix_io.hpp"
#include "hsikme/morphology.hpp"
#include "hsikme/parallel.hpp"
#include "hsikme/random.hpp"
#include "hsikme/rff.hpp"

namespace hsikme {

enum class FeatureKind { raw, rff, meanmap, convmeanmap, mp, tensor };

inline std::string to_string(FeatureKind kind)
{
    switch (kind) {
    case FeatureKind::raw: return "raw";
    case FeatureKind::rff: return "rff";
    case FeatureKind::meanmap: return "meanmap";
    case FeatureKind::convmeanmap: return "convmeanmap";
    case FeatureKind::mp: return "mp";
    case FeatureKind::tensor: return "tensor";
    }
    return "raw";
}

struct PixelFeature {
    Vector values;
    FeatureKind kind = FeatureKind::raw;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(values.size()); }
};

enum class Weighting { uniform, magnitude };

struct EmbeddingConfig {
    PatchSpec patch;
    std::optional<double> sigma;  ///< spectral bandwidth; unset = median heuristic
    std::optional<double> beta;   ///< spatial bandwidth (convolutional only); unset = patch side / 2
    std::size_t n_features = 1024;
    std::uint64_t seed = 0;
    Weighting weighting = Weighting::uniform;
    bool normalize = false;       ///< feed unit-norm spectra to rff / meanmap
    std::size_t median_samples = 1000;
};

/// (1/|patch|) sum_l z(v_l): the empirical mean embedding of the patch in
/// random-feature space. Its norm is at most one.
inline PixelFeature mean_map_feature(const RandomFeatureMap& map, std::span<const std::span<const double>> patch)
{
    if (patch.empty())
        throw ContractViolation("mean map of an empty patch");
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(map.feature_dim()));
    Vector z(acc.size());
    for (const auto& v : patch) {
        feature_into(map, v, {z.data(), static_cast<std::size_t>(z.size())});
        acc += z;
    }
    acc /= static_cast<double>(patch.size());
    return {std::move(acc), FeatureKind::meanmap};
}

inline double mean_map_kernel(const PixelFeature& a, const PixelFeature& b)
{
    auto embedding_kind = [](FeatureKind k) { return k == FeatureKind::meanmap || k == FeatureKind::convmeanmap; };
    if (!embedding_kind(a.kind) || !embedding_kind(b.kind))
        throw ContractViolation("mean_map_kernel expects mean-map features");
    if (a.dim() != b.dim())
        throw ShapeError("mean-map features differ in dimension");
    return a.values.dot(b.values);
}

/// [row/beta, col/beta, spectrum/sigma]: a unit-bandwidth Gaussian RBF on
/// these vectors is exp(-|dpos|^2/(2 beta^2)) * exp(-|dspec|^2/(2 sigma^2)).
inline Vector augment_pixel(double row, double col, std::span<const double> spectrum, double beta, double sigma)
{
    if (!(beta > 0.0) || !(sigma > 0.0))
        throw ParameterError("augment_pixel needs positive beta and sigma");
    Vector out(static_cast<Eigen::Index>(spectrum.size() + 2));
    out(0) = row / beta;
    out(1) = col / beta;
    for (std::size_t d = 0; d < spectrum.size(); ++d)
        out(static_cast<Eigen::Index>(d + 2)) = spectrum[d] / sigma;
    return out;
}

struct ConvPatchPixel {
    double d_row; ///< position relative to the window centre
    double d_col;
    std::span<const double> spectrum; ///< raw (unnormalised) spectrum
};

/// Magnitude-weighted mean map (1/|patch|) sum_l |h_l| z(aug(pos_l, h_l/|h_l|)).
/// The map must take D + 2 inputs and use unit bandwidth; beta and sigma are
/// folded into the augmented vector.
inline PixelFeature conv_mean_map_feature(const RandomFeatureMap& map, std::span<const ConvPatchPixel> patch,
                                          double beta, double sigma)
{
    if (patch.empty())
        throw ContractViolation("convolutional mean map of an empty patch");
    const std::size_t d = patch.front().spectrum.size();
    if (map.input_dim() != d + 2)
        throw ShapeError("convolutional map expects input dimension " + std::to_string(d + 2) + ", has " +
                         std::to_string(map.input_dim()));
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(map.feature_dim()));
    Vector z(acc.size());
    std::vector<double> unit(d);
    for (const auto& px : patch) {
        if (px.spectrum.size() != d)
            throw ShapeError("patch spectra differ in dimension");
        const double magnitude = euclidean_norm(px.spectrum);
        if (magnitude == 0.0)
            continue;
        for (std::size_t b = 0; b < d; ++b)
            unit[b] = px.spectrum[b] / magnitude;
        const Vector aug = augment_pixel(px.d_row, px.d_col, unit, beta, sigma);
        feature_into(map, as_span(aug), {z.data(), static_cast<std::size_t>(z.size())});
        acc += magnitude * z;
    }
    acc /= static_cast<double>(patch.size());
    return {std::move(acc), FeatureKind::convmeanmap};
}

inline PixelFeature conv_mean_map_feature(const RandomFeatureMap& map, std::span<const ConvPatchPixel> patch,
                                          const EmbeddingConfig& config)
{
    if (config.weighting != Weighting::magnitude)
        throw ContractViolation("convolutional mean map requires magnitude weighting");
    if (!config.sigma || !config.beta)
        throw ParameterError("convolutional mean map needs explicit sigma and beta");
    return conv_mean_map_feature(map, patch, *config.beta, *config.sigma);
}

inline constexpr std::size_t default_tensor_cap = 65536;

/// Flattened outer product u (x) v, entry i*q + j = u_i v_j, so that
/// <u (x) v, u' (x) v'> = <u, u'> <v, v'>.
inline PixelFeature tensor_product_features(const PixelFeature& u, const PixelFeature& v,
                                            std::size_t cap = default_tensor_cap)
{
    const std::size_t p = u.dim(), q = v.dim();
    if (p * q > cap)
        throw CapacityError("tensor product dimension " + std::to_string(p) + " x " + std::to_string(q) + " = " +
                            std::to_string(p * q) + " exceeds the cap of " + std::to_string(cap) +
                            "; reduce the input feature dimensions");
    Vector out(static_cast<Eigen::Index>(p * q));
    for (std::size_t i = 0; i < p; ++i)
        out.segment(static_cast<Eigen::Index>(i * q), static_cast<Eigen::Index>(q)) = u.values(static_cast<Eigen::Index>(i)) * v.values;
    return {std::move(out), FeatureKind::tensor};
}

// ---------------------------------------------------------------------------
// Whole-image feature tables

enum class Method { raw, rff, meanmap, convmeanmap, mp, mp_x_meanmap };

inline std::string to_string(Method m)
{
    switch (m) {
    case Method::raw: return "raw";
    case Method::rff: return "rff";
    case Method::meanmap: return "meanmap";
    case Method::convmeanmap: return "convmeanmap";
    case Method::mp: return "mp";
    case Method::mp_x_meanmap: return "mp_x_meanmap";
    }
    return "raw";
}

inline Method parse_method(const std::string& name)
{
    for (Method m : {Method::raw, Method::rff, Method::meanmap, Method::convmeanmap, Method::mp, Method::mp_x_meanmap})
        if (to_string(m) == name)
            return m;
    throw ParameterError("unknown feature method '" + name + "'");
}

struct MethodSpec {
    Method method = Method::meanmap;
    EmbeddingConfig embedding;
    MorphoProfileConfig mp;
    std::size_t tensor_cap = default_tensor_cap;
    bool scale_mp = true; ///< min-max scale MP columns to [0, 1]
};

struct FeatureTable {
    RowMatrix values; ///< one row per pixel, row-major pixel order
    FeatureKind kind = FeatureKind::raw;
    nlohmann::json descriptor;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// Resolved bandwidths of a build, reported in the table descriptor.
struct ResolvedBandwidths {
    double sigma = 0.0;
    double beta = 0.0;
};

namespace detail {

inline RowMatrix unit_rows(const RowMatrix& m)
{
    RowMatrix out = m;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double n = out.row(r).norm();
        if (n > 0.0)
            out.row(r) /= n;
    }
    return out;
}

inline RowMatrix rff_table(const RandomFeatureMap& map, const RowMatrix& inputs)
{
    RowMatrix z(inputs.rows(), static_cast<Eigen::Index>(map.feature_dim()));
    parallel_for(0, static_cast<std::size_t>(inputs.rows()), [&](std::size_t p) {
        const auto row = static_cast<Eigen::Index>(p);
        feature_into(map, {inputs.data() + row * inputs.cols(), static_cast<std::size_t>(inputs.cols())},
                     {z.data() + row * z.cols(), static_cast<std::size_t>(z.cols())});
    });
    return z;
}

/// Sum over the side x side window (border-resolved) of per-pixel rows,
/// computed as a horizontal then a vertical pass.
inline RowMatrix window_sum(const RowMatrix& z, std::size_t height, std::size_t width, const PatchSpec& patch)
{
    const auto ext = window_extent(patch.side);
    const Eigen::Index cols = z.cols();
    RowMatrix horizontal = RowMatrix::Zero(z.rows(), cols);
    parallel_for(0, height, [&](std::size_t r) {
        for (std::size_t c = 0; c < width; ++c) {
            auto dst = horizontal.row(static_cast<Eigen::Index>(r * width + c));
            for (int dc = ext.lo; dc <= ext.hi; ++dc) {
                const std::size_t cc = resolve_coordinate(static_cast<long long>(c) + dc, width, patch.border);
                dst += z.row(static_cast<Eigen::Index>(r * width + cc));
            }
        }
    });
    RowMatrix out = RowMatrix::Zero(z.rows(), cols);
    parallel_for(0, height, [&](std::size_t r) {
        for (int dr = ext.lo; dr <= ext.hi; ++dr) {
            const std::size_t rr = resolve_coordinate(static_cast<long long>(r) + dr, height, patch.border);
            out.middleRows(static_cast<Eigen::Index>(r * width), static_cast<Eigen::Index>(width)) +=
                horizontal.middleRows(static_cast<Eigen::Index>(rr * width), static_cast<Eigen::Index>(width));
        }
    });
    return out;
}

inline RowMatrix min_max_scale(RowMatrix m)
{
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double lo = m.col(c).minCoeff(), hi = m.col(c).maxCoeff();
        if (hi > lo)
            m.col(c) = (m.col(c).array() - lo) / (hi - lo);
        else
            m.col(c).setZero();
    }
    return m;
}

inline double resolve_sigma(const EmbeddingConfig& cfg, const RowMatrix& inputs)
{
    if (cfg.sigma) {
        if (!(*cfg.sigma > 0.0))
            throw ParameterError("sigma must be positive");
        return *cfg.sigma;
    }
    return median_heuristic(inputs, cfg.median_samples, derive_seed(cfg.seed, 0x5167));
}

inline double resolve_beta(const EmbeddingConfig& cfg)
{
    if (cfg.beta) {
        if (!(*cfg.beta > 0.0))
            throw ParameterError("beta must be positive");
        return *cfg.beta;
    }
    return std::max(1.0, static_cast<double>(cfg.patch.side) / 2.0);
}

/// Convolutional mean-map table. cos/sin of the spectral and positional
/// phases are tabulated once and combined with the angle-addition identities.
inline RowMatrix conv_table(const HyperspectralImage& image, const RandomFeatureMap& map, const EmbeddingConfig& cfg,
                            double beta, double sigma)
{
    const std::size_t h = image.height(), w = image.width(), d = image.bands();
    const std::size_t n = map.count(), pixels = image.pixel_count();
    const auto& omega = map.frequencies();

    std::vector<double> magnitude(pixels);
    RowMatrix cos_spec(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(n));
    RowMatrix sin_spec(cos_spec.rows(), cos_spec.cols());
    parallel_for(0, pixels, [&](std::size_t p) {
        const auto s = image.spectrum(p);
        magnitude[p] = euclidean_norm(s);
        Vector scaled(static_cast<Eigen::Index>(d));
        for (std::size_t b = 0; b < d; ++b)
            scaled(static_cast<Eigen::Index>(b)) = magnitude[p] > 0.0 ? s[b] / magnitude[p] / sigma : 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double a = omega.row(static_cast<Eigen::Index>(j)).tail(static_cast<Eigen::Index>(d)).dot(scaled);
            cos_spec(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = std::cos(a);
            sin_spec(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = std::sin(a);
        }
    });

    const auto ext = window_extent(cfg.patch.side);
    std::vector<std::pair<int, int>> offsets;
    for (int dr = ext.lo; dr <= ext.hi; ++dr)
        for (int dc = ext.lo; dc <= ext.hi; ++dc)
            offsets.emplace_back(dr, dc);
    RowMatrix cos_pos(static_cast<Eigen::Index>(offsets.size()), static_cast<Eigen::Index>(n));
    RowMatrix sin_pos(cos_pos.rows(), cos_pos.cols());
    for (std::size_t o = 0; o < offsets.size(); ++o)
        for (std::size_t j = 0; j < n; ++j) {
            const double b = omega(static_cast<Eigen::Index>(j), 0) * (offsets[o].first / beta) +
                             omega(static_cast<Eigen::Index>(j), 1) * (offsets[o].second / beta);
            cos_pos(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(j)) = std::cos(b);
            sin_pos(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(j)) = std::sin(b);
        }

    const double scale = std::sqrt(1.0 / static_cast<double>(n)) / static_cast<double>(offsets.size());
    RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(2 * n));
    parallel_for(0, pixels, [&](std::size_t p) {
        const std::size_t row = p / w, col = p % w;
        auto dst = out.row(static_cast<Eigen::Index>(p));
        for (std::size_t o = 0; o < offsets.size(); ++o) {
            const std::size_t q =
                resolve_coordinate(static_cast<long long>(row) + offsets[o].first, h, cfg.patch.border) * w +
                resolve_coordinate(static_cast<long long>(col) + offsets[o].second, w, cfg.patch.border);
            const double m = magnitude[q];
            if (m == 0.0)
                continue;
            const auto cs = cos_spec.row(static_cast<Eigen::Index>(q)).array();
            const auto ss = sin_spec.row(static_cast<Eigen::Index>(q)).array();
            const auto cp = cos_pos.row(static_cast<Eigen::Index>(o)).array();
            const auto sp = sin_pos.row(static_cast<Eigen::Index>(o)).array();
            dst.head(static_cast<Eigen::Index>(n)).array() += m * (cs * cp - ss * sp);
            dst.tail(static_cast<Eigen::Index>(n)).array() += m * (ss * cp + cs * sp);
        }
        dst *= scale;
    });
    return out;
}

} // namespace detail

/// Map used by build_feature_table for the spectral methods.
inline RandomFeatureMap spectral_feature_map(std::size_t bands, const EmbeddingConfig& cfg, double sigma)
{
    return sample_frequencies(bands, cfg.n_features, sigma, cfg.seed);
}

/// Map used by build_feature_table for the convolutional method (unit bandwidth on D + 2 inputs).
inline RandomFeatureMap convolutional_feature_map(std::size_t bands, const EmbeddingConfig& cfg)
{
    return sample_frequencies(bands + 2, cfg.n_features, 1.0, cfg.seed);
}

/// One feature row per pixel for the requested method. Deterministic per
/// configuration seed.
inline FeatureTable build_feature_table(const HyperspectralImage& image, const MethodSpec& spec)
{
    const auto& cfg = spec.embedding;
    const RowMatrix pixels = pixel_matrix(image);
    FeatureTable table;
    table.descriptor = {{"method", to_string(spec.method)},
                        {"pixels", image.pixel_count()},
                        {"height", image.height()},
                        {"width", image.width()},
                        {"bands", image.bands()},
                        {"seed", cfg.seed}};

    auto spectral_inputs = [&] { return cfg.normalize ? detail::unit_rows(pixels) : pixels; };

    auto meanmap_table = [&](ResolvedBandwidths& bw) {
        const RowMatrix inputs = spectral_inputs();
        bw.sigma = detail::resolve_sigma(cfg, inputs);
        const auto map = spectral_feature_map(image.bands(), cfg, bw.sigma);
        RowMatrix z = detail::rff_table(map, inputs);
        if (cfg.patch.side == 1)
            return z;
        RowMatrix sums = detail::window_sum(z, image.height(), image.width(), cfg.patch);
        sums /= static_cast<double>(cfg.patch.side * cfg.patch.side);
        return sums;
    };

    auto mp_table = [&] {
        RowMatrix mp = morphological_profile(image, spec.mp);
        return spec.scale_mp ? detail::min_max_scale(std::move(mp)) : mp;
    };

    ResolvedBandwidths bw;
    switch (spec.method) {
    case Method::raw:
        table.values = pixels;
        table.kind = FeatureKind::raw;
        break;
    case Method::rff: {
        const RowMatrix inputs = spectral_inputs();
        bw.sigma = detail::resolve_sigma(cfg, inputs);
        table.values = detail::rff_table(spectral_feature_map(image.bands(), cfg, bw.sigma), inputs);
        table.kind = FeatureKind::rff;
        break;
    }
    case Method::meanmap:
        table.values = meanmap_table(bw);
        table.kind = FeatureKind::meanmap;
        break;
    case Method::convmeanmap: {
        bw.sigma = detail::resolve_sigma(cfg, detail::unit_rows(pixels));
        bw.beta = detail::resolve_beta(cfg);
        table.values = detail::conv_table(image, convolutional_feature_map(image.bands(), cfg), cfg, bw.beta, bw.sigma);
        table.kind = FeatureKind::convmeanmap;
        break;
    }
    case Method::mp:
        table.values = mp_table();
        table.kind = FeatureKind::mp;
        break;
    case Method::mp_x_meanmap: {
        const std::size_t p = spec.mp.row_dim(), q = 2 * cfg.n_features;
        if (p * q > spec.tensor_cap)
            throw CapacityError("tensor product dimension " + std::to_string(p) + " x " + std::to_string(q) + " = " +
                                std::to_string(p * q) + " exceeds the cap of " + std::to_string(spec.tensor_cap) +
                                "; reduce the PCA bands, scales or random features");
        const RowMatrix mp = mp_table();
        const RowMatrix mm = meanmap_table(bw);
        table.values.resize(mp.rows(), static_cast<Eigen::Index>(p * q));
        parallel_for(0, static_cast<std::size_t>(mp.rows()), [&](std::size_t r) {
            const auto row = static_cast<Eigen::Index>(r);
            for (Eigen::Index i = 0; i < mp.cols(); ++i)
                table.values.row(row).segment(i * mm.cols(), mm.cols()) = mp(row, i) * mm.row(row);
        });
        table.kind = FeatureKind::tensor;
        break;
    }
    }

    auto& d = table.descriptor;
    d["kind"] = to_string(table.kind);
    d["dim"] = table.values.cols();
    if (spec.method != Method::raw && spec.method != Method::mp) {
        d["n_features"] = cfg.n_features;
        d["sigma"] = bw.sigma;
        d["patch_side"] = cfg.patch.side;
        d["border"] = cfg.patch.border == BorderPolicy::clamp ? "clamp" : "mirror";
        d["normalize"] = cfg.normalize;
    }
    if (spec.method == Method::convmeanmap)
        d["beta"] = bw.beta;
    if (spec.method == Method::mp || spec.method == Method::mp_x_meanmap) {
        d["pca_dims"] = spec.mp.pca_dims;
        d["scales"] = spec.mp.scales;
        d["se_shape"] = spec.mp.shape == SeShape::disk ? "disk" : "square";
        d["scale_mp"] = spec.scale_mp;
    }
    return table;
}

inline void save_feature_table(const FeatureTable& table, const std::filesystem::path& base)
{
    write_matrix(base, table.values, table.descriptor);
}

inline FeatureTable load_feature_table(const std::filesystem::path& base)
{
    auto stored = read_matrix(base);
    FeatureTable t;
    t.values = std::move(stored.values);
    t.descriptor = std::move(stored.descriptor);
    const std::string kind = t.descriptor.value("kind", "raw");
    for (FeatureKind k : {FeatureKind::raw, FeatureKind::rff, FeatureKind::meanmap, FeatureKind::convmeanmap,
                          FeatureKind::mp, FeatureKind::tensor})
        if (to_string(k) == kind)
            t.kind = k;
    return t;
}

} // namespace hsikme

#endif // HSIKME_EMBEDDING_HPP
