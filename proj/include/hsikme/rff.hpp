#ifndef HSIKME_RFF_HPP
#define HSIKME_RFF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hsikme/error.hpp"
#include "hsikme/matrix_io.hpp"
#include "hsikme/random.hpp"

namespace hsikme {

/// Random Fourier feature map for the Gaussian RBF kernel
/// k(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
///
/// Holds N frequencies w_j ~ N(0, sigma^-2 I_D) and maps x to the 2N-vector
///   sqrt(1/N) [cos(w_1.x) ... cos(w_N.x), sin(w_1.x) ... sin(w_N.x)],
/// whose Euclidean norm is exactly one. Rebuilding from (seed, N, D, sigma)
/// reproduces the frequencies bit for bit: row j, column d is the
/// (j*D + d)-th Rng::normal() draw of Rng(seed), divided by sigma.
class RandomFeatureMap {
public:
    RandomFeatureMap() = default;

    RandomFeatureMap(RowMatrix frequencies, double bandwidth, std::uint64_t seed)
        : frequencies_(std::move(frequencies)), bandwidth_(bandwidth), seed_(seed)
    {
        if (!(bandwidth_ > 0.0))
            throw ParameterError("RFF bandwidth must be positive");
        if (frequencies_.rows() == 0 || frequencies_.cols() == 0)
            throw ParameterError("RFF map needs at least one frequency and one input dimension");
    }

    const RowMatrix& frequencies() const noexcept { return frequencies_; }
    double bandwidth() const noexcept { return bandwidth_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(frequencies_.cols()); }
    std::size_t count() const noexcept { return static_cast<std::size_t>(frequencies_.rows()); }
    std::size_t feature_dim() const noexcept { return 2 * count(); }

private:
    RowMatrix frequencies_;
    double bandwidth_ = 1.0;
    std::uint64_t seed_ = 0;
};

inline RandomFeatureMap sample_frequencies(std::size_t input_dim, std::size_t count, double bandwidth,
                                           std::uint64_t seed)
{
    if (input_dim == 0 || count == 0)
        throw ParameterError("RFF map needs D >= 1 and N >= 1");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw ParameterError("RFF bandwidth must be positive and finite");
    Rng rng(seed);
    RowMatrix w(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(input_dim));
    for (Eigen::Index j = 0; j < w.rows(); ++j)
        for (Eigen::Index d = 0; d < w.cols(); ++d)
            w(j, d) = rng.normal() / bandwidth;
    return {std::move(w), bandwidth, seed};
}

/// Writes the 2N feature vector of x into `out` (length 2N).
inline void feature_into(const RandomFeatureMap& map, std::span<const double> x, std::span<double> out)
{
    if (x.size() != map.input_dim())
        throw ShapeError("RFF input has dimension " + std::to_string(x.size()) + ", map expects " +
                         std::to_string(map.input_dim()));
    if (out.size() != map.feature_dim())
        throw ShapeError("RFF output buffer has wrong length");
    const std::size_t n = map.count();
    const double scale = std::sqrt(1.0 / static_cast<double>(n));
    const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const auto& w = map.frequencies();
    for (std::size_t j = 0; j < n; ++j) {
        const double phase = w.row(static_cast<Eigen::Index>(j)).dot(xv);
        out[j] = scale * std::cos(phase);
        out[n + j] = scale * std::sin(phase);
    }
}

inline Vector feature(const RandomFeatureMap& map, std::span<const double> x)
{
    Vector out(static_cast<Eigen::Index>(map.feature_dim()));
    feature_into(map, x, {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

inline std::span<const double> as_span(const Vector& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

inline double approx_kernel(const RandomFeatureMap& map, std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw ShapeError("approx_kernel operands differ in dimension");
    return feature(map, x).dot(feature(map, y));
}

inline double squared_distance(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw ShapeError("operands differ in dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

/// exp(-|x - y|^2 / (2 sigma^2)).
inline double exact_gaussian_kernel(std::span<const double> x, std::span<const double> y, double sigma)
{
    if (!(sigma > 0.0))
        throw ParameterError("Gaussian kernel bandwidth must be positive");
    return std::exp(-squared_distance(x, y) / (2.0 * sigma * sigma));
}

/// Median pairwise Euclidean distance among up to `sample_count` rows drawn
/// without replacement (seeded). Falls back to the mean positive distance when
/// the median is zero, and to 1 when every sampled row is identical.
inline double median_heuristic(const RowMatrix& points, std::size_t sample_count = 1000, std::uint64_t seed = 0)
{
    const auto n = static_cast<std::size_t>(points.rows());
    if (n < 2)
        throw DegenerateDataError("median heuristic needs at least two points");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t m = std::min(sample_count, n);
    Rng rng(seed);
    for (std::size_t i = 0; i < m; ++i)
        std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.below(n - i))]);

    std::vector<double> dist;
    dist.reserve(m * (m - 1) / 2);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            dist.push_back((points.row(static_cast<Eigen::Index>(idx[a])) -
                            points.row(static_cast<Eigen::Index>(idx[b])))
                               .norm());
    std::sort(dist.begin(), dist.end());
    const std::size_t k = dist.size();
    const double median = k % 2 ? dist[k / 2] : 0.5 * (dist[k / 2 - 1] + dist[k / 2]);
    if (median > 0.0)
        return median;
    double sum = 0.0;
    std::size_t positive = 0;
    for (double d : dist)
        if (d > 0.0) {
            sum += d;
            ++positive;
        }
    return positive ? sum / static_cast<double>(positive) : 1.0;
}

inline void save_feature_map(const RandomFeatureMap& map, const std::filesystem::path& base)
{
    write_matrix(base, map.frequencies(),
                 {{"kind", "random_feature_map"},
                  {"seed", map.seed()},
                  {"bandwidth", map.bandwidth()},
                  {"input_dim", map.input_dim()},
                  {"count", map.count()},
                  {"feature_dim", map.feature_dim()}});
}

inline RandomFeatureMap load_feature_map(const std::filesystem::path& base)
{
    auto stored = read_matrix(base);
    if (stored.descriptor.value("kind", "") != "random_feature_map")
        throw FormatError("not a random feature map descriptor");
    return {std::move(stored.values), stored.descriptor.at("bandwidth").get<double>(),
            stored.descriptor.at("seed").get<std::uint64_t>()};
}

} // namespace hsikme

#endif // HSIKME_RFF_HPP
