#ifndef HSIKME_SYNTH_HPP
#define HSIKME_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hsikme/error.hpp"
#include "hsikme/image.hpp"
#include "hsikme/random.hpp"

namespace hsikme {

/// Parameters of a synthetic labelled scene: a Voronoi partition into
/// regions of roughly region_scale pixels across, one class per region, with
/// each pixel spectrum = class endmember + N(0, noise_sigma^2) per band.
struct SceneSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t bands = 20;
    int classes = 3;
    std::vector<std::vector<double>> class_spectra; ///< empty: default_endmembers(classes, bands, seed)
    double region_scale = 16.0;
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;
};

/// Smooth, pairwise distinct reflectance curves: a 0.3 baseline plus three
/// Gaussian bumps with random centre, width and amplitude per class.
inline std::vector<std::vector<double>> default_endmembers(int classes, std::size_t bands, std::uint64_t seed)
{
    Rng rng(derive_seed(seed, 0xe7d));
    std::vector<std::vector<double>> out(static_cast<std::size_t>(classes), std::vector<double>(bands, 0.3));
    for (auto& spectrum : out) {
        for (int bump = 0; bump < 3; ++bump) {
            const double centre = rng.uniform() * static_cast<double>(bands);
            const double width = 1.0 + rng.uniform() * static_cast<double>(bands) / 4.0;
            const double amp = 0.1 + 0.2 * rng.uniform();
            for (std::size_t b = 0; b < bands; ++b) {
                const double t = (static_cast<double>(b) - centre) / width;
                spectrum[b] += amp * std::exp(-0.5 * t * t);
            }
        }
    }
    return out;
}

inline void validate(const SceneSpec& spec)
{
    if (spec.height == 0 || spec.width == 0 || spec.bands == 0)
        throw ParameterError("scene dimensions must be positive");
    if (spec.classes < 1)
        throw ParameterError("scene needs at least one class");
    if (static_cast<std::size_t>(spec.classes) > spec.height * spec.width)
        throw InfeasibleError("cannot place " + std::to_string(spec.classes) + " classes in " +
                              std::to_string(spec.height * spec.width) + " pixels");
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma))
        throw ParameterError("noise_sigma must be finite and non-negative");
    if (!(spec.region_scale > 0.0))
        throw ParameterError("region_scale must be positive");
    if (!spec.class_spectra.empty()) {
        if (spec.class_spectra.size() != static_cast<std::size_t>(spec.classes))
            throw ShapeError("class_spectra count does not match classes");
        for (const auto& s : spec.class_spectra)
            if (s.size() != spec.bands)
                throw ShapeError("class spectrum length does not match bands");
        for (std::size_t i = 0; i < spec.class_spectra.size(); ++i)
            for (std::size_t j = i + 1; j < spec.class_spectra.size(); ++j)
                if (spec.class_spectra[i] == spec.class_spectra[j])
                    throw ParameterError("class spectra must be pairwise distinct");
    }
}

/// Deterministic in spec.seed. Every class owns at least one region whose
/// seed pixel is labelled with it, so all classes are present.
inline std::pair<HyperspectralImage, GroundTruthMap> generate_synthetic_scene(const SceneSpec& spec)
{
    validate(spec);
    const auto endmembers = spec.class_spectra.empty()
                                ? default_endmembers(spec.classes, spec.bands, spec.seed)
                                : spec.class_spectra;
    const std::size_t h = spec.height, w = spec.width, d = spec.bands, n = h * w;
    Rng rng(derive_seed(spec.seed, 1));

    const double area = spec.region_scale * spec.region_scale;
    std::size_t regions = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / area));
    regions = std::clamp<std::size_t>(regions, static_cast<std::size_t>(spec.classes), n);

    // Region seeds at distinct pixels (partial Fisher-Yates).
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < regions; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(order[i], order[j]);
    }
    std::vector<int> region_class(regions);
    for (std::size_t r = 0; r < regions; ++r)
        region_class[r] = r < static_cast<std::size_t>(spec.classes)
                              ? static_cast<int>(r) + 1
                              : static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.classes))) + 1;

    std::vector<int> labels(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double pr = static_cast<double>(p / w), pc = static_cast<double>(p % w);
        double best = std::numeric_limits<double>::infinity();
        std::size_t owner = 0;
        for (std::size_t r = 0; r < regions; ++r) {
            const double dr = pr - static_cast<double>(order[r] / w);
            const double dc = pc - static_cast<double>(order[r] % w);
            const double dist = dr * dr + dc * dc;
            if (dist < best) {
                best = dist;
                owner = r;
            }
        }
        labels[p] = region_class[owner];
    }

    std::vector<double> data(n * d);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& e = endmembers[static_cast<std::size_t>(labels[p] - 1)];
        for (std::size_t b = 0; b < d; ++b)
            data[p * d + b] = e[b] + (spec.noise_sigma > 0.0 ? spec.noise_sigma * rng.normal() : 0.0);
    }
    return {HyperspectralImage(h, w, d, std::move(data)), GroundTruthMap(h, w, std::move(labels))};
}

inline void to_json(nlohmann::json& j, const SceneSpec& s)
{
    j = nlohmann::json{{"height", s.height}, {"width", s.width}, {"bands", s.bands},
                       {"classes", s.classes}, {"class_spectra", s.class_spectra},
                       {"region_scale", s.region_scale}, {"noise_sigma", s.noise_sigma}, {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, SceneSpec& s)
{
    try {
        s = SceneSpec{};
        s.height = j.value("height", s.height);
        s.width = j.value("width", s.width);
        s.bands = j.value("bands", s.bands);
        s.classes = j.value("classes", s.classes);
        s.class_spectra = j.value("class_spectra", s.class_spectra);
        s.region_scale = j.value("region_scale", s.region_scale);
        s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid scene spec: ") + e.what());
    }
}

} // namespace hsikme

#endif // HSIKME_SYNTH_HPP
