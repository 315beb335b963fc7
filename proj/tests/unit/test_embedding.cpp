#include <gtest/gtest.h>

#include <hsikme.hpp>

#include "oracles.hpp"
#include "support.hpp"

#include <cmath>

using namespace hsikme;

namespace {

std::vector<std::vector<double>> random_patch(oracle::TestRandom& rnd, std::size_t count, std::size_t d)
{
    std::vector<std::vector<double>> out(count, std::vector<double>(d));
    for (auto& v : out)
        for (double& x : v)
            x = rnd.uniform(0.0, 1.0);
    return out;
}

std::vector<std::span<const double>> spans(const std::vector<std::vector<double>>& patch)
{
    return {patch.begin(), patch.end()};
}

double gaussian(const std::vector<double>& a, const std::vector<double>& b, double sigma)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-s / (2.0 * sigma * sigma));
}

double norm(const std::vector<double>& v) { return std::sqrt(oracle::dot(v, v)); }

/// 3x3 window offsets in row-major order.
std::vector<std::pair<int, int>> offsets3()
{
    std::vector<std::pair<int, int>> out;
    for (int r = -1; r <= 1; ++r)
        for (int c = -1; c <= 1; ++c)
            out.emplace_back(r, c);
    return out;
}

std::vector<ConvPatchPixel> conv_patch(const std::vector<std::vector<double>>& spectra)
{
    std::vector<ConvPatchPixel> out;
    const auto off = offsets3();
    for (std::size_t k = 0; k < spectra.size(); ++k)
        out.push_back({static_cast<double>(off[k].first), static_cast<double>(off[k].second), spectra[k]});
    return out;
}

/// Augmented oracle vector [r/beta, c/beta, h/|h|/sigma].
std::vector<double> varpi(int r, int c, const std::vector<double>& h, double beta, double sigma)
{
    std::vector<double> out{r / beta, c / beta};
    const double n = norm(h);
    for (double x : h)
        out.push_back(x / n / sigma);
    return out;
}

HyperspectralImage small_scene(std::size_t h, std::size_t w, std::uint64_t seed)
{
    SceneSpec spec;
    spec.height = h;
    spec.width = w;
    spec.bands = 6;
    spec.classes = 3;
    spec.region_scale = 4;
    spec.noise_sigma = 0.05;
    spec.seed = seed;
    return generate_synthetic_scene(spec).first;
}

} // namespace

// ---------------------------------------------------------------- mean maps

TEST(MeanMap, SinglePixelEqualsFeature)
{
    oracle::TestRandom rnd(1);
    const auto map = sample_frequencies(4, 128, 0.8, 2);
    const auto patch = random_patch(rnd, 1, 4);
    const auto mu = mean_map_feature(map, spans(patch));
    EXPECT_EQ(mu.values, feature(map, patch[0]));
    EXPECT_EQ(mu.kind, FeatureKind::meanmap);
}

TEST(MeanMap, RepeatedSpectrumEqualsFeature)
{
    oracle::TestRandom rnd(2);
    const auto map = sample_frequencies(4, 128, 0.8, 2);
    const auto one = random_patch(rnd, 1, 4);
    const std::vector<std::vector<double>> patch(9, one[0]);
    const auto mu = mean_map_feature(map, spans(patch));
    EXPECT_LT((mu.values - feature(map, one[0])).norm(), 1e-14);
}

TEST(MeanMap, DotEqualsDoubleSum)
{
    oracle::TestRandom rnd(3);
    const auto map = sample_frequencies(5, 256, 0.6, 3);
    const auto omega = [&] {
        oracle::Matrix m(map.count(), std::vector<double>(map.input_dim()));
        for (std::size_t j = 0; j < map.count(); ++j)
            for (std::size_t d = 0; d < map.input_dim(); ++d)
                m[j][d] = map.frequencies()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d));
        return m;
    }();
    for (int t = 0; t < 5; ++t) {
        const auto a = random_patch(rnd, 9, 5);
        const auto b = random_patch(rnd, 9, 5);
        const auto mu_a = mean_map_feature(map, spans(a));
        const auto mu_b = mean_map_feature(map, spans(b));
        double sum = 0.0;
        for (const auto& x : a)
            for (const auto& y : b)
                sum += oracle::dot(oracle::rff(omega, x), oracle::rff(omega, y));
        EXPECT_NEAR(mean_map_kernel(mu_a, mu_b), sum / 81.0, 1e-10);
        EXPECT_EQ(mean_map_kernel(mu_a, mu_b), mean_map_kernel(mu_b, mu_a));
    }
}

TEST(MeanMap, NormBoundedByOne)
{
    oracle::TestRandom rnd(4);
    const auto map = sample_frequencies(3, 64, 0.5, 4);
    for (int t = 0; t < 100; ++t) {
        const auto patch = random_patch(rnd, 1 + static_cast<std::size_t>(t % 16), 3);
        EXPECT_LE(mean_map_feature(map, spans(patch)).values.norm(), 1.0 + 1e-12);
    }
}

TEST(MeanMap, Errors)
{
    const auto map = sample_frequencies(3, 8, 1.0, 0);
    std::vector<std::span<const double>> empty;
    EXPECT_THROW(mean_map_feature(map, empty), ContractViolation);
    PixelFeature a{Vector::Ones(4), FeatureKind::meanmap}, b{Vector::Ones(6), FeatureKind::meanmap};
    EXPECT_THROW(mean_map_kernel(a, b), ShapeError);
}

TEST(MeanMapKernel, SinglePixelSelfIsOne)
{
    const auto map = sample_frequencies(3, 64, 1.0, 0);
    const std::vector<std::vector<double>> patch{{0.2, 0.4, 0.1}};
    const auto mu = mean_map_feature(map, spans(patch));
    EXPECT_NEAR(mean_map_kernel(mu, mu), 1.0, 1e-12);
}

// ---------------------------------------------------------------- augmentation

TEST(Augment, UnitBandwidthsConcatenate)
{
    const std::vector<double> h{0.6, 0.8};
    const auto v = augment_pixel(3.0, -2.0, h, 1.0, 1.0);
    ASSERT_EQ(v.size(), 4);
    EXPECT_EQ(v(0), 3.0);
    EXPECT_EQ(v(1), -2.0);
    EXPECT_EQ(v(2), 0.6);
    EXPECT_EQ(v(3), 0.8);
}

TEST(Augment, SpectralFactorGivesInverseE)
{
    const double sigma = 0.4, beta = 2.5;
    // Orthogonal unit spectra are sqrt(2) apart; scale so the distance is sigma*sqrt(2).
    // Use unit spectra h1, h2 with |h1 - h2| = sigma*sqrt(2) (valid since sigma*sqrt(2) <= 2).
    const double angle = 2.0 * std::asin(sigma * std::sqrt(2.0) / 2.0);
    const std::vector<double> h1{1.0, 0.0}, h2{std::cos(angle), std::sin(angle)};
    const auto a = augment_pixel(1.0, 1.0, h1, beta, sigma);
    const auto b = augment_pixel(1.0, 1.0, h2, beta, sigma);
    EXPECT_NEAR(std::exp(-(a - b).squaredNorm() / 2.0), std::exp(-1.0), 1e-12);
}

TEST(Augment, SpatialFactorGivesInverseE)
{
    const double sigma = 0.4, beta = 2.5;
    const std::vector<double> h{0.6, 0.8};
    const auto a = augment_pixel(0.0, 0.0, h, beta, sigma);
    const auto b = augment_pixel(beta, beta, h, beta, sigma); // distance beta*sqrt(2)
    EXPECT_NEAR(std::exp(-(a - b).squaredNorm() / 2.0), std::exp(-1.0), 1e-12);
    EXPECT_THROW(augment_pixel(0, 0, h, 0.0, 1.0), ParameterError);
}

// ---------------------------------------------------------------- convolutional mean map

TEST(ConvMeanMap, ZeroSpectraGiveZero)
{
    const auto map = sample_frequencies(5, 32, 1.0, 1);
    const std::vector<std::vector<double>> spectra(9, std::vector<double>(3, 0.0));
    const auto patch = conv_patch(spectra);
    const auto f = conv_mean_map_feature(map, patch, 1.5, 0.5);
    EXPECT_EQ(f.values.norm(), 0.0);
}

TEST(ConvMeanMap, SingleUnitPixelHasNormOne)
{
    const auto map = sample_frequencies(4, 64, 1.0, 1);
    const std::vector<double> h{0.6, 0.8};
    const std::vector<ConvPatchPixel> patch{{0.0, 0.0, h}};
    const auto f = conv_mean_map_feature(map, patch, 1.5, 0.5);
    EXPECT_NEAR(f.values.norm(), 1.0, 1e-12);
    EXPECT_LT((f.values - feature(map, as_span(augment_pixel(0, 0, h, 1.5, 0.5)))).norm(), 1e-14);
}

TEST(ConvMeanMap, DotEqualsWeightedDoubleSum)
{
    oracle::TestRandom rnd(5);
    const double beta = 1.5, sigma = 0.3;
    const auto map = sample_frequencies(6, 256, 1.0, 6);
    oracle::Matrix omega(map.count(), std::vector<double>(map.input_dim()));
    for (std::size_t j = 0; j < map.count(); ++j)
        for (std::size_t d = 0; d < map.input_dim(); ++d)
            omega[j][d] = map.frequencies()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d));
    const auto off = offsets3();
    for (int t = 0; t < 3; ++t) {
        const auto a = random_patch(rnd, 9, 4);
        const auto b = random_patch(rnd, 9, 4);
        const auto fa = conv_mean_map_feature(map, conv_patch(a), beta, sigma);
        const auto fb = conv_mean_map_feature(map, conv_patch(b), beta, sigma);
        double sum = 0.0;
        for (std::size_t i = 0; i < 9; ++i)
            for (std::size_t j = 0; j < 9; ++j) {
                const auto za = oracle::rff(omega, varpi(off[i].first, off[i].second, a[i], beta, sigma));
                const auto zb = oracle::rff(omega, varpi(off[j].first, off[j].second, b[j], beta, sigma));
                sum += norm(a[i]) * norm(b[j]) * oracle::dot(za, zb);
            }
        EXPECT_NEAR(mean_map_kernel(fa, fb), sum / 81.0, 1e-10);
    }
}

TEST(ConvMeanMap, ApproximatesSpatialTimesSpectralKernel)
{
    oracle::TestRandom rnd(6);
    const double beta = 1.5, sigma = 0.5;
    const auto map = sample_frequencies(5, 8192, 1.0, 7);
    const auto off = offsets3();
    for (int t = 0; t < 3; ++t) {
        const auto a = random_patch(rnd, 9, 3);
        const auto b = random_patch(rnd, 9, 3);
        const auto fa = conv_mean_map_feature(map, conv_patch(a), beta, sigma);
        const auto fb = conv_mean_map_feature(map, conv_patch(b), beta, sigma);
        double exact = 0.0;
        for (std::size_t i = 0; i < 9; ++i)
            for (std::size_t j = 0; j < 9; ++j) {
                const std::vector<double> pa{static_cast<double>(off[i].first), static_cast<double>(off[i].second)};
                const std::vector<double> pb{static_cast<double>(off[j].first), static_cast<double>(off[j].second)};
                std::vector<double> ua = a[i], ub = b[j];
                for (double& x : ua)
                    x /= norm(a[i]);
                for (double& x : ub)
                    x /= norm(b[j]);
                exact += norm(a[i]) * norm(b[j]) * gaussian(pa, pb, beta) * gaussian(ua, ub, sigma);
            }
        exact /= 81.0;
        EXPECT_NEAR(mean_map_kernel(fa, fb), exact, 0.05);
    }
}

TEST(ConvMeanMap, NormBoundedByMaxWeight)
{
    oracle::TestRandom rnd(7);
    const auto map = sample_frequencies(5, 64, 1.0, 1);
    for (int t = 0; t < 20; ++t) {
        auto a = random_patch(rnd, 9, 3);
        double max_weight = 0.0;
        for (auto& v : a) {
            for (double& x : v)
                x *= 3.0;
            max_weight = std::max(max_weight, norm(v));
        }
        EXPECT_LE(conv_mean_map_feature(map, conv_patch(a), 1.0, 1.0).values.norm(), max_weight + 1e-12);
    }
}

TEST(ConvMeanMap, Errors)
{
    const auto map = sample_frequencies(4, 16, 1.0, 0);
    const std::vector<double> h{1.0, 0.0, 0.0};
    const std::vector<ConvPatchPixel> patch{{0.0, 0.0, h}};
    EXPECT_THROW(conv_mean_map_feature(map, patch, 1.0, 1.0), ShapeError);
    const auto good = sample_frequencies(5, 16, 1.0, 0);
    EmbeddingConfig cfg;
    cfg.sigma = 1.0;
    cfg.beta = 1.0;
    cfg.weighting = Weighting::uniform;
    EXPECT_THROW(conv_mean_map_feature(good, patch, cfg), ContractViolation);
    cfg.weighting = Weighting::magnitude;
    EXPECT_NO_THROW(conv_mean_map_feature(good, patch, cfg));
}

// ---------------------------------------------------------------- tensor products

TEST(Tensor, IdentityFactor)
{
    PixelFeature u{Vector::Ones(1), FeatureKind::mp};
    Vector v(3);
    v << 1.5, -2.0, 0.25;
    const auto t = tensor_product_features(u, {v, FeatureKind::meanmap});
    EXPECT_EQ(t.values, v);
    EXPECT_EQ(t.kind, FeatureKind::tensor);
}

TEST(Tensor, InnerProductAndNormIdentities)
{
    oracle::TestRandom rnd(8);
    auto random_feature = [&](int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i)
            v(i) = rnd.uniform(-1, 1);
        return PixelFeature{v, FeatureKind::raw};
    };
    for (int t = 0; t < 20; ++t) {
        const auto u = random_feature(8), u2 = random_feature(8), v = random_feature(8), v2 = random_feature(8);
        const auto a = tensor_product_features(u, v), b = tensor_product_features(u2, v2);
        EXPECT_NEAR(a.values.dot(b.values), u.values.dot(u2.values) * v.values.dot(v2.values), 1e-12);
        EXPECT_NEAR(a.values.norm(), u.values.norm() * v.values.norm(), 1e-12);
    }
}

TEST(Tensor, CapExceededNamesCap)
{
    PixelFeature u{Vector::Ones(10), FeatureKind::mp}, v{Vector::Ones(10), FeatureKind::meanmap};
    try {
        tensor_product_features(u, v, 99);
        FAIL() << "expected capacity error";
    } catch (const CapacityError& e) {
        EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("reduce"), std::string::npos);
    }
    EXPECT_NO_THROW(tensor_product_features(u, v, 100));
}

// ---------------------------------------------------------------- tables

TEST(FeatureTable, RawRowsAreSpectra)
{
    const auto img = small_scene(6, 7, 1);
    MethodSpec spec;
    spec.method = Method::raw;
    const auto table = build_feature_table(img, spec);
    ASSERT_EQ(table.rows(), 42u);
    for (std::size_t p = 0; p < 42; ++p)
        for (std::size_t b = 0; b < img.bands(); ++b)
            ASSERT_EQ(table.values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b)), img.spectrum(p)[b]);
}

TEST(FeatureTable, MeanMapSideOneEqualsRff)
{
    const auto img = small_scene(6, 7, 2);
    MethodSpec spec;
    spec.embedding.n_features = 64;
    spec.embedding.sigma = 0.3;
    spec.embedding.patch = {1, BorderPolicy::clamp};
    spec.method = Method::meanmap;
    const auto mm = build_feature_table(img, spec);
    spec.method = Method::rff;
    const auto rf = build_feature_table(img, spec);
    EXPECT_EQ(mm.values, rf.values);
}

TEST(FeatureTable, MeanMapRowsMatchPatchOracle)
{
    const auto img = small_scene(10, 10, 3);
    MethodSpec spec;
    spec.method = Method::meanmap;
    spec.embedding.n_features = 128;
    spec.embedding.sigma = 0.4;
    spec.embedding.seed = 9;
    spec.embedding.patch = {3, BorderPolicy::clamp};
    const auto table = build_feature_table(img, spec);
    const auto map = spectral_feature_map(img.bands(), spec.embedding, 0.4);
    oracle::TestRandom rnd(3);
    for (int t = 0; t < 5; ++t) {
        const std::size_t r = static_cast<std::size_t>(rnd.integer(0, 9));
        const std::size_t c = static_cast<std::size_t>(rnd.integer(0, 9));
        const auto expected = mean_map_feature(map, extract_patch(img, r, c, spec.embedding.patch));
        const auto row = table.values.row(static_cast<Eigen::Index>(r * 10 + c));
        EXPECT_LT((row.transpose() - expected.values).norm(), 1e-12);
    }
    // Corners exercise the clamp border.
    const auto corner = mean_map_feature(map, extract_patch(img, 9, 0, spec.embedding.patch));
    EXPECT_LT((table.values.row(90).transpose() - corner.values).norm(), 1e-12);
}

TEST(FeatureTable, ConvRowsMatchPatchOracle)
{
    const auto img = small_scene(8, 9, 4);
    MethodSpec spec;
    spec.method = Method::convmeanmap;
    spec.embedding.n_features = 64;
    spec.embedding.sigma = 0.5;
    spec.embedding.beta = 1.2;
    spec.embedding.weighting = Weighting::magnitude;
    spec.embedding.patch = {3, BorderPolicy::mirror};
    const auto table = build_feature_table(img, spec);
    const auto map = convolutional_feature_map(img.bands(), spec.embedding);
    for (std::size_t p : {0u, 13u, 40u, 71u}) {
        const auto pixels = patch_pixels(img.height(), img.width(), p / 9, p % 9, spec.embedding.patch);
        std::vector<ConvPatchPixel> patch;
        for (const auto& px : pixels)
            patch.push_back({static_cast<double>(px.d_row), static_cast<double>(px.d_col), img.spectrum(px.pixel)});
        const auto expected = conv_mean_map_feature(map, patch, 1.2, 0.5);
        EXPECT_LT((table.values.row(static_cast<Eigen::Index>(p)).transpose() - expected.values).norm(), 1e-12);
    }
}

TEST(FeatureTable, MeanMapNormBound)
{
    const auto img = small_scene(12, 12, 5);
    MethodSpec spec;
    spec.method = Method::meanmap;
    spec.embedding.n_features = 64;
    spec.embedding.patch = {4, BorderPolicy::clamp};
    const auto table = build_feature_table(img, spec);
    for (Eigen::Index r = 0; r < table.values.rows(); ++r)
        ASSERT_LE(table.values.row(r).norm(), 1.0 + 1e-12);
    EXPECT_GT(table.descriptor["sigma"].get<double>(), 0.0);
}

TEST(FeatureTable, DeterministicPerSeed)
{
    const auto img = small_scene(8, 8, 6);
    MethodSpec spec;
    spec.method = Method::meanmap;
    spec.embedding.n_features = 32;
    spec.embedding.seed = 4;
    spec.embedding.patch = {3, BorderPolicy::clamp};
    EXPECT_EQ(build_feature_table(img, spec).values, build_feature_table(img, spec).values);
    auto other = spec;
    other.embedding.seed = 5;
    EXPECT_NE(build_feature_table(img, other).values, build_feature_table(img, spec).values);
}

TEST(FeatureTable, MpTimesMeanMapIsRowwiseTensor)
{
    const auto img = small_scene(8, 8, 7);
    MethodSpec spec;
    spec.embedding.n_features = 8;
    spec.embedding.sigma = 0.5;
    spec.embedding.patch = {3, BorderPolicy::clamp};
    spec.mp.pca_dims = 2;
    spec.mp.scales = 1;
    spec.method = Method::mp;
    const auto mp = build_feature_table(img, spec);
    spec.method = Method::meanmap;
    const auto mm = build_feature_table(img, spec);
    spec.method = Method::mp_x_meanmap;
    const auto t = build_feature_table(img, spec);
    ASSERT_EQ(t.dim(), mp.dim() * mm.dim());
    for (Eigen::Index r : {0, 17, 63}) {
        const auto expected = tensor_product_features({mp.values.row(r).transpose(), FeatureKind::mp},
                                                      {mm.values.row(r).transpose(), FeatureKind::meanmap});
        EXPECT_LT((t.values.row(r).transpose() - expected.values).norm(), 1e-12);
    }
    spec.tensor_cap = 10;
    EXPECT_THROW(build_feature_table(img, spec), CapacityError);
}

TEST(FeatureTable, SaveLoadRoundTrip)
{
    testing_support::TempDir dir;
    const auto img = small_scene(5, 5, 8);
    MethodSpec spec;
    spec.method = Method::rff;
    spec.embedding.n_features = 16;
    const auto table = build_feature_table(img, spec);
    save_feature_table(table, dir / "t");
    const auto back = load_feature_table(dir / "t");
    EXPECT_EQ(back.values, table.values);
    EXPECT_EQ(back.kind, FeatureKind::rff);
    EXPECT_EQ(back.descriptor["method"], "rff");
}

TEST(FeatureTable, UnknownMethod)
{
    EXPECT_THROW(parse_method("svm"), ParameterError);
    EXPECT_EQ(parse_method("convmeanmap"), Method::convmeanmap);
}
