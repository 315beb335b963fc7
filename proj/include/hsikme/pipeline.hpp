#ifndef HSIKME_PIPELINE_HPP
#define HSIKME_PIPELINE_HPP

// Batch orchestration behind the command-line tool: configuration, the
// classify / evaluate / synth / theory runs, and PPM map rendering.
// Every run computes all of its results before writing any file.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsikme/embedding.hpp"
#include "hsikme/envi.hpp"
#include "hsikme/error.hpp"
#include "hsikme/metrics.hpp"
#include "hsikme/svm.hpp"
#include "hsikme/synth.hpp"
#include "hsikme/theory.hpp"

namespace hsikme {

// ---------------------------------------------------------------------------
// Stage attribution

/// Runs fn, prefixing any library error with the stage name (kind preserved).
template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const Error& e) {
        raise(e.kind(), stage + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::parameter, stage + ": " + e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        raise(ErrorKind::io, stage + ": " + e.what());
    }
}

/// 0 success, 1 usage / parameter, 2 data, 3 numerical.
inline int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::parameter:
        return 1;
    case ErrorKind::numerical:
        return 3;
    default:
        return 2;
    }
}

// ---------------------------------------------------------------------------
// Configuration

struct TheoryConfig {
    TheoryExperiment theorem5;
    std::size_t theorem5_trials = 20;
    TheoryExperiment theorem3;
    std::size_t theorem3_predictors = 100;
};

struct PipelineConfig {
    std::filesystem::path image;        ///< ENVI header; empty = synthetic scene
    std::filesystem::path ground_truth; ///< CSV or single-band ENVI
    std::filesystem::path test_mask;    ///< optional fixed test labels
    SceneSpec synthetic;
    MethodSpec method;
    ClassifierConfig svm;
    McProtocol protocol;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    TheoryConfig theory;
};

inline TheoryConfig default_theory_config()
{
    TheoryConfig t;
    // combined bound: 50 groups of 25 draws
    t.theorem5.meta = {.dim = 2, .shift = 1.0, .spread = 0.5, .within_sigma = 0.5, .variance = 0.25,
                       .group_size = 25, .label_noise = 0.1};
    t.theorem5.features = 256;
    t.theorem5.groups = 50;
    t.theorem5.heldout_groups = 400;
    // embedding-gap bound: 5 small groups, wide feature space
    t.theorem3.meta = {.dim = 2, .shift = 1.0, .spread = 0.5, .within_sigma = 1.0, .variance = 1.0,
                       .group_size = 10, .label_noise = 0.0};
    t.theorem3.features = 2048;
    t.theorem3.groups = 5;
    return t;
}

inline std::string border_name(BorderPolicy b) { return b == BorderPolicy::clamp ? "clamp" : "mirror"; }

inline nlohmann::json method_params(const MethodSpec& m)
{
    const auto& e = m.embedding;
    nlohmann::json j = {{"name", to_string(m.method)},
                        {"scale", e.patch.side},
                        {"border", border_name(e.patch.border)},
                        {"features", e.n_features},
                        {"normalize", e.normalize},
                        {"weighting", e.weighting == Weighting::uniform ? "uniform" : "magnitude"},
                        {"pca_dims", m.mp.pca_dims},
                        {"mp_scales", m.mp.scales},
                        {"se_shape", m.mp.shape == SeShape::disk ? "disk" : "square"},
                        {"tensor_cap", m.tensor_cap},
                        {"scale_mp", m.scale_mp}};
    j["sigma"] = e.sigma ? nlohmann::json(*e.sigma) : nlohmann::json(nullptr);
    j["beta"] = e.beta ? nlohmann::json(*e.beta) : nlohmann::json(nullptr);
    return j;
}

namespace detail {

inline std::optional<double> optional_number(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return j.at(key).get<double>();
}

inline void read_experiment(const nlohmann::json& j, TheoryExperiment& e)
{
    if (j.contains("meta"))
        from_json(j.at("meta"), e.meta);
    e.features = j.value("features", e.features);
    e.kernel_sigma = j.value("kernel_sigma", e.kernel_sigma);
    e.groups = j.value("groups", e.groups);
    e.heldout_groups = j.value("heldout_groups", e.heldout_groups);
    e.svm_c = j.value("svm_c", e.svm_c);
    const std::string loss = j.value("loss", std::string(e.loss.kind == LossKind::hinge ? "hinge" : "logistic"));
    if (loss != "hinge" && loss != "logistic")
        throw ParameterError("unknown loss '" + loss + "'");
    e.loss.kind = loss == "hinge" ? LossKind::hinge : LossKind::logistic;
    e.bound.c_f = optional_number(j, "c_f");
    e.bound.delta = j.value("delta", e.bound.delta);
    e.bound.r_bound = j.value("r_bound", e.bound.r_bound);
    e.bound.rademacher_draws = j.value("rademacher_draws", e.bound.rademacher_draws);
    e.bound.dictionary_size = j.value("dictionary_size", e.bound.dictionary_size);
    e.bound.theorem3_proof_form = j.value("proof_form", e.bound.theorem3_proof_form);
}

} // namespace detail

/// Parses the single JSON configuration document. Unknown method names,
/// borders, weightings and shapes are parameter errors.
inline PipelineConfig parse_config(const nlohmann::json& j)
{
    PipelineConfig c;
    c.theory = default_theory_config();
    try {
        c.seed = j.value("seed", c.seed);
        c.image = j.value("image", std::string());
        c.ground_truth = j.value("ground_truth", std::string());
        c.test_mask = j.value("test_mask", std::string());
        c.output_dir = j.value("output_dir", std::string());
        if (j.contains("synthetic"))
            c.synthetic = j.at("synthetic").get<SceneSpec>();
        else
            c.synthetic.seed = c.seed;

        const nlohmann::json m = j.value("method", nlohmann::json::object());
        auto& e = c.method.embedding;
        c.method.method = parse_method(m.value("name", std::string("meanmap")));
        e.patch.side = m.value("scale", e.patch.side);
        const std::string border = m.value("border", std::string("clamp"));
        if (border != "clamp" && border != "mirror")
            throw ParameterError("unknown border policy '" + border + "'");
        e.patch.border = border == "clamp" ? BorderPolicy::clamp : BorderPolicy::mirror;
        e.n_features = m.value("features", e.n_features);
        e.sigma = detail::optional_number(m, "sigma");
        e.beta = detail::optional_number(m, "beta");
        e.normalize = m.value("normalize", e.normalize);
        e.median_samples = m.value("median_samples", e.median_samples);
        const std::string weighting =
            m.value("weighting", std::string(c.method.method == Method::convmeanmap ? "magnitude" : "uniform"));
        if (weighting != "uniform" && weighting != "magnitude")
            throw ParameterError("unknown weighting '" + weighting + "'");
        e.weighting = weighting == "uniform" ? Weighting::uniform : Weighting::magnitude;
        c.method.mp.pca_dims = m.value("pca_dims", c.method.mp.pca_dims);
        c.method.mp.scales = m.value("mp_scales", c.method.mp.scales);
        const std::string shape = m.value("se_shape", std::string("disk"));
        if (shape != "disk" && shape != "square")
            throw ParameterError("unknown structuring element '" + shape + "'");
        c.method.mp.shape = shape == "disk" ? SeShape::disk : SeShape::square;
        c.method.tensor_cap = m.value("tensor_cap", c.method.tensor_cap);
        c.method.scale_mp = m.value("scale_mp", c.method.scale_mp);
        if (e.patch.side < 1)
            throw ParameterError("scale must be at least 1");
        if (e.n_features < 1)
            throw ParameterError("features must be at least 1");

        const nlohmann::json s = j.value("svm", nlohmann::json::object());
        c.svm.c = detail::optional_number(s, "c");
        if (s.value("grid", !c.svm.c.has_value()))
            c.svm.c.reset();
        else if (!c.svm.c)
            throw ParameterError("svm.grid is false but no svm.c is given");
        c.svm.folds = s.value("folds", c.svm.folds);
        c.svm.svm.tolerance = s.value("tolerance", c.svm.svm.tolerance);
        c.svm.svm.max_epochs = s.value("max_epochs", c.svm.svm.max_epochs);
        c.svm.svm.bias_feature = s.value("bias_feature", c.svm.svm.bias_feature);
        if (c.svm.c && !(*c.svm.c > 0.0))
            throw ParameterError("svm.c must be positive");

        const nlohmann::json p = j.value("protocol", nlohmann::json::object());
        c.protocol.runs = p.value("runs", c.protocol.runs);
        c.protocol.per_class = p.value("per_class", c.protocol.per_class);
        c.protocol.train_equals_test = p.value("train_equals_test", c.protocol.train_equals_test);

        const nlohmann::json t = j.value("theory", nlohmann::json::object());
        if (t.contains("theorem5"))
            detail::read_experiment(t.at("theorem5"), c.theory.theorem5);
        if (t.contains("theorem3"))
            detail::read_experiment(t.at("theorem3"), c.theory.theorem3);
        c.theory.theorem5_trials = t.value("theorem5_trials", c.theory.theorem5_trials);
        c.theory.theorem3_predictors = t.value("theorem3_predictors", c.theory.theorem3_predictors);
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("invalid configuration: ") + e.what());
    }
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open configuration " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError("configuration is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(j);
}

/// Seeds that follow the master seed: embedding and protocol.
inline void apply_seed(PipelineConfig& c)
{
    c.method.embedding.seed = derive_seed(c.seed, 0xe3b);
    c.protocol.seed = derive_seed(c.seed, 0x3c);
    c.svm.svm.seed = derive_seed(c.seed, 0x5f);
}

/// Output directory: config value, else the environment variable, else ".".
inline std::filesystem::path resolve_output_dir(const PipelineConfig& c, const char* env_name = "HSIKME_OUTPUT_DIR")
{
    if (!c.output_dir.empty())
        return c.output_dir;
    if (const char* env = std::getenv(env_name); env && *env)
        return env;
    return ".";
}

// ---------------------------------------------------------------------------
// Palette and PPM

using Rgb = std::array<std::uint8_t, 3>;

/// Class 0 black, then a fixed 16-colour table, then golden-angle hues;
/// every entry distinct.
inline std::vector<Rgb> make_palette(std::size_t classes)
{
    static constexpr Rgb base[] = {{230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},
                                   {245, 130, 48},  {145, 30, 180},  {70, 240, 240},  {240, 50, 230},
                                   {210, 245, 60},  {250, 190, 212}, {0, 128, 128},   {220, 190, 255},
                                   {170, 110, 40},  {255, 250, 200}, {128, 0, 0},     {170, 255, 195}};
    std::vector<Rgb> out{{0, 0, 0}};
    std::set<Rgb> used{{0, 0, 0}};
    double hue = 0.0;
    std::size_t k = 0;
    while (out.size() < classes + 1) {
        Rgb c;
        if (k < std::size(base)) {
            c = base[k];
        } else {
            hue = std::fmod(hue + 0.6180339887498949, 1.0);
            const double v = 0.55 + 0.45 * static_cast<double>((k / 7) % 3) / 2.0;
            const double h6 = hue * 6.0, f = h6 - std::floor(h6);
            const double p = v * 0.25, q = v * (1 - 0.75 * f), t = v * (1 - 0.75 * (1 - f));
            double r = 0, g = 0, b = 0;
            switch (static_cast<int>(h6) % 6) {
            case 0: r = v, g = t, b = p; break;
            case 1: r = q, g = v, b = p; break;
            case 2: r = p, g = v, b = t; break;
            case 3: r = p, g = q, b = v; break;
            case 4: r = t, g = p, b = v; break;
            default: r = v, g = p, b = q; break;
            }
            c = {static_cast<std::uint8_t>(std::lround(255 * r)), static_cast<std::uint8_t>(std::lround(255 * g)),
                 static_cast<std::uint8_t>(std::lround(255 * b))};
        }
        ++k;
        if (used.insert(c).second)
            out.push_back(c);
    }
    return out;
}

struct PpmImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<Rgb> pixels;
};

/// Binary P6 bytes: "P6\n<w> <h>\n255\n" followed by RGB triples.
inline std::string encode_ppm(const GroundTruthMap& labels, const std::vector<Rgb>& palette)
{
    std::string out = "P6\n" + std::to_string(labels.width()) + " " + std::to_string(labels.height()) + "\n255\n";
    out.reserve(out.size() + 3 * labels.pixel_count());
    for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
        const int l = labels.at(i);
        if (l < 0 || static_cast<std::size_t>(l) >= palette.size())
            throw ContractViolation("label " + std::to_string(l) + " beyond palette of " +
                                    std::to_string(palette.size()) + " colours");
        for (auto ch : palette[static_cast<std::size_t>(l)])
            out.push_back(static_cast<char>(ch));
    }
    return out;
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void render_map(const GroundTruthMap& labels, const std::vector<Rgb>& palette,
                       const std::filesystem::path& path)
{
    write_bytes(path, encode_ppm(labels, palette));
}

inline PpmImage read_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (!in || magic != "P6" || maxval != 255 || w == 0 || h == 0)
        throw FormatError("unsupported PPM header in " + path.string());
    in.get(); // single whitespace before the payload
    PpmImage img{h, w, std::vector<Rgb>(w * h)};
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(3 * w * h));
    if (in.gcount() != static_cast<std::streamsize>(3 * w * h))
        throw TruncationError("PPM payload shorter than its header implies");
    return img;
}

// ---------------------------------------------------------------------------
// Runs

struct SceneData {
    HyperspectralImage image;
    GroundTruthMap gt;
    std::optional<GroundTruthMap> test;
};

inline SceneData load_scene(const PipelineConfig& c)
{
    SceneData s;
    if (c.image.empty()) {
        staged("synthesize scene", [&] {
            auto [img, gt] = generate_synthetic_scene(c.synthetic);
            s.image = std::move(img);
            s.gt = std::move(gt);
        });
    } else {
        s.image = staged("load image", [&] { return load_envi(c.image); });
        if (c.ground_truth.empty())
            throw ParameterError("load ground truth: configuration names an image but no ground_truth");
        s.gt = staged("load ground truth",
                      [&] { return load_ground_truth(c.ground_truth, s.image.height(), s.image.width()); });
    }
    if (!c.test_mask.empty())
        s.test = staged("load test mask",
                        [&] { return load_ground_truth(c.test_mask, s.image.height(), s.image.width()); });
    return s;
}

struct ClassifyResult {
    std::vector<int> predicted;
    SvmModel model;
    double c = 0.0;
    std::optional<Scores> scores;
    nlohmann::json metrics;
};

/// Trains on per_class sampled pixels per class (all labeled pixels when
/// per_class is 0), predicts every pixel and scores the test pixels: the
/// fixed test map when given, else the labeled pixels not used for training.
inline ClassifyResult classify(const SceneData& scene, const PipelineConfig& c)
{
    const FeatureTable table = staged("build features", [&] { return build_feature_table(scene.image, c.method); });
    const auto by_class = scene.gt.pixels_by_class();
    const int n_classes = scene.gt.class_count();
    if (n_classes < 2)
        throw DegenerateDataError("sample training pixels: ground truth needs at least two classes");

    std::vector<std::size_t> train;
    std::vector<int> y;
    Rng rng(derive_seed(c.protocol.seed, 0xc1a));
    for (int k = 1; k <= n_classes; ++k) {
        auto pool = by_class[static_cast<std::size_t>(k)];
        const std::size_t take = c.protocol.per_class ? c.protocol.per_class : pool.size();
        if (pool.size() < take || pool.empty())
            throw DegenerateDataError("sample training pixels: class " + std::to_string(k) + " has " +
                                      std::to_string(pool.size()) + " labeled pixels, need " + std::to_string(take));
        for (std::size_t i = 0; i < take; ++i)
            std::swap(pool[i], pool[i + static_cast<std::size_t>(rng.below(pool.size() - i))]);
        for (std::size_t i = 0; i < take; ++i) {
            train.push_back(pool[i]);
            y.push_back(k);
        }
    }

    ClassifyResult r;
    std::vector<int> all_classes(static_cast<std::size_t>(n_classes));
    std::iota(all_classes.begin(), all_classes.end(), 1);
    std::tie(r.model, r.c) = staged("train classifier", [&] {
        return fit_classifier(detail::gather_rows(table.values, train), y, c.svm, c.protocol.seed, all_classes);
    });
    r.predicted = staged("predict", [&] { return predict_rows(r.model, table.values); });

    std::vector<int> truth(scene.gt.pixel_count(), 0);
    if (scene.test) {
        truth.assign(scene.test->labels().begin(), scene.test->labels().end());
    } else {
        std::vector<char> used(truth.size(), 0);
        for (auto p : train)
            used[p] = 1;
        for (std::size_t p = 0; p < truth.size(); ++p)
            truth[p] = used[p] ? 0 : scene.gt.at(p);
    }
    nlohmann::json params = method_params(c.method);
    params["c"] = r.c;
    params["descriptor"] = table.descriptor;
    params["training_pixels"] = train.size();
    nlohmann::json runs = nlohmann::json::array();
    const bool any_test = std::any_of(truth.begin(), truth.end(), [](int v) { return v > 0; });
    if (any_test) {
        r.scores = staged("score", [&] { return score(confusion_matrix(r.predicted, truth, n_classes)); });
        McSummary one = summarize({McRun{*r.scores, r.c, {}, {}}});
        r.metrics = summary_to_json(one, to_string(c.method.method), params);
    } else {
        r.metrics = {{"method", to_string(c.method.method)}, {"params", params}, {"runs", runs},
                     {"mean", nullptr},                      {"std", nullptr}};
    }
    return r;
}

inline std::vector<std::filesystem::path> run_classify(const PipelineConfig& c)
{
    const auto scene = load_scene(c);
    const auto r = classify(scene, c);
    const auto dir = resolve_output_dir(c);
    return staged("write outputs", [&] {
        std::filesystem::create_directories(dir);
        const GroundTruthMap map(scene.gt.height(), scene.gt.width(), r.predicted);
        std::vector<std::filesystem::path> files{dir / "classification.ppm", dir / "labels.csv",
                                                 dir / "metrics.json", dir / "model.json", dir / "model.bin"};
        render_map(map, make_palette(static_cast<std::size_t>(scene.gt.class_count())), files[0]);
        write_label_csv(r.predicted, map.height(), map.width(), files[1]);
        write_bytes(files[2], r.metrics.dump(2) + "\n");
        save_model(r.model, dir / "model");
        return files;
    });
}

struct EvaluationResult {
    McSummary summary;
    nlohmann::json json;
    std::string table;
};

inline EvaluationResult evaluate(const SceneData& scene, const PipelineConfig& c)
{
    const FeatureTable table = staged("build features", [&] { return build_feature_table(scene.image, c.method); });
    McProtocol protocol = c.protocol;
    protocol.fixed_test = scene.test;
    EvaluationResult r;
    r.summary = staged("monte-carlo protocol",
                       [&] { return monte_carlo_protocol(table.values, scene.gt, protocol, c.svm); });
    nlohmann::json params = method_params(c.method);
    params["descriptor"] = table.descriptor;
    params["per_class"] = protocol.per_class;
    params["seed"] = c.seed;
    r.json = summary_to_json(r.summary, to_string(c.method.method), params);
    std::string label = "s=" + std::to_string(c.method.embedding.patch.side) +
                        " N=" + std::to_string(c.method.embedding.n_features);
    r.table = summary_table({{to_string(c.method.method), label, r.summary}});
    return r;
}

inline std::vector<std::filesystem::path> run_evaluate(const PipelineConfig& c)
{
    const auto scene = load_scene(c);
    const auto r = evaluate(scene, c);
    const auto dir = resolve_output_dir(c);
    return staged("write outputs", [&] {
        std::filesystem::create_directories(dir);
        std::vector<std::filesystem::path> files{dir / "evaluation.json", dir / "evaluation.txt"};
        write_bytes(files[0], r.json.dump(2) + "\n");
        write_bytes(files[1], r.table);
        return files;
    });
}

inline std::vector<std::filesystem::path> run_synth(const PipelineConfig& c)
{
    const auto scene = staged("synthesize scene", [&] { return generate_synthetic_scene(c.synthetic); });
    const auto dir = resolve_output_dir(c);
    return staged("write outputs", [&] {
        std::filesystem::create_directories(dir);
        std::vector<std::filesystem::path> files{dir / "scene.hdr", dir / "scene.img", dir / "gt.csv",
                                                 dir / "scene.json"};
        write_envi(scene.first, files[0]);
        write_ground_truth_csv(scene.second, files[2]);
        write_bytes(files[3], nlohmann::json(c.synthetic).dump(2) + "\n");
        return files;
    });
}

struct TheoryResult {
    nlohmann::json theorem3;
    nlohmann::json theorem5;
    std::string text;
};

inline TheoryResult theory(const PipelineConfig& c)
{
    TheoryResult out;
    const auto& t = c.theory;

    // Embedding-gap bound over random unit predictors on one meta sample.
    const auto reports3 = staged("theorem3", [&] {
        const auto& e = t.theorem3;
        const auto map = experiment_map(e, derive_seed(c.seed, 3));
        const auto groups = sample_meta(e.meta, e.groups, derive_seed(c.seed, 33));
        const auto predictors = random_unit_predictors(t.theorem3_predictors, map.feature_dim(), derive_seed(c.seed, 333));
        std::vector<BoundReport> reports(predictors.size());
        parallel_for(0, predictors.size(),
                     [&](std::size_t k) { reports[k] = check_theorem3(map, groups, predictors[k], e.loss, e.bound); });
        return reports;
    });
    // Combined bound over seeded trials.
    const auto reports5 = staged("theorem5", [&] {
        std::vector<BoundReport> reports(t.theorem5_trials);
        parallel_for(0, reports.size(),
                     [&](std::size_t k) { reports[k] = theorem5_trial(t.theorem5, derive_seed(c.seed, 5000 + k)); });
        return reports;
    });

    auto pack = [](const std::vector<BoundReport>& rs, const TheoryExperiment& e, const char* unit) {
        nlohmann::json arr = nlohmann::json::array();
        std::size_t ok = 0;
        double min_slack = std::numeric_limits<double>::infinity();
        for (const auto& r : rs) {
            arr.push_back(to_json(r));
            ok += r.slack >= 0.0;
            min_slack = std::min(min_slack, r.slack);
        }
        nlohmann::json setup = {{"meta", e.meta},
                                {"features", e.features},
                                {"kernel_sigma", e.kernel_sigma},
                                {"groups", e.groups},
                                {"delta", e.bound.delta},
                                {"proof_form", e.bound.theorem3_proof_form}};
        return nlohmann::json{{"setup", setup},
                              {unit, rs.size()},
                              {"non_negative_slack", ok},
                              {"min_slack", rs.empty() ? nlohmann::json(nullptr) : nlohmann::json(min_slack)},
                              {"reports", arr}};
    };
    out.theorem3 = pack(reports3, t.theorem3, "predictors");
    out.theorem5 = pack(reports5, t.theorem5, "trials");

    std::ostringstream text;
    text << "theorem3: " << out.theorem3["non_negative_slack"] << "/" << reports3.size()
         << " predictors with non-negative slack, min slack " << out.theorem3["min_slack"] << "\n";
    text << "theorem5: " << out.theorem5["non_negative_slack"] << "/" << reports5.size()
         << " trials with non-negative slack, min slack " << out.theorem5["min_slack"] << "\n";
    if (!reports5.empty())
        text << summary_text(reports5.front());
    out.text = text.str();
    return out;
}

inline std::vector<std::filesystem::path> run_theory(const PipelineConfig& c)
{
    const auto r = theory(c);
    const auto dir = resolve_output_dir(c);
    return staged("write outputs", [&] {
        std::filesystem::create_directories(dir);
        std::vector<std::filesystem::path> files{dir / "theorem3.json", dir / "theorem5.json", dir / "theory.txt"};
        write_bytes(files[0], r.theorem3.dump(2) + "\n");
        write_bytes(files[1], r.theorem5.dump(2) + "\n");
        write_bytes(files[2], r.text);
        return files;
    });
}

} // namespace hsikme

#endif // HSIKME_PIPELINE_HPP
