// hsikme: classify / evaluate / synth / theory / render.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hsikme/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::optional<std::size_t> scale;
    std::optional<std::size_t> features;
    std::optional<double> c;
    bool c_grid = false;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> per_class;
    std::optional<std::string> output;
    std::optional<std::string> image;
    std::optional<std::string> ground_truth;
    std::optional<std::string> test_mask;
    std::optional<std::size_t> trials;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("-c,--config", o.config, "JSON configuration file");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("-o,--output", o.output, "output directory (default: $HSIKME_OUTPUT_DIR or .)");
}

void add_method(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--method", o.method, "raw | rff | meanmap | convmeanmap | mp | mp_x_meanmap");
    cmd->add_option("--scale", o.scale, "patch side s");
    cmd->add_option("--features", o.features, "random frequencies N");
    cmd->add_option("--C", o.c, "fixed SVM C (disables the grid)");
    cmd->add_flag("--c-grid", o.c_grid, "cross-validate C over 2^-15 .. 2^15");
    cmd->add_option("--runs", o.runs, "Monte-Carlo runs");
    cmd->add_option("--per-class", o.per_class, "training pixels per class (0 = all labeled)");
    cmd->add_option("--image", o.image, "ENVI header of the image");
    cmd->add_option("--gt", o.ground_truth, "ground truth CSV or ENVI raster");
    cmd->add_option("--test", o.test_mask, "fixed test labels");
}

hsikme::PipelineConfig build_config(const Overrides& o)
{
    nlohmann::json j = nlohmann::json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in)
            throw hsikme::IoError("read configuration: cannot open " + o.config);
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw hsikme::ParameterError("read configuration: invalid JSON: " + std::string(e.what()));
        }
    }
    const bool scene_seed_given = j.contains("synthetic") && j["synthetic"].contains("seed");
    if (o.seed)
        j["seed"] = *o.seed;
    if (o.seed && !scene_seed_given && j.contains("synthetic"))
        j["synthetic"]["seed"] = *o.seed;
    if (o.method)
        j["method"]["name"] = *o.method;
    if (o.scale)
        j["method"]["scale"] = *o.scale;
    if (o.features)
        j["method"]["features"] = *o.features;
    if (o.c) {
        j["svm"]["c"] = *o.c;
        j["svm"]["grid"] = false;
    }
    if (o.c_grid)
        j["svm"]["grid"] = true;
    if (o.runs)
        j["protocol"]["runs"] = *o.runs;
    if (o.per_class)
        j["protocol"]["per_class"] = *o.per_class;
    if (o.output)
        j["output_dir"] = *o.output;
    if (o.image)
        j["image"] = *o.image;
    if (o.ground_truth)
        j["ground_truth"] = *o.ground_truth;
    if (o.test_mask)
        j["test_mask"] = *o.test_mask;
    if (o.trials)
        j["theory"]["theorem5_trials"] = *o.trials;
    auto c = hsikme::parse_config(j);
    hsikme::apply_seed(c);
    return c;
}

void report(const std::vector<std::filesystem::path>& files)
{
    for (const auto& f : files)
        std::cout << f.string() << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hyperspectral pixel classification with kernel mean embeddings"};
    app.require_subcommand(1);
    Overrides o;

    auto* classify = app.add_subcommand("classify", "train on sampled pixels, predict every pixel, write map + metrics");
    add_common(classify, o);
    add_method(classify, o);

    auto* evaluate = app.add_subcommand("evaluate", "Monte-Carlo protocol: mean and std of OA / AA / kappa");
    add_common(evaluate, o);
    add_method(evaluate, o);

    hsikme::SceneSpec scene;
    auto* synth = app.add_subcommand("synth", "write a synthetic labelled scene (ENVI + CSV)");
    add_common(synth, o);
    synth->add_option("--height", scene.height);
    synth->add_option("--width", scene.width);
    synth->add_option("--bands", scene.bands);
    synth->add_option("--classes", scene.classes);
    synth->add_option("--region-scale", scene.region_scale);
    synth->add_option("--noise", scene.noise_sigma);

    auto* theory = app.add_subcommand("theory", "check the risk-gap bounds on synthetic meta-samples");
    add_common(theory, o);
    theory->add_option("--trials", o.trials, "seeded trials of the combined bound");

    std::string labels_path, ppm_path;
    std::size_t palette_classes = 0;
    auto* render = app.add_subcommand("render", "render a label CSV as a P6 PPM map");
    render->add_option("labels", labels_path, "label CSV")->required();
    render->add_option("output", ppm_path, "PPM file")->required();
    render->add_option("--classes", palette_classes, "palette size (default: largest label)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*render) {
            const auto labels = hsikme::staged("read labels", [&] { return hsikme::load_label_csv(labels_path); });
            const std::size_t n = std::max<std::size_t>(palette_classes, static_cast<std::size_t>(labels.class_count()));
            hsikme::staged("render", [&] { hsikme::render_map(labels, hsikme::make_palette(n), ppm_path); });
            std::cout << ppm_path << "\n";
            return 0;
        }
        auto config = build_config(o);
        if (*synth) {
            const std::uint64_t seed = config.seed;
            if (!config.image.empty())
                throw hsikme::ParameterError("synth: --image makes no sense here");
            auto spec = config.synthetic;
            for (auto* opt : synth->get_options()) {
                if (opt->count() == 0)
                    continue;
                const auto name = opt->get_name();
                if (name == "--height") spec.height = scene.height;
                if (name == "--width") spec.width = scene.width;
                if (name == "--bands") spec.bands = scene.bands;
                if (name == "--classes") spec.classes = scene.classes;
                if (name == "--region-scale") spec.region_scale = scene.region_scale;
                if (name == "--noise") spec.noise_sigma = scene.noise_sigma;
            }
            if (o.seed)
                spec.seed = seed;
            config.synthetic = spec;
            report(hsikme::run_synth(config));
        } else if (*classify) {
            report(hsikme::run_classify(config));
        } else if (*evaluate) {
            report(hsikme::run_evaluate(config));
        } else if (*theory) {
            report(hsikme::run_theory(config));
        }
    } catch (const hsikme::Error& e) {
        std::cerr << "error [" << hsikme::to_string(e.kind()) << "] " << e.what() << "\n";
        return hsikme::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error " << e.what() << "\n";
        return 2;
    }
    return 0;
}
