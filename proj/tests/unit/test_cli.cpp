#include <gtest/gtest.h>

#include <hsikme/pipeline.hpp>

#include "support.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace hsikme;
using testing_support::TempDir;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Result run(const std::string& args, const TempDir& dir, const std::string& env = "")
{
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = env + " \"" + std::string(HSIKME_CLI_PATH) + "\" " + args + " >\"" + out.string() +
                            "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

// A small synthetic scene keeps each command well under a second.
std::filesystem::path small_config(const TempDir& dir)
{
    const auto p = dir / "config.json";
    testing_support::write_text(p, R"({
  "seed": 4,
  "synthetic": {"height": 24, "width": 24, "bands": 6, "classes": 3, "region_scale": 8, "noise_sigma": 0.2, "seed": 4},
  "method": {"name": "meanmap", "scale": 3, "features": 64},
  "svm": {"c": 10},
  "protocol": {"runs": 3, "per_class": 5}
})");
    return p;
}

} // namespace

TEST(Cli, ClassifySmoke)
{
    TempDir dir;
    const auto r = run("classify -c \"" + small_config(dir).string() + "\" -o \"" + (dir / "out").string() + "\"", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"classification.ppm", "labels.csv", "metrics.json", "model.json", "model.bin"})
        EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
    const auto metrics = nlohmann::json::parse(slurp(dir / "out" / "metrics.json"));
    EXPECT_EQ(metrics["method"], "meanmap");
    EXPECT_EQ(metrics["runs"].size(), 1u);
    EXPECT_GE(metrics["mean"]["oa"].get<double>(), 0.0);
    EXPECT_LE(metrics["mean"]["oa"].get<double>(), 100.0);
    EXPECT_EQ(metrics["params"]["c"].get<double>(), 10.0);
    const auto labels = load_label_csv(dir / "out" / "labels.csv");
    EXPECT_EQ(labels.height(), 24u);
    EXPECT_EQ(labels.width(), 24u);
}

TEST(Cli, ClassifyIsByteIdenticalAcrossRuns)
{
    TempDir dir;
    const auto cfg = small_config(dir);
    ASSERT_EQ(run("classify -c \"" + cfg.string() + "\" -o \"" + (dir / "a").string() + "\"", dir).code, 0);
    ASSERT_EQ(run("classify -c \"" + cfg.string() + "\" -o \"" + (dir / "b").string() + "\"", dir).code, 0);
    for (const char* f : {"classification.ppm", "labels.csv", "metrics.json", "model.json", "model.bin"})
        EXPECT_EQ(testing_support::read_bytes(dir / "a" / f), testing_support::read_bytes(dir / "b" / f)) << f;
    ASSERT_EQ(run("classify -c \"" + cfg.string() + "\" --seed 5 -o \"" + (dir / "c").string() + "\"", dir).code, 0);
    EXPECT_NE(testing_support::read_bytes(dir / "a" / "model.bin"),
              testing_support::read_bytes(dir / "c" / "model.bin"));
}

TEST(Cli, EvaluateWritesSummary)
{
    TempDir dir;
    const auto r = run("evaluate -c \"" + small_config(dir).string() + "\" --c-grid -o \"" + (dir / "out").string() + "\"", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "evaluation.json"));
    EXPECT_EQ(j["runs"].size(), 3u);
    for (const char* k : {"oa", "aa", "kappa"}) {
        EXPECT_TRUE(j["mean"].contains(k));
        EXPECT_TRUE(j["std"].contains(k));
    }
    EXPECT_NE(slurp(dir / "out" / "evaluation.txt").find("meanmap"), std::string::npos);
}

TEST(Cli, OutputDirectoryFromEnvironment)
{
    TempDir dir;
    const auto r = run("synth --height 8 --width 8 --bands 3", dir, "HSIKME_OUTPUT_DIR=\"" + (dir / "env").string() + "\"");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "env" / "scene.hdr"));
    const auto img = load_envi(dir / "env" / "scene.hdr");
    EXPECT_EQ(img.bands(), 3u);
    EXPECT_EQ(load_ground_truth(dir / "env" / "gt.csv", 8, 8).pixel_count(), 64u);
}

TEST(Cli, SynthThenClassifyFromFiles)
{
    TempDir dir;
    ASSERT_EQ(run("synth --height 16 --width 16 --bands 5 --seed 2 -o \"" + (dir / "s").string() + "\"", dir).code, 0);
    const auto r = run("classify --image \"" + (dir / "s" / "scene.hdr").string() + "\" --gt \"" +
                           (dir / "s" / "gt.csv").string() + "\" --method rff --features 32 --C 1 -o \"" +
                           (dir / "out").string() + "\"",
                       dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "metrics.json"));
}

TEST(Cli, CapacityErrorNamesTheCap)
{
    TempDir dir;
    const auto r = run("classify -c \"" + small_config(dir).string() +
                           "\" --method mp_x_meanmap --features 4096 -o \"" + (dir / "out").string() + "\"",
                       dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("65536"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("build features"), std::string::npos) << r.err;
    EXPECT_FALSE(std::filesystem::exists(dir / "out" / "metrics.json"));
}

TEST(Cli, ExitCodes)
{
    TempDir dir;
    EXPECT_EQ(run("", dir).code, 1);
    EXPECT_EQ(run("classify --no-such-flag", dir).code, 1);
    EXPECT_EQ(run("--help", dir).code, 0);
    const auto bad_method = run("classify --method nope -o \"" + (dir / "x").string() + "\"", dir);
    EXPECT_EQ(bad_method.code, 1);
    EXPECT_NE(bad_method.err.find("nope"), std::string::npos);
    const auto missing = run("classify --image \"" + (dir / "missing.hdr").string() + "\" --gt \"" +
                                 (dir / "gt.csv").string() + "\" -o \"" + (dir / "x").string() + "\"",
                             dir);
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("load image"), std::string::npos) << missing.err;
    testing_support::write_text(dir / "broken.json", "{ not json");
    EXPECT_EQ(run("classify -c \"" + (dir / "broken.json").string() + "\"", dir).code, 1);

    EXPECT_EQ(exit_code(ErrorKind::parameter), 1);
    EXPECT_EQ(exit_code(ErrorKind::numerical), 3);
    EXPECT_EQ(exit_code(ErrorKind::format), 2);
    EXPECT_EQ(exit_code(ErrorKind::capacity), 2);
    EXPECT_EQ(exit_code(ErrorKind::degenerate_data), 2);
}

TEST(Cli, StagedErrorsKeepKind)
{
    try {
        staged("train classifier", [] { throw NumericalError("non-finite weights"); });
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_EQ(std::string(e.what()), "train classifier: non-finite weights");
    }
}

TEST(Render, SingleBlackPixelBytes)
{
    TempDir dir;
    testing_support::write_text(dir / "one.csv", "0\n");
    const auto r = run("render \"" + (dir / "one.csv").string() + "\" \"" + (dir / "one.ppm").string() + "\"", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto bytes = testing_support::read_bytes(dir / "one.ppm");
    const std::string header = "P6\n1 1\n255\n";
    ASSERT_EQ(bytes.size(), header.size() + 3);
    EXPECT_EQ(bytes.size(), 14u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 11), header);
    EXPECT_EQ(bytes[11], 0);
    EXPECT_EQ(bytes[12], 0);
    EXPECT_EQ(bytes[13], 0);
}

TEST(Render, GroundTruthColoursAreBijective)
{
    TempDir dir;
    ASSERT_EQ(run("synth --height 20 --width 20 --bands 3 --classes 7 --region-scale 5 -o \"" +
                      (dir / "s").string() + "\"",
                  dir)
                  .code,
              0);
    const auto gt = load_ground_truth(dir / "s" / "gt.csv", 20, 20);
    ASSERT_EQ(run("render \"" + (dir / "s" / "gt.csv").string() + "\" \"" + (dir / "gt.ppm").string() + "\"", dir).code,
              0);
    const auto img = read_ppm(dir / "gt.ppm");
    ASSERT_EQ(img.pixels.size(), gt.pixel_count());
    std::map<int, Rgb> forward;
    std::map<Rgb, int> inverse;
    for (std::size_t p = 0; p < gt.pixel_count(); ++p) {
        const auto [f, fresh] = forward.emplace(gt.at(p), img.pixels[p]);
        EXPECT_EQ(f->second, img.pixels[p]);
        const auto [i, ifresh] = inverse.emplace(img.pixels[p], gt.at(p));
        EXPECT_EQ(i->second, gt.at(p));
    }
    EXPECT_EQ(forward.size(), inverse.size());
    EXPECT_GE(forward.size(), 2u);
}

TEST(Render, UniformClassAndPaletteLimits)
{
    const GroundTruthMap all_two(3, 4, std::vector<int>(12, 2));
    const auto palette = make_palette(2);
    const auto bytes = encode_ppm(all_two, palette);
    const std::size_t header = std::string("P6\n4 3\n255\n").size();
    ASSERT_EQ(bytes.size(), header + 36);
    for (std::size_t p = 0; p < 12; ++p)
        for (std::size_t ch = 0; ch < 3; ++ch)
            EXPECT_EQ(static_cast<std::uint8_t>(bytes[header + 3 * p + ch]), palette[2][ch]);
    const GroundTruthMap beyond(1, 1, {3});
    EXPECT_THROW(encode_ppm(beyond, palette), ContractViolation);
}

TEST(Render, PaletteIsDistinctAndStartsBlack)
{
    for (std::size_t n : {1u, 16u, 17u, 200u}) {
        const auto p = make_palette(n);
        ASSERT_GE(p.size(), n + 1);
        EXPECT_EQ(p[0], (Rgb{0, 0, 0}));
        EXPECT_EQ(std::set<Rgb>(p.begin(), p.end()).size(), p.size());
    }
}

TEST(Cli, TheorySmokeAndDeterminism)
{
    TempDir dir;
    testing_support::write_text(dir / "theory.json", R"({
  "theory": {"theorem3_predictors": 10,
             "theorem5": {"heldout_groups": 50, "rademacher_draws": 100}}
})");
    const std::string base = "theory -c \"" + (dir / "theory.json").string() + "\" --trials 2 -o ";
    ASSERT_EQ(run(base + "\"" + (dir / "a").string() + "\"", dir).code, 0);
    ASSERT_EQ(run(base + "\"" + (dir / "b").string() + "\"", dir).code, 0);
    for (const char* f : {"theorem3.json", "theorem5.json", "theory.txt"})
        EXPECT_EQ(testing_support::read_bytes(dir / "a" / f), testing_support::read_bytes(dir / "b" / f)) << f;
    const auto t3 = nlohmann::json::parse(slurp(dir / "a" / "theorem3.json"));
    const auto t5 = nlohmann::json::parse(slurp(dir / "a" / "theorem5.json"));
    ASSERT_EQ(t3["reports"].size(), 10u);
    ASSERT_EQ(t5["reports"].size(), 2u);
    for (const auto& r : t5["reports"]) {
        EXPECT_TRUE(r.contains("slack"));
        EXPECT_TRUE(r["components"].contains("moment_term"));
    }
    EXPECT_TRUE(t3["reports"][0].contains("slack"));
}
