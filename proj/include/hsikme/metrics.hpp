#ifndef HSIKME_METRICS_HPP
#define HSIKME_METRICS_HPP

// Confusion matrix, OA / AA / kappa, and the Monte-Carlo evaluation protocol:
// per run, draw a few training pixels per class, fit the SVM, and score the
// remaining labeled pixels (or a fixed test map).

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "hsikme/error.hpp"
#include "hsikme/image.hpp"
#include "hsikme/matrix_io.hpp"
#include "hsikme/parallel.hpp"
#include "hsikme/random.hpp"
#include "hsikme/svm.hpp"

namespace hsikme {

/// Rows = true class, columns = predicted class; class k lives at index k-1.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t classes) : n_(classes), counts_(classes * classes, 0) {}

    ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts) : n_(classes), counts_(std::move(counts))
    {
        if (counts_.size() != n_ * n_)
            throw ShapeError("confusion counts must form a square matrix");
    }

    std::size_t classes() const noexcept { return n_; }
    std::uint64_t& operator()(std::size_t i, std::size_t j) { return counts_[i * n_ + j]; }
    std::uint64_t operator()(std::size_t i, std::size_t j) const { return counts_[i * n_ + j]; }
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

    std::uint64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }
    std::uint64_t trace() const
    {
        std::uint64_t t = 0;
        for (std::size_t i = 0; i < n_; ++i)
            t += (*this)(i, i);
        return t;
    }
    std::uint64_t row_sum(std::size_t i) const
    {
        std::uint64_t s = 0;
        for (std::size_t j = 0; j < n_; ++j)
            s += (*this)(i, j);
        return s;
    }
    std::uint64_t col_sum(std::size_t j) const
    {
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < n_; ++i)
            s += (*this)(i, j);
        return s;
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& other)
    {
        if (other.n_ != n_)
            throw ShapeError("cannot add confusion matrices of different size");
        for (std::size_t k = 0; k < counts_.size(); ++k)
            counts_[k] += other.counts_[k];
        return *this;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> counts_;
};

/// Pixels whose truth is 0 are skipped.
inline ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> truth, int n_classes)
{
    if (predicted.size() != truth.size())
        throw ContractViolation("prediction and truth lengths differ");
    if (n_classes < 1)
        throw ParameterError("confusion matrix needs at least one class");
    ConfusionMatrix cm(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t == 0)
            continue;
        if (t < 0 || t > n_classes)
            throw ContractViolation("true label " + std::to_string(t) + " outside 1.." + std::to_string(n_classes));
        if (p < 1 || p > n_classes)
            throw ContractViolation("predicted label " + std::to_string(p) + " outside 1.." +
                                    std::to_string(n_classes));
        ++cm(static_cast<std::size_t>(t - 1), static_cast<std::size_t>(p - 1));
    }
    return cm;
}

inline double overall_accuracy(const ConfusionMatrix& cm)
{
    const auto total = cm.total();
    if (total == 0)
        throw UndefinedInputError("overall accuracy of an empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

inline double average_accuracy(const ConfusionMatrix& cm)
{
    if (cm.classes() == 0)
        throw UndefinedInputError("average accuracy of an empty confusion matrix");
    double sum = 0.0;
    for (std::size_t i = 0; i < cm.classes(); ++i) {
        const auto row = cm.row_sum(i);
        if (row == 0)
            throw UndefinedInputError("class " + std::to_string(i + 1) + " has no evaluated pixels");
        sum += static_cast<double>(cm(i, i)) / static_cast<double>(row);
    }
    return sum / static_cast<double>(cm.classes());
}

/// Cohen's kappa with Pe = sum_l row_l col_l / total^2; 0 when Pe = 1.
inline double kappa(const ConfusionMatrix& cm)
{
    const auto total = cm.total();
    if (total == 0)
        throw UndefinedInputError("kappa of an empty confusion matrix");
    const double t = static_cast<double>(total);
    double chance = 0.0;
    for (std::size_t l = 0; l < cm.classes(); ++l)
        chance += static_cast<double>(cm.row_sum(l)) * static_cast<double>(cm.col_sum(l));
    chance /= t * t;
    if (chance >= 1.0)
        return 0.0;
    const double po = static_cast<double>(cm.trace()) / t;
    return (po - chance) / (1.0 - chance);
}

struct Scores {
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;
};

inline Scores score(const ConfusionMatrix& cm) { return {overall_accuracy(cm), average_accuracy(cm), kappa(cm)}; }

// ---------------------------------------------------------------------------
// Monte-Carlo protocol

struct ClassifierConfig {
    std::optional<double> c; ///< fixed C; cross-validated over c_grid() when empty
    std::size_t folds = 5;
    SvmOptions svm;
};

struct McProtocol {
    std::size_t runs = 20;
    std::size_t per_class = 5;
    std::uint64_t seed = 0;
    /// Held-out labels scored instead of the unsampled pixels (0 = not scored).
    std::optional<GroundTruthMap> fixed_test;
    /// Sanity mode: score on the training pixels themselves.
    bool train_equals_test = false;
};

struct McRun {
    Scores scores;
    double c = 0.0;
    ConfusionMatrix confusion;
    std::vector<std::size_t> training_pixels;
};

struct McSummary {
    std::vector<McRun> runs;
    Scores mean;
    Scores std; ///< sample standard deviation (n - 1); 0 for a single run
};

inline McSummary summarize(std::vector<McRun> runs)
{
    McSummary s;
    s.runs = std::move(runs);
    const double n = static_cast<double>(s.runs.size());
    if (s.runs.empty())
        throw UndefinedInputError("no Monte-Carlo runs to summarize");
    auto field = [&](auto get, double& mean, double& sd) {
        double sum = 0.0;
        for (const auto& r : s.runs)
            sum += get(r.scores);
        mean = sum / n;
        double ss = 0.0;
        for (const auto& r : s.runs)
            ss += (get(r.scores) - mean) * (get(r.scores) - mean);
        sd = s.runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    };
    field([](const Scores& x) { return x.oa; }, s.mean.oa, s.std.oa);
    field([](const Scores& x) { return x.aa; }, s.mean.aa, s.std.aa);
    field([](const Scores& x) { return x.kappa; }, s.mean.kappa, s.std.kappa);
    return s;
}

namespace detail {

inline RowMatrix gather_rows(const RowMatrix& m, const std::vector<std::size_t>& rows)
{
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k)
        out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
    return out;
}

} // namespace detail

/// Fits a classifier on the given rows, choosing C by cross-validation when
/// the config does not fix it. Returns the model and the C used.
inline std::pair<SvmModel, double> fit_classifier(const RowMatrix& x, const std::vector<int>& y,
                                                  const ClassifierConfig& config, std::uint64_t seed,
                                                  std::span<const int> required_classes = {})
{
    SvmOptions options = config.svm;
    options.seed = derive_seed(seed, 0x5e1);
    double c = 0.0;
    if (config.c) {
        c = *config.c;
    } else {
        c = cross_validate(x, y, config.folds, derive_seed(seed, 0xcf), options).best_c;
    }
    return {train_multiclass(x, y, c, options, required_classes), c};
}

/// `features` holds one row per pixel of `gt` (row-major pixel order).
inline McSummary monte_carlo_protocol(const RowMatrix& features, const GroundTruthMap& gt, const McProtocol& protocol,
                                      const ClassifierConfig& classifier)
{
    if (protocol.runs < 1)
        throw ParameterError("Monte-Carlo protocol needs at least one run");
    if (protocol.per_class < 1)
        throw ParameterError("Monte-Carlo protocol needs at least one training pixel per class");
    if (static_cast<std::size_t>(features.rows()) != gt.pixel_count())
        throw ShapeError("feature table has " + std::to_string(features.rows()) + " rows, ground truth has " +
                         std::to_string(gt.pixel_count()) + " pixels");
    const int n_classes = gt.class_count();
    if (n_classes < 2)
        throw DegenerateDataError("ground truth needs at least two classes");
    if (protocol.fixed_test) {
        const auto& ft = *protocol.fixed_test;
        if (ft.height() != gt.height() || ft.width() != gt.width())
            throw ShapeError("fixed test map size differs from the ground truth");
        if (ft.class_count() > n_classes)
            throw ContractViolation("fixed test map has labels beyond the training classes");
    }

    const auto by_class = gt.pixels_by_class();
    const bool remainder_test = !protocol.fixed_test && !protocol.train_equals_test;
    for (int k = 1; k <= n_classes; ++k) {
        const std::size_t have = by_class[static_cast<std::size_t>(k)].size();
        const std::size_t need = protocol.per_class + (remainder_test ? 1 : 0);
        if (have < need)
            throw DegenerateDataError("class " + std::to_string(k) + " has " + std::to_string(have) +
                                      " labeled pixels, protocol needs " + std::to_string(need));
    }
    std::vector<int> all_classes(static_cast<std::size_t>(n_classes));
    std::iota(all_classes.begin(), all_classes.end(), 1);

    std::vector<McRun> runs(protocol.runs);
    parallel_for(0, protocol.runs, [&](std::size_t run) {
        const std::uint64_t run_seed = derive_seed(protocol.seed, run);
        Rng rng(run_seed);
        std::vector<std::size_t> train;
        std::vector<int> train_y;
        for (int k = 1; k <= n_classes; ++k) {
            auto pool = by_class[static_cast<std::size_t>(k)];
            // partial Fisher-Yates: the first per_class entries are the sample
            for (std::size_t i = 0; i < protocol.per_class; ++i)
                std::swap(pool[i], pool[i + static_cast<std::size_t>(rng.below(pool.size() - i))]);
            for (std::size_t i = 0; i < protocol.per_class; ++i) {
                train.push_back(pool[i]);
                train_y.push_back(k);
            }
        }

        const RowMatrix x = detail::gather_rows(features, train);
        auto [model, c] = fit_classifier(x, train_y, classifier, run_seed, all_classes);

        std::vector<std::size_t> test;
        std::vector<int> truth;
        if (protocol.train_equals_test) {
            test = train;
            truth = train_y;
        } else if (protocol.fixed_test) {
            for (std::size_t p = 0; p < gt.pixel_count(); ++p)
                if (protocol.fixed_test->at(p) > 0) {
                    test.push_back(p);
                    truth.push_back(protocol.fixed_test->at(p));
                }
        } else {
            std::vector<char> used(gt.pixel_count(), 0);
            for (auto p : train)
                used[p] = 1;
            for (std::size_t p = 0; p < gt.pixel_count(); ++p)
                if (gt.at(p) > 0 && !used[p]) {
                    test.push_back(p);
                    truth.push_back(gt.at(p));
                }
        }
        const auto predicted = predict_rows(model, detail::gather_rows(features, test));
        McRun r;
        r.confusion = confusion_matrix(predicted, truth, n_classes);
        r.scores = score(r.confusion);
        r.c = c;
        r.training_pixels = std::move(train);
        runs[run] = std::move(r);
    });
    return summarize(std::move(runs));
}

// ---------------------------------------------------------------------------
// Reports

/// {method, params, runs:[{oa,aa,kappa,c}], mean:{...}, std:{...}}; percentages.
inline nlohmann::json summary_to_json(const McSummary& s, const std::string& method, const nlohmann::json& params)
{
    auto pct = [](const Scores& x) { return nlohmann::json{{"oa", 100 * x.oa}, {"aa", 100 * x.aa}, {"kappa", 100 * x.kappa}}; };
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : s.runs) {
        auto j = pct(r.scores);
        j["c"] = r.c;
        runs.push_back(std::move(j));
    }
    return {{"method", method}, {"params", params}, {"runs", runs}, {"mean", pct(s.mean)}, {"std", pct(s.std)}};
}

/// One table row per summary: kernel, parameters, OA, kappa, AA as
/// mean +- std in percent to one decimal.
inline std::string summary_table(const std::vector<std::tuple<std::string, std::string, McSummary>>& rows)
{
    std::ostringstream out;
    out << std::left << std::setw(16) << "kernel" << std::setw(28) << "parameters" << std::setw(16) << "OA"
        << std::setw(16) << "kappa" << "AA\n";
    auto cell = [](double m, double s) {
        std::ostringstream c;
        c << std::fixed << std::setprecision(1) << 100 * m << " +- " << 100 * s;
        return c.str();
    };
    for (const auto& [kernel, params, s] : rows)
        out << std::left << std::setw(16) << kernel << std::setw(28) << params << std::setw(16)
            << cell(s.mean.oa, s.std.oa) << std::setw(16) << cell(s.mean.kappa, s.std.kappa)
            << cell(s.mean.aa, s.std.aa) << "\n";
    return out.str();
}

} // namespace hsikme

#endif // HSIKME_METRICS_HPP
