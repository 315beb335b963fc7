#ifndef HSIKME_SVM_HPP
#define HSIKME_SVM_HPP

/*
 * Linear C-SVM on explicit feature vectors.
 *
 *   min_w  1/2 |w|^2 + C sum_i max(0, 1 - y_i w.[x_i, b0])
 *
 * The bias is the weight of an appended constant feature b0 (default 1), so
 * it is regularised together with w. Solved by dual coordinate ascent on
 *
 *   max_a  sum_i a_i - 1/2 |sum_i a_i y_i [x_i, b0]|^2,   0 <= a_i <= C,
 *
 * one exact coordinate maximisation per example, in a fresh seeded random
 * order every epoch, until the largest projected-gradient magnitude (the KKT
 * violation) drops below the tolerance or max_epochs is reached.
 *
 * When there are fewer examples than feature dimensions the solver works on
 * the n x n Gram matrix instead of maintaining w; the update sequence is the
 * same, only the bookkeeping differs.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hsikme/error.hpp"
#include "hsikme/matrix_io.hpp"
#include "hsikme/parallel.hpp"
#include "hsikme/random.hpp"

namespace hsikme {

enum class DualPath { automatic, gram, primal };

struct SvmOptions {
    double tolerance = 1e-4;
    std::size_t max_epochs = 1000;
    std::uint64_t seed = 0;
    double bias_feature = 1.0;
    DualPath path = DualPath::automatic;
};

struct BinarySeparator {
    Vector weights;
    double bias = 0.0;
    double c_value = 0.0;

    double decision(const Eigen::Ref<const Vector>& x) const { return weights.dot(x) + bias; }
};

/// Solver diagnostics; filled on request.
struct DualTrace {
    Vector alpha;
    std::vector<double> objective; ///< dual objective after each epoch
    std::size_t epochs = 0;
    double kkt_violation = 0.0;
    bool converged = false;
};

namespace detail {

inline double projected_gradient(double g, double a, double c)
{
    if (a <= 0.0)
        return std::min(g, 0.0);
    if (a >= c)
        return std::max(g, 0.0);
    return g;
}

} // namespace detail

/// Binary separator for labels in {-1, +1}.
inline BinarySeparator train_binary(const Eigen::Ref<const RowMatrix>& x, std::span<const int> y, double c,
                                    const SvmOptions& options = {}, DualTrace* trace = nullptr)
{
    if (!(c > 0.0) || !std::isfinite(c))
        throw ParameterError("SVM C must be positive and finite");
    const auto n = static_cast<std::size_t>(x.rows());
    if (y.size() != n)
        throw ShapeError("SVM label count does not match feature rows");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1)
            has_pos = true;
        else if (v == -1)
            has_neg = true;
        else
            throw ContractViolation("binary SVM labels must be -1 or +1");
    }
    if (!has_pos || !has_neg)
        throw DegenerateDataError("binary SVM needs examples of both signs");
    if (!x.allFinite())
        throw ContractViolation("SVM features must be finite");

    const double b0 = options.bias_feature;
    const double b2 = b0 * b0;
    const Eigen::Index dim = x.cols();
    const bool use_gram = options.path == DualPath::gram ||
                          (options.path == DualPath::automatic && static_cast<Eigen::Index>(n) < dim && n <= 4096);

    Vector alpha = Vector::Zero(static_cast<Eigen::Index>(n));
    Vector qdiag(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        qdiag(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(i)).squaredNorm() + b2;

    // Gram path: g = K (alpha o y) where K = X X^T + b0^2.
    Eigen::MatrixXd gram;
    Vector g;
    // Primal path: w over [x, b0].
    Vector w;
    double wb = 0.0;
    if (use_gram) {
        gram = x * x.transpose();
        gram.array() += b2;
        g = Vector::Zero(static_cast<Eigen::Index>(n));
    } else {
        w = Vector::Zero(dim);
    }

    auto yi = [&](std::size_t i) { return static_cast<double>(y[i]); };
    auto margin = [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        return use_gram ? g(r) : x.row(r).dot(w) + wb * b0;
    };
    auto dual_objective = [&] {
        double w2 = 0.0;
        if (use_gram) {
            for (std::size_t i = 0; i < n; ++i)
                w2 += alpha(static_cast<Eigen::Index>(i)) * yi(i) * g(static_cast<Eigen::Index>(i));
        } else {
            w2 = w.squaredNorm() + wb * wb;
        }
        return alpha.sum() - 0.5 * w2;
    };

    Rng rng(options.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    DualTrace local;
    for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for (std::size_t i : order) {
            const auto r = static_cast<Eigen::Index>(i);
            const double q = qdiag(r);
            if (q <= 0.0)
                continue;
            const double grad = yi(i) * margin(i) - 1.0;
            if (detail::projected_gradient(grad, alpha(r), c) == 0.0)
                continue;
            const double updated = std::clamp(alpha(r) - grad / q, 0.0, c);
            const double delta = (updated - alpha(r)) * yi(i);
            if (delta == 0.0)
                continue;
            alpha(r) = updated;
            if (use_gram) {
                g += delta * gram.col(r);
            } else {
                w += delta * x.row(r).transpose();
                wb += delta * b0;
            }
        }
        ++local.epochs;
        if (trace)
            local.objective.push_back(dual_objective());

        double violation = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            if (qdiag(r) <= 0.0)
                continue;
            violation = std::max(violation, std::abs(detail::projected_gradient(yi(i) * margin(i) - 1.0, alpha(r), c)));
        }
        local.kkt_violation = violation;
        if (violation <= options.tolerance) {
            local.converged = true;
            break;
        }
    }

    BinarySeparator sep;
    sep.c_value = c;
    if (use_gram) {
        Vector ay(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            ay(static_cast<Eigen::Index>(i)) = alpha(static_cast<Eigen::Index>(i)) * yi(i);
        sep.weights = x.transpose() * ay;
        sep.bias = b2 * ay.sum();
    } else {
        sep.weights = std::move(w);
        sep.bias = wb * b0;
    }
    if (!sep.weights.allFinite() || !std::isfinite(sep.bias))
        throw NumericalError("SVM solver produced non-finite weights");
    if (trace) {
        local.alpha = std::move(alpha);
        *trace = std::move(local);
    }
    return sep;
}

// ---------------------------------------------------------------------------
// One-vs-one multiclass

struct SvmModel {
    std::vector<int> classes; ///< ascending class ids
    /// separators[k] separates classes[pairs[k].first] (+1) from classes[pairs[k].second] (-1)
    std::vector<BinarySeparator> separators;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t feature_dim = 0;
};

/// Trains one separator per unordered class pair on that pair's examples.
/// When `required_classes` is non-empty every listed class must be present.
inline SvmModel train_multiclass(const Eigen::Ref<const RowMatrix>& x, std::span<const int> labels, double c,
                                 const SvmOptions& options = {}, std::span<const int> required_classes = {})
{
    if (labels.size() != static_cast<std::size_t>(x.rows()))
        throw ShapeError("label count does not match feature rows");
    std::map<int, std::vector<Eigen::Index>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 1)
            throw ContractViolation("multiclass labels must be >= 1");
        by_class[labels[i]].push_back(static_cast<Eigen::Index>(i));
    }
    for (int cls : required_classes)
        if (!by_class.contains(cls))
            throw DegenerateDataError("class " + std::to_string(cls) + " has no training example");
    if (by_class.size() < 2)
        throw DegenerateDataError("multiclass SVM needs at least two classes");

    SvmModel model;
    model.feature_dim = static_cast<std::size_t>(x.cols());
    for (const auto& [cls, _] : by_class)
        model.classes.push_back(cls);
    for (std::size_t a = 0; a < model.classes.size(); ++a)
        for (std::size_t b = a + 1; b < model.classes.size(); ++b)
            model.pairs.emplace_back(a, b);
    model.separators.resize(model.pairs.size());

    parallel_for(0, model.pairs.size(), [&](std::size_t k) {
        const auto& pos = by_class.at(model.classes[model.pairs[k].first]);
        const auto& neg = by_class.at(model.classes[model.pairs[k].second]);
        RowMatrix sub(static_cast<Eigen::Index>(pos.size() + neg.size()), x.cols());
        std::vector<int> y;
        y.reserve(pos.size() + neg.size());
        Eigen::Index r = 0;
        for (auto i : pos) {
            sub.row(r++) = x.row(i);
            y.push_back(1);
        }
        for (auto i : neg) {
            sub.row(r++) = x.row(i);
            y.push_back(-1);
        }
        SvmOptions pair_options = options;
        pair_options.seed = derive_seed(options.seed, k);
        model.separators[k] = train_binary(sub, y, c, pair_options);
    });
    return model;
}

/// Majority vote over pairwise separators; a zero decision votes for the
/// first class of the pair, and vote ties go to the smallest class id.
inline int predict(const SvmModel& model, const Eigen::Ref<const Vector>& x)
{
    if (static_cast<std::size_t>(x.size()) != model.feature_dim)
        throw ShapeError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                         std::to_string(model.feature_dim));
    std::vector<int> votes(model.classes.size(), 0);
    for (std::size_t k = 0; k < model.separators.size(); ++k) {
        const double d = model.separators[k].decision(x);
        ++votes[d >= 0.0 ? model.pairs[k].first : model.pairs[k].second];
    }
    const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();
    return model.classes[static_cast<std::size_t>(best)];
}

inline std::vector<int> predict_rows(const SvmModel& model, const Eigen::Ref<const RowMatrix>& x)
{
    if (static_cast<std::size_t>(x.cols()) != model.feature_dim)
        throw ShapeError("feature dimension does not match model dimension");
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    // Batch all pairwise decisions as one product.
    RowMatrix w(static_cast<Eigen::Index>(model.separators.size()), x.cols());
    Vector b(static_cast<Eigen::Index>(model.separators.size()));
    for (std::size_t k = 0; k < model.separators.size(); ++k) {
        w.row(static_cast<Eigen::Index>(k)) = model.separators[k].weights.transpose();
        b(static_cast<Eigen::Index>(k)) = model.separators[k].bias;
    }
    parallel_for(0, out.size(), [&](std::size_t i) {
        std::vector<int> votes(model.classes.size(), 0);
        const Vector d = w * x.row(static_cast<Eigen::Index>(i)).transpose() + b;
        for (std::size_t k = 0; k < model.separators.size(); ++k)
            ++votes[d(static_cast<Eigen::Index>(k)) >= 0.0 ? model.pairs[k].first : model.pairs[k].second];
        out[i] = model.classes[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

/// C = 2^i for i = -15 .. 15.
inline std::vector<double> c_grid()
{
    std::vector<double> grid;
    for (int i = -15; i <= 15; ++i)
        grid.push_back(std::ldexp(1.0, i));
    return grid;
}

struct CvReport {
    std::vector<std::pair<double, double>> grid; ///< (C, mean validation accuracy)
    double best_c = 1.0;
};

/// Stratified fold ids. Each class is shuffled (seeded) and dealt round-robin
/// starting where the previous class stopped, so a class with fewer examples
/// than folds puts each example in a different fold.
inline std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed)
{
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(i);
    std::vector<std::size_t> fold(labels.size());
    Rng rng(seed);
    std::size_t next = 0;
    for (auto& [cls, idx] : by_class) {
        rng.shuffle(idx.begin(), idx.end());
        for (std::size_t i : idx)
            fold[i] = next++ % folds;
    }
    return fold;
}

/// k-fold grid search over c_grid(). The score of a C is the mean accuracy
/// over folds whose validation part is non-empty and whose training part
/// holds at least two classes; ties go to the smaller C.
inline CvReport cross_validate(const Eigen::Ref<const RowMatrix>& x, std::span<const int> labels,
                               std::size_t folds = 5, std::uint64_t seed = 0, const SvmOptions& options = {},
                               const std::vector<double>& grid = c_grid())
{
    if (labels.size() != static_cast<std::size_t>(x.rows()))
        throw ShapeError("label count does not match feature rows");
    if (folds < 2)
        throw ParameterError("cross-validation needs at least two folds");
    {
        std::vector<int> distinct(labels.begin(), labels.end());
        std::sort(distinct.begin(), distinct.end());
        if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
            throw DegenerateDataError("cross-validation needs at least two classes");
    }
    const auto fold = stratified_folds(labels, folds, seed);

    struct Split {
        RowMatrix train_x, valid_x;
        std::vector<int> train_y, valid_y;
    };
    std::vector<Split> splits;
    for (std::size_t f = 0; f < folds; ++f) {
        Split s;
        std::vector<Eigen::Index> tr, va;
        for (std::size_t i = 0; i < labels.size(); ++i)
            (fold[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
        if (va.empty())
            continue;
        std::vector<int> tr_classes;
        for (auto i : tr)
            tr_classes.push_back(labels[static_cast<std::size_t>(i)]);
        std::sort(tr_classes.begin(), tr_classes.end());
        if (std::unique(tr_classes.begin(), tr_classes.end()) - tr_classes.begin() < 2)
            continue;
        s.train_x.resize(static_cast<Eigen::Index>(tr.size()), x.cols());
        s.valid_x.resize(static_cast<Eigen::Index>(va.size()), x.cols());
        for (std::size_t k = 0; k < tr.size(); ++k) {
            s.train_x.row(static_cast<Eigen::Index>(k)) = x.row(tr[k]);
            s.train_y.push_back(labels[static_cast<std::size_t>(tr[k])]);
        }
        for (std::size_t k = 0; k < va.size(); ++k) {
            s.valid_x.row(static_cast<Eigen::Index>(k)) = x.row(va[k]);
            s.valid_y.push_back(labels[static_cast<std::size_t>(va[k])]);
        }
        splits.push_back(std::move(s));
    }
    if (splits.empty())
        throw DegenerateDataError("no usable cross-validation fold");

    CvReport report;
    report.grid.resize(grid.size());
    parallel_for(0, grid.size(), [&](std::size_t g) {
        double total = 0.0;
        for (std::size_t f = 0; f < splits.size(); ++f) {
            SvmOptions fold_options = options;
            fold_options.seed = derive_seed(options.seed, f);
            const SvmModel model = train_multiclass(splits[f].train_x, splits[f].train_y, grid[g], fold_options);
            const auto pred = predict_rows(model, splits[f].valid_x);
            std::size_t correct = 0;
            for (std::size_t i = 0; i < pred.size(); ++i)
                correct += pred[i] == splits[f].valid_y[i];
            total += static_cast<double>(correct) / static_cast<double>(pred.size());
        }
        report.grid[g] = {grid[g], total / static_cast<double>(splits.size())};
    });

    std::size_t best = 0;
    for (std::size_t g = 1; g < report.grid.size(); ++g)
        if (report.grid[g].second > report.grid[best].second ||
            (report.grid[g].second == report.grid[best].second && report.grid[g].first < report.grid[best].first))
            best = g;
    report.best_c = report.grid[best].first;
    return report;
}

// ---------------------------------------------------------------------------
// Serialization: <base>.json header + <base>.bin rows [w..., b] per separator

inline void save_model(const SvmModel& model, const std::filesystem::path& base)
{
    RowMatrix block(static_cast<Eigen::Index>(model.separators.size()), static_cast<Eigen::Index>(model.feature_dim + 1));
    nlohmann::json pairs = nlohmann::json::array(), cs = nlohmann::json::array();
    for (std::size_t k = 0; k < model.separators.size(); ++k) {
        block.row(static_cast<Eigen::Index>(k)).head(static_cast<Eigen::Index>(model.feature_dim)) =
            model.separators[k].weights.transpose();
        block(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(model.feature_dim)) = model.separators[k].bias;
        pairs.push_back({model.classes[model.pairs[k].first], model.classes[model.pairs[k].second]});
        cs.push_back(model.separators[k].c_value);
    }
    write_matrix(base, block,
                 {{"kind", "svm_model"}, {"classes", model.classes}, {"feature_dim", model.feature_dim},
                  {"pairs", pairs}, {"c", cs}});
}

inline SvmModel load_model(const std::filesystem::path& base)
{
    const auto stored = read_matrix(base);
    const auto& d = stored.descriptor;
    if (d.value("kind", "") != "svm_model")
        throw FormatError("not an SVM model descriptor");
    SvmModel model;
    model.classes = d.at("classes").get<std::vector<int>>();
    model.feature_dim = d.at("feature_dim").get<std::size_t>();
    const auto cs = d.at("c").get<std::vector<double>>();
    if (stored.values.cols() != static_cast<Eigen::Index>(model.feature_dim + 1) ||
        cs.size() != static_cast<std::size_t>(stored.values.rows()))
        throw FormatError("SVM weight block does not match its descriptor");
    for (std::size_t a = 0; a < model.classes.size(); ++a)
        for (std::size_t b = a + 1; b < model.classes.size(); ++b)
            model.pairs.emplace_back(a, b);
    if (model.pairs.size() != cs.size())
        throw FormatError("SVM separator count does not match class count");
    for (std::size_t k = 0; k < cs.size(); ++k) {
        BinarySeparator s;
        s.weights = stored.values.row(static_cast<Eigen::Index>(k)).head(static_cast<Eigen::Index>(model.feature_dim)).transpose();
        s.bias = stored.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(model.feature_dim));
        s.c_value = cs[k];
        model.separators.push_back(std::move(s));
    }
    return model;
}

} // namespace hsikme

#endif // HSIKME_SVM_HPP
