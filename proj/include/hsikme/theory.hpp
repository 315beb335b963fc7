#ifndef HSIKME_THEORY_HPP
#define HSIKME_THEORY_HPP

// Numerical checks of the learning-theory statements for mean-map
// classification: empirical risks on embeddings, embedding deviation,
// Rademacher estimates and the slack of the risk-gap inequalities.
//
// Everything lives in an explicit random-feature space: a group is a
// Gaussian N(m, s^2 I); its population embedding under the map z is
//   mu_j = sqrt(1/N) exp(-s^2 |w_j|^2 / 2) [cos(w_j.m), sin(w_j.m)]
// and its empirical embedding is the mean of z over the drawn samples.
// Predictors are affine functions f(u) = w.u + b on that space, with
// Lipschitz constant |w|.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hsikme/error.hpp"
#include "hsikme/matrix_io.hpp"
#include "hsikme/parallel.hpp"
#include "hsikme/random.hpp"
#include "hsikme/rff.hpp"
#include "hsikme/svm.hpp"

namespace hsikme {

enum class LossKind { hinge, logistic };

struct LossSpec {
    LossKind kind = LossKind::hinge;

    double lipschitz_constant() const noexcept { return 1.0; }

    double operator()(double margin) const
    {
        if (kind == LossKind::hinge)
            return std::max(0.0, 1.0 - margin);
        // log(1 + e^-m) without overflow
        return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    }
};

struct BoundConfig {
    std::optional<double> c_f; ///< defaults to the predictor's weight norm
    double delta = 0.05;
    double r_bound = 1.0;
    std::size_t rademacher_draws = 1000;
    std::size_t dictionary_size = 256;
    std::uint64_t seed = 0;
    /// Use n instead of 1/n in the embedding-gap bound (the form its
    /// derivation actually produces with sums in place of means).
    bool theorem3_proof_form = false;
};

inline void validate(const BoundConfig& c)
{
    if (c.c_f && !(*c.c_f > 0.0))
        throw ParameterError("C_f must be positive");
    if (!(c.delta > 0.0 && c.delta < 1.0))
        throw ParameterError("delta must lie in (0, 1)");
    if (!(c.r_bound >= 0.0))
        throw ParameterError("R must be non-negative");
    if (c.rademacher_draws == 0 || c.dictionary_size == 0)
        throw ParameterError("Rademacher draws and dictionary size must be positive");
}

struct BoundReport {
    std::string theorem;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    std::map<std::string, double> components;
    bool non_vacuous = false; ///< rhs below the trivial risk level Phi(0)
};

inline nlohmann::json to_json(const BoundReport& r)
{
    return {{"theorem", r.theorem}, {"lhs", r.lhs},         {"rhs", r.rhs},
            {"slack", r.slack},     {"non_vacuous", r.non_vacuous}, {"components", r.components}};
}

inline std::string summary_text(const BoundReport& r)
{
    std::ostringstream out;
    out << std::setprecision(6) << r.theorem << ": lhs " << r.lhs << "  rhs " << r.rhs << "  slack " << r.slack
        << (r.non_vacuous ? "" : "  (vacuous)") << "\n";
    for (const auto& [k, v] : r.components)
        out << "  " << k << " = " << v << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Risk functionals

/// (1/n) sum_i Phi(f(z_i) y_i).
inline double empirical_risk(std::span<const double> values, std::span<const double> labels, const LossSpec& loss)
{
    if (values.size() != labels.size())
        throw ShapeError("predictor values and labels differ in length");
    if (values.empty())
        throw UndefinedInputError("empirical risk of an empty sample");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += loss(values[i] * labels[i]);
    return s / static_cast<double>(values.size());
}

// ---------------------------------------------------------------------------
// Embedding deviation for Gaussian samples under the exact Gaussian kernel

/// |mu_hat - mu|_H for n draws from N(0, p_sigma^2 I_dim) and the kernel
/// exp(-|x-y|^2 / (2 k_sigma^2)), with the population terms in closed form:
///   E_y k(x, y)  = (k^2/(k^2+p^2))^(dim/2) exp(-|x|^2 / (2(k^2+p^2)))
///   E_xy k(x, y) = (k^2/(k^2+2p^2))^(dim/2)
inline double embedding_deviation_gaussian(std::size_t n, double p_sigma, double k_sigma, std::size_t dim,
                                           std::uint64_t seed)
{
    if (n == 0 || dim == 0)
        throw ParameterError("sample size and dimension must be positive");
    if (!(p_sigma >= 0.0))
        throw ParameterError("distribution scale must be non-negative");
    if (!(k_sigma > 0.0))
        throw ParameterError("kernel bandwidth must be positive");
    Rng rng(seed);
    RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index d = 0; d < x.cols(); ++d)
            x(i, d) = p_sigma * rng.normal();

    const double k2 = k_sigma * k_sigma, p2 = p_sigma * p_sigma;
    const double half_dim = 0.5 * static_cast<double>(dim);
    double gram = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        gram += 1.0;
        for (Eigen::Index j = i + 1; j < x.rows(); ++j)
            gram += 2.0 * std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2.0 * k2));
    }
    double cross = 0.0;
    const double cross_scale = std::pow(k2 / (k2 + p2), half_dim);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        cross += cross_scale * std::exp(-x.row(i).squaredNorm() / (2.0 * (k2 + p2)));
    const double pop = std::pow(k2 / (k2 + 2.0 * p2), half_dim);
    const double nn = static_cast<double>(n);
    const double sq = gram / (nn * nn) - 2.0 * cross / nn + pop;
    return std::sqrt(std::max(0.0, sq));
}

// ---------------------------------------------------------------------------
// Rademacher estimates

/// Monte-Carlo average over sign vectors e of max_j |(1/n) sum_i e_i g_j(z_i)|
/// for the m x n value matrix g (the class is symmetrised with -g_j).
inline double rademacher_estimate(const RowMatrix& values, std::size_t draws, std::uint64_t seed)
{
    if (values.rows() == 0 || values.cols() == 0)
        throw UndefinedInputError("Rademacher estimate of an empty function class");
    if (draws == 0)
        throw ParameterError("Rademacher estimate needs at least one draw");
    Rng rng(seed);
    Vector eps(values.cols());
    double total = 0.0;
    for (std::size_t t = 0; t < draws; ++t) {
        for (Eigen::Index i = 0; i < eps.size(); ++i)
            eps(i) = rng.sign();
        total += (values * eps).cwiseAbs().maxCoeff() / static_cast<double>(values.cols());
    }
    return total / static_cast<double>(draws);
}

/// E |(1/m) sum_i e_i z(x_i)| over sign vectors: the Rademacher average of the
/// unit ball of the feature space on the sample rows.
inline double unit_ball_rademacher(const RowMatrix& features, std::size_t draws, std::uint64_t seed)
{
    if (features.rows() == 0)
        throw UndefinedInputError("Rademacher average of an empty sample");
    Rng rng(seed);
    Vector eps(features.rows());
    double total = 0.0;
    for (std::size_t t = 0; t < draws; ++t) {
        for (Eigen::Index i = 0; i < eps.size(); ++i)
            eps(i) = rng.sign();
        total += (features.transpose() * eps).norm() / static_cast<double>(features.rows());
    }
    return total / static_cast<double>(draws);
}

// ---------------------------------------------------------------------------
// Synthetic meta-distribution of labeled Gaussian groups

struct MetaDistribution {
    std::size_t dim = 2;
    double shift = 1.0;        ///< class means at +-shift along the first axis
    double spread = 0.5;       ///< std of group means around the class mean
    double within_sigma = 0.5; ///< std of samples inside a group
    double variance = 0.0;     ///< carried for completeness, unused by the bounds
    std::size_t group_size = 25;
    double label_noise = 0.0;  ///< probability of flipping a group's label
};

struct Group {
    Vector mean;
    double sigma = 0.0;
    double label = 1.0;
    RowMatrix samples;
};

inline Group draw_group(const MetaDistribution& d, Rng& rng)
{
    Group g;
    const double y = rng.uniform() < 0.5 ? -1.0 : 1.0;
    g.mean = Vector::Zero(static_cast<Eigen::Index>(d.dim));
    for (Eigen::Index k = 0; k < g.mean.size(); ++k)
        g.mean(k) = d.spread * rng.normal();
    g.mean(0) += y * d.shift;
    g.sigma = d.within_sigma;
    g.label = rng.uniform() < d.label_noise ? -y : y;
    g.samples.resize(static_cast<Eigen::Index>(d.group_size), static_cast<Eigen::Index>(d.dim));
    for (Eigen::Index i = 0; i < g.samples.rows(); ++i)
        for (Eigen::Index k = 0; k < g.samples.cols(); ++k)
            g.samples(i, k) = g.mean(k) + d.within_sigma * rng.normal();
    return g;
}

inline std::vector<Group> sample_meta(const MetaDistribution& d, std::size_t groups, std::uint64_t seed)
{
    if (d.dim == 0 || d.group_size == 0 || groups == 0)
        throw ParameterError("meta sample needs positive dimension, group size and group count");
    if (!(d.within_sigma >= 0.0) || !(d.spread >= 0.0) || !(d.label_noise >= 0.0 && d.label_noise <= 1.0))
        throw ParameterError("invalid meta-distribution scales");
    Rng rng(seed);
    std::vector<Group> out;
    for (std::size_t i = 0; i < groups; ++i)
        out.push_back(draw_group(d, rng));
    return out;
}

/// Population embedding of N(mean, sigma^2 I) under the random feature map.
inline Vector gaussian_embedding(const RandomFeatureMap& map, const Vector& mean, double sigma)
{
    if (static_cast<std::size_t>(mean.size()) != map.input_dim())
        throw ShapeError("group mean dimension does not match the feature map");
    const auto& w = map.frequencies();
    const std::size_t n = map.count();
    const double scale = std::sqrt(1.0 / static_cast<double>(n));
    Vector mu(static_cast<Eigen::Index>(2 * n));
    for (std::size_t j = 0; j < n; ++j) {
        const auto row = w.row(static_cast<Eigen::Index>(j));
        const double damp = std::exp(-0.5 * sigma * sigma * row.squaredNorm());
        const double phase = row.dot(mean);
        mu(static_cast<Eigen::Index>(j)) = scale * damp * std::cos(phase);
        mu(static_cast<Eigen::Index>(n + j)) = scale * damp * std::sin(phase);
    }
    return mu;
}

/// E |z(x) - mu|^2 = 1 - |mu|^2 for x ~ N(m, sigma^2 I); independent of m.
inline double embedding_moment(const RandomFeatureMap& map, double sigma)
{
    const auto& w = map.frequencies();
    double s = 0.0;
    for (Eigen::Index j = 0; j < w.rows(); ++j)
        s += std::exp(-sigma * sigma * w.row(j).squaredNorm());
    return 1.0 - s / static_cast<double>(w.rows());
}

inline RowMatrix feature_rows(const RandomFeatureMap& map, const RowMatrix& x)
{
    RowMatrix z(x.rows(), static_cast<Eigen::Index>(map.feature_dim()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Vector xi = x.row(i).transpose();
        z.row(i) = feature(map, as_span(xi)).transpose();
    }
    return z;
}

inline Vector empirical_embedding(const RandomFeatureMap& map, const Group& g)
{
    return feature_rows(map, g.samples).colwise().mean().transpose();
}

struct AffinePredictor {
    Vector weights;
    double bias = 0.0;
    double operator()(const Vector& u) const { return weights.dot(u) + bias; }
};

// ---------------------------------------------------------------------------
// Embedding-gap bound: R_muhat(f) - R_mu(f) <= (1/n) C_l C_f^2 E|mu - muhat|^2 E y^2

inline double theorem3_rhs(double c_l, double c_f, double mean_sq_deviation, double mean_sq_label, std::size_t n,
                           bool proof_form)
{
    const double nn = static_cast<double>(n);
    return (proof_form ? nn : 1.0 / nn) * c_l * c_f * c_f * mean_sq_deviation * mean_sq_label;
}

inline BoundReport check_theorem3(const RandomFeatureMap& map, const std::vector<Group>& groups,
                                  const AffinePredictor& f, const LossSpec& loss, const BoundConfig& config)
{
    validate(config);
    if (groups.empty())
        throw UndefinedInputError("meta sample has no groups");
    if (static_cast<std::size_t>(f.weights.size()) != map.feature_dim())
        throw ShapeError("predictor dimension does not match the feature map");
    const std::size_t n = groups.size();
    std::vector<double> emp(n), pop(n), y(n);
    double dev = 0.0, y2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vector muhat = empirical_embedding(map, groups[i]);
        const Vector mu = gaussian_embedding(map, groups[i].mean, groups[i].sigma);
        emp[i] = f(muhat);
        pop[i] = f(mu);
        y[i] = groups[i].label;
        dev += (muhat - mu).squaredNorm();
        y2 += y[i] * y[i];
    }
    dev /= static_cast<double>(n);
    y2 /= static_cast<double>(n);
    const double c_f = config.c_f.value_or(f.weights.norm());
    const double r_hat = empirical_risk(emp, y, loss);
    const double r_pop = empirical_risk(pop, y, loss);

    BoundReport r;
    r.theorem = "theorem3";
    r.lhs = r_hat - r_pop;
    r.rhs = theorem3_rhs(loss.lipschitz_constant(), c_f, dev, y2, n, config.theorem3_proof_form);
    r.slack = r.rhs - r.lhs;
    r.non_vacuous = r.rhs < loss(0.0);
    r.components = {{"risk_empirical_embedding", r_hat},
                    {"risk_population_embedding", r_pop},
                    {"mean_sq_embedding_deviation", dev},
                    {"mean_sq_label", y2},
                    {"c_l", loss.lipschitz_constant()},
                    {"c_f", c_f},
                    {"groups", static_cast<double>(n)},
                    {"proof_form", config.theorem3_proof_form ? 1.0 : 0.0}};
    return r;
}

// ---------------------------------------------------------------------------
// Combined bound

struct Theorem5Terms {
    double c_l = 1.0;
    double c_f = 1.0;
    double moment = 0.0;        ///< E |z(x) - mu_x|^2
    double mean_sq_label = 1.0; ///< E y^2 (population)
    double rn_h = 0.0;          ///< Rademacher average of the unit ball on a group sample
    double r_bound = 1.0;
    std::size_t group_size = 1; ///< sample count behind each empirical embedding
    double emp_sq_label = 1.0;  ///< empirical E y^2
    double rn_g = 0.0;          ///< Rademacher complexity of the loss class
    double sigma_g = 0.0;       ///< variance bound of the loss class
    double delta = 0.05;
    std::size_t n = 1;          ///< number of groups
};

inline double theorem5_rhs(const Theorem5Terms& t)
{
    const double n = static_cast<double>(t.n), m = static_cast<double>(t.group_size);
    const double log2d = std::log(2.0 / t.delta);
    const double deviation = 2.0 * t.rn_h + t.r_bound * std::sqrt(std::log(1.0 / t.delta) / m);
    return t.c_l * t.c_f * t.c_f * (t.moment * t.mean_sq_label + deviation * t.emp_sq_label) + 8.0 * t.rn_g +
           t.sigma_g * std::sqrt(8.0 * log2d / n) + 3.0 * log2d / n;
}

/// `train` are the n groups the predictor was fitted on; `heldout` supplies
/// fresh individual draws (x, y) for the point-level risk R(f) = E Phi(y f(z(x))).
inline BoundReport check_theorem5(const RandomFeatureMap& map, const std::vector<Group>& train,
                                  const std::vector<Group>& heldout, const AffinePredictor& f, const LossSpec& loss,
                                  const BoundConfig& config)
{
    validate(config);
    if (train.empty() || heldout.empty())
        throw UndefinedInputError("theorem 5 check needs training and held-out groups");
    if (static_cast<std::size_t>(f.weights.size()) != map.feature_dim())
        throw ShapeError("predictor dimension does not match the feature map");
    const std::size_t n = train.size();
    const double sigma = train.front().sigma;
    for (const auto& g : train)
        if (g.sigma != sigma || g.samples.rows() != train.front().samples.rows())
            throw ContractViolation("theorem 5 check expects groups with a common scale and size");

    // LHS: empirical risk on empirical embeddings minus point-level risk.
    std::vector<double> emp(n), y(n);
    RowMatrix pop_mu(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(map.feature_dim()));
    double y2 = 0.0;
    double rn_h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const RowMatrix z = feature_rows(map, train[i].samples);
        emp[i] = f(z.colwise().mean().transpose());
        y[i] = train[i].label;
        y2 += y[i] * y[i];
        pop_mu.row(static_cast<Eigen::Index>(i)) = gaussian_embedding(map, train[i].mean, train[i].sigma).transpose();
        rn_h += unit_ball_rademacher(z, config.rademacher_draws, derive_seed(config.seed, 0x4e00 + i));
    }
    y2 /= static_cast<double>(n);
    rn_h /= static_cast<double>(n);
    const double r_hat = empirical_risk(emp, y, loss);

    std::vector<double> point_values, point_labels;
    for (const auto& g : heldout) {
        const RowMatrix z = feature_rows(map, g.samples);
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            point_values.push_back(f(z.row(i).transpose()));
            point_labels.push_back(g.label);
        }
    }
    const double r_point = empirical_risk(point_values, point_labels, loss);

    // Loss class over a dictionary of unit-sphere predictors on the
    // population embeddings of the training groups.
    Rng rng(derive_seed(config.seed, 0xd1c7));
    RowMatrix losses(static_cast<Eigen::Index>(config.dictionary_size), static_cast<Eigen::Index>(n));
    double sigma_g2 = 0.0;
    for (std::size_t j = 0; j < config.dictionary_size; ++j) {
        Vector w(static_cast<Eigen::Index>(map.feature_dim()));
        for (Eigen::Index k = 0; k < w.size(); ++k)
            w(k) = rng.normal();
        w.normalize();
        const Vector values = pop_mu * w;
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l = loss(values(static_cast<Eigen::Index>(i)) * y[i]);
            losses(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = l;
            sq += l * l;
        }
        sigma_g2 = std::max(sigma_g2, sq / static_cast<double>(n));
    }

    Theorem5Terms t;
    t.c_l = loss.lipschitz_constant();
    t.c_f = config.c_f.value_or(f.weights.norm());
    t.moment = embedding_moment(map, sigma);
    t.mean_sq_label = 1.0; // labels are +-1
    t.rn_h = rn_h;
    t.r_bound = config.r_bound;
    t.group_size = static_cast<std::size_t>(train.front().samples.rows());
    t.emp_sq_label = y2;
    t.rn_g = rademacher_estimate(losses, config.rademacher_draws, derive_seed(config.seed, 0x6a));
    t.sigma_g = std::sqrt(sigma_g2);
    t.delta = config.delta;
    t.n = n;

    BoundReport r;
    r.theorem = "theorem5";
    r.lhs = r_hat - r_point;
    r.rhs = theorem5_rhs(t);
    r.slack = r.rhs - r.lhs;
    r.non_vacuous = r.rhs < loss(0.0);
    r.components = {{"risk_empirical_embedding", r_hat},
                    {"risk_points_heldout", r_point},
                    {"moment_term", t.moment},
                    {"rademacher_unit_ball", t.rn_h},
                    {"deviation_term", 2.0 * t.rn_h + t.r_bound * std::sqrt(std::log(1.0 / t.delta) /
                                                                             static_cast<double>(t.group_size))},
                    {"rademacher_loss_class", t.rn_g},
                    {"variance_bound", t.sigma_g},
                    {"c_l", t.c_l},
                    {"c_f", t.c_f},
                    {"r_bound", t.r_bound},
                    {"delta", t.delta},
                    {"groups", static_cast<double>(n)},
                    {"group_size", static_cast<double>(t.group_size)},
                    {"mean_sq_label", y2}};
    return r;
}

// ---------------------------------------------------------------------------
// Experiment drivers used by the CLI and the acceptance suite

struct TheoryExperiment {
    MetaDistribution meta;
    std::size_t features = 512;   ///< random frequencies N (feature dim 2N)
    double kernel_sigma = 1.0;
    std::size_t groups = 50;
    std::size_t heldout_groups = 400;
    double svm_c = 1.0;
    LossSpec loss;
    BoundConfig bound;
};

inline RandomFeatureMap experiment_map(const TheoryExperiment& e, std::uint64_t seed)
{
    return sample_frequencies(e.meta.dim, e.features, e.kernel_sigma, derive_seed(seed, 0xf0));
}

/// Fits a linear SVM (C = svm_c) on the empirical embeddings of `train`.
inline AffinePredictor fit_on_embeddings(const RandomFeatureMap& map, const std::vector<Group>& train, double c,
                                         std::uint64_t seed)
{
    RowMatrix x(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(map.feature_dim()));
    std::vector<int> y;
    for (std::size_t i = 0; i < train.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = empirical_embedding(map, train[i]).transpose();
        y.push_back(train[i].label > 0 ? 1 : -1);
    }
    const bool both = std::find(y.begin(), y.end(), 1) != y.end() && std::find(y.begin(), y.end(), -1) != y.end();
    if (!both) // single-label meta sample: constant predictor toward that label
        return {Vector::Zero(x.cols()), static_cast<double>(y.front())};
    SvmOptions options;
    options.seed = seed;
    const auto sep = train_binary(x, y, c, options);
    return {sep.weights, sep.bias};
}

/// One seeded trial of the combined bound.
inline BoundReport theorem5_trial(const TheoryExperiment& e, std::uint64_t seed)
{
    const auto map = experiment_map(e, seed);
    const auto train = sample_meta(e.meta, e.groups, derive_seed(seed, 1));
    const auto heldout = sample_meta(e.meta, e.heldout_groups, derive_seed(seed, 2));
    const auto f = fit_on_embeddings(map, train, e.svm_c, derive_seed(seed, 3));
    BoundConfig cfg = e.bound;
    cfg.seed = derive_seed(seed, 4);
    return check_theorem5(map, train, heldout, f, e.loss, cfg);
}

/// Uniformly random unit-norm predictors with zero bias.
inline std::vector<AffinePredictor> random_unit_predictors(std::size_t count, std::size_t dim, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<AffinePredictor> out;
    for (std::size_t k = 0; k < count; ++k) {
        Vector w(static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w(i) = rng.normal();
        out.push_back({w.normalized(), 0.0});
    }
    return out;
}

inline void to_json(nlohmann::json& j, const MetaDistribution& d)
{
    j = {{"dim", d.dim},
         {"shift", d.shift},
         {"spread", d.spread},
         {"within_sigma", d.within_sigma},
         {"variance", d.variance},
         {"group_size", d.group_size},
         {"label_noise", d.label_noise}};
}

inline void from_json(const nlohmann::json& j, MetaDistribution& d)
{
    d.dim = j.value("dim", d.dim);
    d.shift = j.value("shift", d.shift);
    d.spread = j.value("spread", d.spread);
    d.within_sigma = j.value("within_sigma", d.within_sigma);
    d.variance = j.value("variance", d.variance);
    d.group_size = j.value("group_size", d.group_size);
    d.label_noise = j.value("label_noise", d.label_noise);
}

} // namespace hsikme

#endif // HSIKME_THEORY_HPP
