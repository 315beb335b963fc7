#ifndef HSIKME_TESTS_ORACLES_HPP
#define HSIKME_TESTS_ORACLES_HPP

// Independent reference implementations used to freeze expected values.
// They deliberately share no code paths with the library beyond plain data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// (eigenvalues descending, eigenvectors as columns of V).
inline std::pair<std::vector<double>, Matrix> jacobi_eigen(Matrix a)
{
    const std::size_t n = a.size();
    Matrix v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += a[p][q] * a[p][q];
        if (off < 1e-30)
            break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300)
                    continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
    std::vector<double> values(n);
    Matrix vectors(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        values[k] = a[order[k]][order[k]];
        for (std::size_t i = 0; i < n; ++i)
            vectors[i][k] = v[i][order[k]];
    }
    return {values, vectors};
}

/// Unbiased covariance of rows.
inline Matrix covariance(const Matrix& x)
{
    const std::size_t n = x.size(), d = x[0].size();
    std::vector<double> mean(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j)
            mean[j] += row[j] / static_cast<double>(n);
    Matrix c(d, std::vector<double>(d, 0.0));
    for (const auto& row : x)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                c[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]) / static_cast<double>(n - 1);
    return c;
}

/// Flat min / max filter over offsets with clamped coordinates.
/// sign = +1 reads f(x + h), sign = -1 reads f(x - h).
inline Matrix window_extremum(const Matrix& f, const std::vector<std::pair<int, int>>& offsets, bool take_min, int sign)
{
    const int h = static_cast<int>(f.size()), w = static_cast<int>(f[0].size());
    Matrix out(f.size(), std::vector<double>(f[0].size()));
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double best = take_min ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            for (const auto& [dr, dc] : offsets) {
                const int rr = std::min(std::max(r + sign * dr, 0), h - 1);
                const int cc = std::min(std::max(c + sign * dc, 0), w - 1);
                best = take_min ? std::min(best, f[rr][cc]) : std::max(best, f[rr][cc]);
            }
            out[r][c] = best;
        }
    return out;
}

inline std::vector<std::pair<int, int>> disk_offsets(int r)
{
    std::vector<std::pair<int, int>> out;
    for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b)
            if (a * a + b * b <= r * r)
                out.emplace_back(a, b);
    return out;
}

/// Reconstruction by dilation: iterate J <- min(max over 4-neighbourhood, mask) to stability.
inline Matrix iterative_reconstruction(Matrix marker, const Matrix& mask)
{
    const int h = static_cast<int>(mask.size()), w = static_cast<int>(mask[0].size());
    for (bool changed = true; changed;) {
        changed = false;
        Matrix next = marker;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double v = marker[r][c];
                if (r > 0) v = std::max(v, marker[r - 1][c]);
                if (r + 1 < h) v = std::max(v, marker[r + 1][c]);
                if (c > 0) v = std::max(v, marker[r][c - 1]);
                if (c + 1 < w) v = std::max(v, marker[r][c + 1]);
                v = std::min(v, mask[r][c]);
                if (v != next[r][c]) {
                    next[r][c] = v;
                    changed = true;
                }
            }
        marker = std::move(next);
    }
    return marker;
}

/// sqrt(1/N)[cos(w.x), sin(w.x)] evaluated from scratch.
inline std::vector<double> rff(const Matrix& omega, const std::vector<double>& x)
{
    const std::size_t n = omega.size();
    std::vector<double> out(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        double phase = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d)
            phase += omega[j][d] * x[d];
        out[j] = std::cos(phase) / std::sqrt(static_cast<double>(n));
        out[n + j] = std::sin(phase) / std::sqrt(static_cast<double>(n));
    }
    return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

/// Independent vote recount for one-vs-one: decisions[k] for pair (a_k, b_k).
inline int vote(const std::vector<int>& classes, const std::vector<std::pair<int, int>>& pairs,
                const std::vector<double>& decisions)
{
    std::map<int, int> votes;
    for (int c : classes)
        votes[c] = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k)
        ++votes[decisions[k] >= 0 ? pairs[k].first : pairs[k].second];
    int best = classes.front();
    for (int c : classes)
        if (votes[c] > votes[best])
            best = c;
    return best;
}

/// Least-squares slope of y on x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

/// Test-side random source, independent of the library's Rng.
struct TestRandom {
    std::mt19937 gen;
    explicit TestRandom(unsigned seed) : gen(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
};

} // namespace oracle

#endif // HSIKME_TESTS_ORACLES_HPP
