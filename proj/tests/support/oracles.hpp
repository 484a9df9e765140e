#pragma once

// Independent reference computations used by unit and acceptance tests.
// Nothing here calls into the library code paths being checked.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

/// Gauss-Jordan elimination with full pivoting.
inline Vec gauss_jordan(Mat a, Vec b) {
    const std::size_t n = a.size();
    std::vector<std::size_t> col_of(n);
    for (std::size_t i = 0; i < n; ++i) col_of[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pr = k, pc = k;
        for (std::size_t r = k; r < n; ++r)
            for (std::size_t c = k; c < n; ++c)
                if (std::abs(a[r][c]) > std::abs(a[pr][pc])) pr = r, pc = c;
        if (a[pr][pc] == 0.0) throw std::runtime_error("oracle: singular");
        std::swap(a[k], a[pr]);
        std::swap(b[k], b[pr]);
        for (auto& row : a) std::swap(row[k], row[pc]);
        std::swap(col_of[k], col_of[pc]);
        const double piv = a[k][k];
        for (auto& v : a[k]) v /= piv;
        b[k] /= piv;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == k || a[r][k] == 0.0) continue;
            const double f = a[r][k];
            for (std::size_t c = 0; c < n; ++c) a[r][c] -= f * a[k][c];
            b[r] -= f * b[k];
        }
    }
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[col_of[i]] = b[i];
    return x;
}

inline Vec diff(Vec x, int d) {
    for (int k = 0; k < d; ++k) {
        Vec y;
        for (std::size_t i = 1; i < x.size(); ++i) y.push_back(x[i] - x[i - 1]);
        x = y;
    }
    return x;
}

/// Least-squares AR(p) on the d-differenced series via an explicit design
/// matrix and Gram-matrix solve. Returns [intercept?, phi_1..phi_p].
inline Vec ar_normal_equations(const Vec& series, int p, int d, bool intercept) {
    const Vec w = diff(series, d);
    Mat design;
    Vec y;
    for (std::size_t t = static_cast<std::size_t>(p); t < w.size(); ++t) {
        Vec row;
        if (intercept) row.push_back(1.0);
        for (int i = 1; i <= p; ++i) row.push_back(w[t - static_cast<std::size_t>(i)]);
        design.push_back(row);
        y.push_back(w[t]);
    }
    const std::size_t k = design.front().size();
    Mat g(k, Vec(k, 0.0));
    Vec r(k, 0.0);
    for (std::size_t i = 0; i < design.size(); ++i)
        for (std::size_t a = 0; a < k; ++a) {
            r[a] += design[i][a] * y[i];
            for (std::size_t b = 0; b < k; ++b) g[a][b] += design[i][a] * design[i][b];
        }
    return gauss_jordan(g, r);
}

/// Pearson correlation between x_t and x_{t+lag}.
inline double lagged_pearson(const Vec& x, std::size_t lag) {
    const std::size_t n = x.size() - lag;
    double ma = 0, mb = 0;
    for (std::size_t t = 0; t < n; ++t) ma += x[t], mb += x[t + lag];
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t t = 0; t < n; ++t) {
        sab += (x[t] - ma) * (x[t + lag] - mb);
        saa += (x[t] - ma) * (x[t] - ma);
        sbb += (x[t + lag] - mb) * (x[t + lag] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// Frequency (Hz) of the largest-magnitude non-DC DFT bin, by direct summation.
inline double dominant_frequency(const Vec& x, double rate) {
    const std::size_t n = x.size();
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double best = -1, best_f = 0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> s{0, 0};
        for (std::size_t t = 0; t < n; ++t)
            s += (x[t] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n));
        if (std::abs(s) > best) best = std::abs(s), best_f = static_cast<double>(k) * rate / static_cast<double>(n);
    }
    return best_f;
}

/// Count of windows of length w at stride s in n samples, by enumeration.
inline std::size_t enumerate_windows(std::size_t n, std::size_t w, std::size_t s) {
    std::size_t count = 0;
    for (std::size_t start = 0; start + w <= n; start += s) ++count;
    return count;
}

/// Confusion counts by brute-force tally: counts[true][pred].
inline std::vector<std::vector<std::size_t>> tally(const std::vector<std::size_t>& truth,
                                                   const std::vector<std::size_t>& pred, std::size_t k) {
    std::vector<std::vector<std::size_t>> c(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < truth.size(); ++i)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                if (truth[i] == a && pred[i] == b) ++c[a][b];
    return c;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace oracle
