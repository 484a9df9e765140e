#include "pdm/linalg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdm/error.hpp"

namespace pdm::linalg {

namespace {

double one_norm(const Matrix& a) {
    double best = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < a.rows; ++r) s += std::abs(a(r, c));
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

SolveResult solve(const Matrix& a, const Vector& b, double max_condition) {
    const std::size_t n = a.rows;
    if (a.cols != n || b.size() != n) throw InvalidInput("solve: system is not square");
    if (n == 0) return {};

    // LU with partial pivoting, L and U packed into lu.
    Matrix lu = a;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const double scale = std::max(one_norm(a), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::abs(lu(r, k)) > std::abs(lu(piv, k))) piv = r;
        if (std::abs(lu(piv, k)) <= 1e-14 * scale)
            throw DegenerateData(fmt::format("singular system: column {} has no usable pivot", k));
        if (piv != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(lu(k, c), lu(piv, c));
            std::swap(perm[k], perm[piv]);
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            lu(r, k) /= lu(k, k);
            const double f = lu(r, k);
            for (std::size_t c = k + 1; c < n; ++c) lu(r, c) -= f * lu(k, c);
        }
    }

    auto substitute = [&](const Vector& rhs) {
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = rhs[perm[i]];
            for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * y[j];
            y[i] = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = y[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= lu(i, j) * y[j];
            y[i] = s / lu(i, i);
        }
        return y;
    };

    // Explicit inverse is affordable for the tiny systems solved here.
    Matrix inv(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        Vector e(n, 0.0);
        e[c] = 1.0;
        auto col = substitute(e);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
    }
    SolveResult out{substitute(b), one_norm(a) * one_norm(inv)};
    if (!std::isfinite(out.condition) || out.condition > max_condition)
        throw DegenerateData(fmt::format("ill-conditioned system (condition estimate {:.3g})", out.condition));
    return out;
}

}  // namespace pdm::linalg
