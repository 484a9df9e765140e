#include "pdm/kernels.hpp"

#include "pdm/error.hpp"

#include <omp.h>

#include <cstddef>

namespace pdm::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

inline void affine_row(const Matrix& in, const Matrix& w, std::span<const double> bias, Matrix& out,
                       std::size_t r) {
    const double* x = in.data.data() + r * in.cols;
    double* y = out.data.data() + r * out.cols;
    const std::size_t n = w.cols;
    std::size_t j = 0;
    // Four rows at a time: independent accumulators, each summed in k order.
    for (; j + 4 <= w.rows; j += 4) {
        const double* w0 = w.data.data() + j * n;
        const double* w1 = w0 + n;
        const double* w2 = w1 + n;
        const double* w3 = w2 + n;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double xk = x[k];
            s0 += w0[k] * xk;
            s1 += w1[k] * xk;
            s2 += w2[k] * xk;
            s3 += w3[k] * xk;
        }
        y[j] = s0 + bias[j];
        y[j + 1] = s1 + bias[j + 1];
        y[j + 2] = s2 + bias[j + 2];
        y[j + 3] = s3 + bias[j + 3];
    }
    for (; j < w.rows; ++j) y[j] = dot(w.data.data() + j * n, x, n) + bias[j];
}

inline void backproject_row(const Matrix& delta, const Matrix& w, Matrix& out, std::size_t r) {
    const double* d = delta.data.data() + r * delta.cols;
    double* y = out.data.data() + r * out.cols;
    for (std::size_t k = 0; k < w.cols; ++k) y[k] = 0.0;
    for (std::size_t j = 0; j < w.rows; ++j) {
        const double dj = d[j];
        if (dj == 0.0) continue;
        const double* wr = w.data.data() + j * w.cols;
        for (std::size_t k = 0; k < w.cols; ++k) y[k] += dj * wr[k];
    }
}

// One output neuron j: sums over the batch in sample order.
inline void outer_row(const Matrix& delta, const Matrix& in, double scale, Matrix& gw,
                      std::span<double> gb, std::size_t j) {
    double* g = gw.data.data() + j * gw.cols;
    for (std::size_t k = 0; k < gw.cols; ++k) g[k] = 0.0;
    double bsum = 0.0;
    for (std::size_t s = 0; s < delta.rows; ++s) {
        const double d = delta(s, j);
        bsum += d;
        if (d == 0.0) continue;
        const double* x = in.data.data() + s * in.cols;
        for (std::size_t k = 0; k < gw.cols; ++k) g[k] += d * x[k];
    }
    for (std::size_t k = 0; k < gw.cols; ++k) g[k] *= scale;
    gb[j] = bsum * scale;
}

void check_affine(const Matrix& in, const Matrix& w, std::span<const double> bias, Matrix& out) {
    if (in.cols != w.cols || bias.size() != w.rows) throw InvalidInput("affine: shape mismatch");
    if (out.rows != in.rows || out.cols != w.rows) out = Matrix(in.rows, w.rows);
}

void check_backproject(const Matrix& delta, const Matrix& w, Matrix& out) {
    if (delta.cols != w.rows) throw InvalidInput("backproject: shape mismatch");
    if (out.rows != delta.rows || out.cols != w.cols) out = Matrix(delta.rows, w.cols);
}

void check_outer(const Matrix& delta, const Matrix& in, Matrix& gw, std::span<double> gb) {
    if (gb.size() != delta.cols) throw InvalidInput("outer_accumulate: bias gradient size mismatch");
    if (delta.rows != in.rows) throw InvalidInput("outer_accumulate: batch mismatch");
    if (gw.rows != delta.cols || gw.cols != in.cols) gw = Matrix(delta.cols, in.cols);
}

}  // namespace

namespace serial {

void affine(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out) {
    check_affine(in, weights, bias, out);
    for (std::size_t r = 0; r < in.rows; ++r) affine_row(in, weights, bias, out, r);
}

void backproject(const Matrix& delta, const Matrix& weights, Matrix& out) {
    check_backproject(delta, weights, out);
    for (std::size_t r = 0; r < delta.rows; ++r) backproject_row(delta, weights, out, r);
}

void outer_accumulate(const Matrix& delta, const Matrix& in, double scale, Matrix& grad_w,
                      std::span<double> grad_b) {
    check_outer(delta, in, grad_w, grad_b);
    for (std::size_t j = 0; j < delta.cols; ++j) outer_row(delta, in, scale, grad_w, grad_b, j);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= alpha * x[i];
}

}  // namespace serial

namespace omp {

void affine(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out) {
    check_affine(in, weights, bias, out);
    const auto rows = static_cast<std::ptrdiff_t>(in.rows);
    const bool big = in.rows * weights.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t r = 0; r < rows; ++r) affine_row(in, weights, bias, out, static_cast<std::size_t>(r));
}

void backproject(const Matrix& delta, const Matrix& weights, Matrix& out) {
    check_backproject(delta, weights, out);
    const auto rows = static_cast<std::ptrdiff_t>(delta.rows);
    const bool big = delta.rows * weights.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t r = 0; r < rows; ++r) backproject_row(delta, weights, out, static_cast<std::size_t>(r));
}

void outer_accumulate(const Matrix& delta, const Matrix& in, double scale, Matrix& grad_w,
                      std::span<double> grad_b) {
    check_outer(delta, in, grad_w, grad_b);
    const auto outs = static_cast<std::ptrdiff_t>(delta.cols);
    const bool big = delta.rows * grad_w.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t j = 0; j < outs; ++j)
        outer_row(delta, in, scale, grad_w, grad_b, static_cast<std::size_t>(j));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const auto n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static) if (y.size() >= kParallelWork)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] -= alpha * x[i];
}

}  // namespace omp

int thread_count() { return omp_get_max_threads(); }

}  // namespace pdm::kernels
