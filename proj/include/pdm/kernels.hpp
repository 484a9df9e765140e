#pragma once

// Batched dense-layer kernels. Every routine comes in two flavours:
//   serial::  plain loops, kept as the reference for tests and benchmarks
//   omp::     OpenMP-parallel over independent output rows
// Both produce bitwise-identical results: the parallel versions never split a
// reduction across threads, so summation order is the same as the serial one.

#include <span>

#include "pdm/matrix.hpp"

namespace pdm::kernels {

namespace serial {

/// out = in * W^T + b   (in: batch x n_in, W: n_out x n_in, out: batch x n_out)
void affine(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out);

/// out = delta * W      (delta: batch x n_out, out: batch x n_in)
void backproject(const Matrix& delta, const Matrix& weights, Matrix& out);

/// grad_w = scale * delta^T * in,  grad_b = scale * column sums of delta
void outer_accumulate(const Matrix& delta, const Matrix& in, double scale, Matrix& grad_w,
                      std::span<double> grad_b);

/// y -= alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace serial

namespace omp {

void affine(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out);
void backproject(const Matrix& delta, const Matrix& weights, Matrix& out);
void outer_accumulate(const Matrix& delta, const Matrix& in, double scale, Matrix& grad_w,
                      std::span<double> grad_b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace omp

// Default entry points used by the rest of the library.
using omp::affine;
using omp::axpy;
using omp::backproject;
using omp::outer_accumulate;

/// Number of threads OpenMP would use for a parallel region.
int thread_count();

}  // namespace pdm::kernels
