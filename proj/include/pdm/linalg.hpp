#pragma once

#include "pdm/matrix.hpp"

namespace pdm::linalg {

struct SolveResult {
    Vector x;
    double condition = 0.0;  // 1-norm condition number estimate of A
};

/// Solves A x = b (A square) by Gaussian elimination with partial pivoting.
/// Throws DegenerateData naming the first column that has no usable pivot, or
/// when the condition estimate exceeds `max_condition`.
SolveResult solve(const Matrix& a, const Vector& b, double max_condition = 1e12);

}  // namespace pdm::linalg
