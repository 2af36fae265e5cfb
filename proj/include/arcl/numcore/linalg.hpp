#pragma once

#include <vector>

#include "arcl/numcore/tensor.hpp"

namespace arcl::linalg {

/// C = A * B.
Tensor matmul(const Tensor& a, const Tensor& b);
/// C = A^T * B.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// C = A * B^T.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor identity(std::size_t n);

/// Solves S X = B for symmetric positive definite S (Cholesky).
/// Returns false if S is not numerically positive definite.
bool cholesky_solve(const Tensor& s, const Tensor& b, Tensor& x);

/// Eigenvalues of a symmetric matrix in descending order (cyclic Jacobi).
std::vector<double> symmetric_eigenvalues(const Tensor& s);

/// Singular values of an arbitrary matrix in descending order.
std::vector<double> singular_values(const Tensor& a);

/// Largest singular value (operator 2-norm).
double spectral_norm(const Tensor& a);

double frobenius_norm(const Tensor& a);

}  // namespace arcl::linalg
