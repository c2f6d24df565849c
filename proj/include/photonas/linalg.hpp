#pragma once

#include <cstddef>

#include "photonas/tensor.hpp"

namespace photonas {

// Dense matrix product. Fixed loop order, so results are reproducible on a given platform.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

struct SymEig {
  Tensor eigenvalues;   // (C), descending
  Tensor eigenvectors;  // (C, C), column k pairs with eigenvalues[k]
  bool converged = false;
  int sweeps = 0;
};

inline constexpr int kDefaultJacobiSweeps = 64;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix, carried out in double precision.
///
/// Iterates until the off-diagonal Frobenius norm drops below 1e-10 of the input norm or the
/// sweep budget runs out (reported through `converged`, not thrown). Each eigenvector is signed
/// so that its largest-magnitude component is positive.
SymEig sym_eig(const Tensor& a, int max_sweeps = kDefaultJacobiSweeps);

/// E diag(D) E^T.
Tensor reconstruct(const SymEig& eig);

namespace kernels {

// Row-major GEMM kernels shared with the conv implementation. All write (or accumulate into) c.
// c[m x n] = a[m x k] * b[k x n]
void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);
// c[m x n] = a[m x k] * b[n x k]^T
void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);
// c[m x n] = a[k x m]^T * b[k x n]
void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);

}  // namespace kernels

}  // namespace photonas
