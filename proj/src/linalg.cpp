#include "photonas/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "photonas/errors.hpp"

namespace photonas {

namespace kernels {

void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0f);
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * n;
    const float* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * k;
      // Eight interleaved partial sums let the compiler vectorize without reassociating.
      float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
      int p = 0;
      for (; p + 8 <= k; p += 8)
        for (int l = 0; l < 8; ++l) acc[l] += arow[p + l] * brow[p + l];
      float s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
      for (; p < k; ++p) s += arow[p] * brow[p];
      float& out = c[static_cast<std::size_t>(i) * n + j];
      out = accumulate ? out + s : s;
    }
  }
}

void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0f);
  for (int p = 0; p < k; ++p) {
    const float* arow = a + static_cast<std::size_t>(p) * m;
    const float* brow = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const float av = arow[i];
      if (av == 0.0f) continue;
      float* crow = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace kernels

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw DimensionError("matmul expects matrices, got " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  if (a.dim(1) != b.dim(0))
    throw DimensionError("matmul inner dimensions differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  Tensor c({a.dim(0), b.dim(1)});
  kernels::gemm_nn(a.dim(0), b.dim(1), a.dim(1), a.raw(), b.raw(), c.raw(), false);
  return c;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose expects a matrix, got " + shape_string(a.shape()));
  Tensor t({a.dim(1), a.dim(0)});
  for (int i = 0; i < a.dim(0); ++i)
    for (int j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

SymEig sym_eig(const Tensor& input, int max_sweeps) {
  if (input.rank() != 2 || input.dim(0) != input.dim(1))
    throw DimensionError("sym_eig expects a square matrix, got " + shape_string(input.shape()));
  if (max_sweeps < 1) throw PreconditionError("sym_eig: max_sweeps must be >= 1");
  const int n = input.dim(0);
  const float scale = std::max(1.0f, max_abs(input));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(input.at(i, j) - input.at(j, i)) > 1e-6f * scale)
        throw PreconditionError("sym_eig: matrix is not symmetric at (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");

  const auto idx = [n](int r, int c) { return static_cast<std::size_t>(r) * n + c; };
  std::vector<double> a(static_cast<std::size_t>(n) * n);
  std::vector<double> v(a.size(), 0.0);
  double norm2 = 0.0;
  for (int i = 0; i < n; ++i) {
    v[idx(i, i)] = 1.0;
    for (int j = 0; j < n; ++j) {
      // Symmetrize so the rotations act on an exactly symmetric matrix.
      a[idx(i, j)] = 0.5 * (static_cast<double>(input.at(i, j)) + input.at(j, i));
      norm2 += a[idx(i, j)] * a[idx(i, j)];
    }
  }
  const double tol = 1e-10 * std::sqrt(norm2);

  SymEig result;
  const auto off_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += a[idx(i, j)] * a[idx(i, j)];
    return std::sqrt(s);
  };

  double off = off_norm();
  while (!(off <= tol) && result.sweeps < max_sweeps) {
    ++result.sweeps;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[idx(p, q)];
        if (apq == 0.0) continue;
        const double theta = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[idx(k, p)], akq = a[idx(k, q)];
          a[idx(k, p)] = c * akp - s * akq;
          a[idx(k, q)] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[idx(p, k)], aqk = a[idx(q, k)];
          a[idx(p, k)] = c * apk - s * aqk;
          a[idx(q, k)] = s * apk + c * aqk;
        }
        a[idx(p, q)] = a[idx(q, p)] = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v[idx(k, p)], vkq = v[idx(k, q)];
          v[idx(k, p)] = c * vkp - s * vkq;
          v[idx(k, q)] = s * vkp + c * vkq;
        }
      }
    }
    off = off_norm();
  }
  result.converged = off <= tol;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return a[idx(x, x)] > a[idx(y, y)]; });

  result.eigenvalues = Tensor({n});
  result.eigenvectors = Tensor({n, n});
  for (int k = 0; k < n; ++k) {
    const int src = order[static_cast<std::size_t>(k)];
    result.eigenvalues[static_cast<std::size_t>(k)] = static_cast<float>(a[idx(src, src)]);
    int pivot = 0;
    for (int r = 1; r < n; ++r)
      if (std::fabs(v[idx(r, src)]) > std::fabs(v[idx(pivot, src)])) pivot = r;
    const double sign = v[idx(pivot, src)] < 0 ? -1.0 : 1.0;
    for (int r = 0; r < n; ++r) result.eigenvectors.at(r, k) = static_cast<float>(sign * v[idx(r, src)]);
  }
  return result;
}

Tensor reconstruct(const SymEig& eig) {
  const int n = eig.eigenvalues.dim(0);
  Tensor out({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += static_cast<double>(eig.eigenvectors.at(i, k)) * eig.eigenvalues[static_cast<std::size_t>(k)] *
             eig.eigenvectors.at(j, k);
      out.at(i, j) = static_cast<float>(s);
    }
  return out;
}

}  // namespace photonas
