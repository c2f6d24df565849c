#pragma once

// Independent reference implementations used to derive and freeze expected values.

#include <cmath>
#include <functional>
#include <vector>

#include "photonas/graph.hpp"
#include "photonas/nn.hpp"
#include "photonas/random.hpp"
#include "photonas/tensor.hpp"

namespace oracle {

using photonas::Tensor;

inline Tensor random_tensor(const photonas::Shape& shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  photonas::Rng rng(seed);
  return photonas::uniform_tensor(shape, lo, hi, rng);
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      for (int t = 0; t < k; ++t) acc += static_cast<double>(a.at(i, t)) * b.at(t, j);
      c.at(i, j) = static_cast<float>(acc);
    }
  return c;
}

// Mirror padding; a 1-pixel dim has nothing to mirror and repeats its only cell.
inline int reflect(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

// Direct 6-loop 3x3 convolution with reflection padding, accumulated and returned in double.
inline std::vector<double> naive_conv_double(const photonas::nn::ConvLayer& layer, const Tensor& x) {
  const int co = layer.weight.dim(0), ci = layer.weight.dim(1), h = x.dim(1), w = x.dim(2);
  std::vector<double> y(static_cast<std::size_t>(co) * h * w);
  for (int o = 0; o < co; ++o)
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        double acc = layer.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < ci; ++i)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const float wv = layer.weight[((static_cast<std::size_t>(o) * ci + i) * 3 + ky) * 3 + kx];
              acc += static_cast<double>(wv) * x.at(i, reflect(r + ky - 1, h), reflect(c + kx - 1, w));
            }
        y[(static_cast<std::size_t>(o) * h + r) * w + c] = acc;
      }
  return y;
}

inline Tensor naive_conv(const photonas::nn::ConvLayer& layer, const Tensor& x) {
  const std::vector<double> y = naive_conv_double(layer, x);
  Tensor out({layer.weight.dim(0), x.dim(1), x.dim(2)});
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<float>(y[i]);
  return out;
}

inline double dot(const Tensor& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Central difference of a scalar function at element i of `x`.
inline double central_difference(const std::function<double(const Tensor&)>& f, const Tensor& x, std::size_t i,
                                 double step = 1e-3) {
  Tensor plus = x, minus = x;
  plus[i] += static_cast<float>(step);
  minus[i] -= static_cast<float>(step);
  const double dp = static_cast<double>(plus[i]) - x[i];
  const double dm = static_cast<double>(x[i]) - minus[i];
  return (f(plus) - f(minus)) / (dp + dm);
}

// Relative error with an absolute floor so near-zero gradients compare sensibly.
inline double rel_err(double analytic, double numeric, double floor = 1e-2) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// <grad_out, y>: a scalar whose gradient w.r.t. y is grad_out.
inline double dot(const Tensor& a, const Tensor& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

// SSIM by a direct 2D window loop over every valid position, luma of RGB inputs.
inline double direct_ssim(const Tensor& a, const Tensor& b) {
  const int h = a.dim(1), w = a.dim(2);
  const auto lum = [](const Tensor& t, int y, int x) {
    return static_cast<double>(0.299f * t.at(0, y, x) + 0.587f * t.at(1, y, x) + 0.114f * t.at(2, y, x));
  };
  double g[11][11], gsum = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      gsum += g[i][j];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  int count = 0;
  for (int y = 0; y + 11 <= h; ++y)
    for (int x = 0; x + 11 <= w; ++x) {
      double ma = 0, mb = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double wt = g[i][j] / gsum;
          ma += wt * lum(a, y + i, x + j);
          mb += wt * lum(b, y + i, x + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double wt = g[i][j] / gsum;
          const double da = lum(a, y + i, x + j) - ma, db = lum(b, y + i, x + j) - mb;
          va += wt * da * da;
          vb += wt * db * db;
          cov += wt * da * db;
        }
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return total / count;
}

// Gram loss recomputed stage by stage with plain loops.
inline double naive_gram_loss(const photonas::EncoderFeatures& fa, const photonas::EncoderFeatures& fb) {
  double total = 0;
  for (std::size_t k = 0; k < fa.taps.size(); ++k) {
    const Tensor& a = fa.taps[k];
    const Tensor& b = fb.taps[k];
    const int c = a.dim(0);
    const int na = a.dim(1) * a.dim(2), nb = b.dim(1) * b.dim(2);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < c; ++j) {
        double ga = 0, gb = 0;
        for (int p = 0; p < na; ++p) ga += static_cast<double>(a[static_cast<std::size_t>(i) * na + p]) * a[static_cast<std::size_t>(j) * na + p];
        for (int p = 0; p < nb; ++p) gb += static_cast<double>(b[static_cast<std::size_t>(i) * nb + p]) * b[static_cast<std::size_t>(j) * nb + p];
        const double d = ga / (static_cast<double>(c) * na) - gb / (static_cast<double>(c) * nb);
        total += d * d;
      }
  }
  return total;
}

// Sample covariance (denominator n-1) and mean of a (C, N) matrix, in double.
struct Moments {
  std::vector<double> mean;
  std::vector<double> cov;  // C x C
};

inline Moments moments(const Tensor& f) {
  const int c = f.dim(0);
  const std::size_t n = f.size() / static_cast<std::size_t>(c);
  Moments m{std::vector<double>(static_cast<std::size_t>(c)), std::vector<double>(static_cast<std::size_t>(c) * c)};
  for (int i = 0; i < c; ++i) {
    double s = 0;
    for (std::size_t p = 0; p < n; ++p) s += f[static_cast<std::size_t>(i) * n + p];
    m.mean[static_cast<std::size_t>(i)] = s / static_cast<double>(n);
  }
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < n; ++p)
        s += (f[static_cast<std::size_t>(i) * n + p] - m.mean[static_cast<std::size_t>(i)]) *
             (f[static_cast<std::size_t>(j) * n + p] - m.mean[static_cast<std::size_t>(j)]);
      m.cov[static_cast<std::size_t>(i) * c + j] = s / static_cast<double>(n > 1 ? n - 1 : 1);
    }
  return m;
}

}  // namespace oracle
