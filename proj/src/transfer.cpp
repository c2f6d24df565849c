#include "photonas/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "photonas/errors.hpp"
#include "photonas/linalg.hpp"

namespace photonas::transfer {

namespace {

Tensor as_matrix(const Tensor& features) {
  if (features.rank() == 3) return features.reshaped({features.dim(0), features.dim(1) * features.dim(2)});
  if (features.rank() == 2) return features;
  throw DimensionError("expected (C,H,W) or (C,N) features, got " + shape_string(features.shape()));
}

float clamp_eigenvalue(float d) {
  // Round-off on PSD covariances can leave tiny negatives.
  return d > 0.0f ? d : 0.0f;
}

// sum_k scale[k] * e_k e_k^T, accumulated in double.
std::vector<double> spectral_matrix(const SymEig& eig, const std::vector<double>& scale) {
  const int c = eig.eigenvalues.dim(0);
  std::vector<double> m(static_cast<std::size_t>(c) * c, 0.0);
  for (int k = 0; k < c; ++k) {
    const double s = scale[static_cast<std::size_t>(k)];
    if (s == 0.0) continue;
    for (int i = 0; i < c; ++i) {
      const double ei = s * eig.eigenvectors.at(i, k);
      for (int j = 0; j < c; ++j) m[static_cast<std::size_t>(i) * c + j] += ei * eig.eigenvectors.at(j, k);
    }
  }
  return m;
}

std::vector<double> whitening_matrix(const Tensor& covariance, float epsilon) {
  const SymEig eig = sym_eig(covariance);
  const int c = eig.eigenvalues.dim(0);
  const double d_max = clamp_eigenvalue(eig.eigenvalues[0]);
  const double tol = 1e-5 * d_max;
  std::vector<double> scale(static_cast<std::size_t>(c), 0.0);
  for (int k = 0; k < c; ++k) {
    const double reg = static_cast<double>(clamp_eigenvalue(eig.eigenvalues[static_cast<std::size_t>(k)])) + epsilon;
    if (reg > tol && reg > 0.0) scale[static_cast<std::size_t>(k)] = 1.0 / std::sqrt(reg);
  }
  return spectral_matrix(eig, scale);
}

std::vector<double> coloring_matrix(const Tensor& covariance) {
  const SymEig eig = sym_eig(covariance);
  const int c = eig.eigenvalues.dim(0);
  std::vector<double> scale(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k)
    scale[static_cast<std::size_t>(k)] = std::sqrt(static_cast<double>(clamp_eigenvalue(eig.eigenvalues[static_cast<std::size_t>(k)])));
  return spectral_matrix(eig, scale);
}

Tensor to_tensor(const std::vector<double>& m, int c) {
  Tensor t({c, c});
  for (std::size_t i = 0; i < m.size(); ++i) t[i] = static_cast<float>(m[i]);
  return t;
}

Tensor blend_with_content(const Tensor& transferred, const Tensor& content, float blend) {
  if (blend == 1.0f) return transferred.reshaped(content.shape());
  Tensor out = content;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = blend * transferred[i] + (1.0f - blend) * content[i];
  return out;
}

void check_pair(const Tensor& content, const Tensor& style) {
  if (content.rank() < 2 || style.rank() < 2) throw DimensionError("transfer expects feature maps");
  if (content.dim(0) != style.dim(0))
    throw DimensionError("transfer: content has " + std::to_string(content.dim(0)) + " channels, style has " +
                         std::to_string(style.dim(0)));
}

}  // namespace

std::string to_string(ModuleKind kind) { return kind == ModuleKind::kWct ? "wct" : "adain"; }

ModuleKind parse_module_kind(const std::string& name) {
  if (name == "wct") return ModuleKind::kWct;
  if (name == "adain") return ModuleKind::kAdaIn;
  throw InputError("unknown transfer module '" + name + "' (expected wct or adain)");
}

void TransferConfig::validate() const {
  if (!(epsilon >= 0.0f) || !std::isfinite(epsilon)) throw PreconditionError("transfer epsilon must be >= 0");
  if (!(blend >= 0.0f && blend <= 1.0f)) throw PreconditionError("transfer blend must lie in [0, 1]");
}

FeatureStats compute_stats(const Tensor& features) {
  const Tensor m = as_matrix(features);
  const int c = m.dim(0), n = m.dim(1);
  FeatureStats s;
  s.mean = Tensor({c});
  s.centered = Tensor({c, n});
  for (int i = 0; i < c; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += m.at(i, j);
    mean /= n;
    s.mean[static_cast<std::size_t>(i)] = static_cast<float>(mean);
    for (int j = 0; j < n; ++j) s.centered.at(i, j) = static_cast<float>(m.at(i, j) - mean);
  }
  s.covariance = Tensor({c, c});
  const double denom = std::max(1, n - 1);
  for (int i = 0; i < c; ++i)
    for (int j = i; j < c; ++j) {
      double acc = 0.0;
      const float* a = s.centered.raw() + static_cast<std::size_t>(i) * n;
      const float* b = s.centered.raw() + static_cast<std::size_t>(j) * n;
      for (int k = 0; k < n; ++k) acc += static_cast<double>(a[k]) * b[k];
      s.covariance.at(i, j) = s.covariance.at(j, i) = static_cast<float>(acc / denom);
    }
  return s;
}

Tensor whiten(const FeatureStats& stats, float epsilon) {
  if (stats.centered.empty() || stats.centered.rank() != 2) throw PreconditionError("whiten: empty feature statistics");
  if (epsilon < 0.0f) throw PreconditionError("whiten: epsilon must be >= 0");
  const int c = stats.covariance.dim(0);
  return matmul(to_tensor(whitening_matrix(stats.covariance, epsilon), c), stats.centered);
}

Tensor wct(const Tensor& content, const Tensor& style, const TransferConfig& config) {
  config.validate();
  check_pair(content, style);
  if (config.blend == 0.0f) return content;
  const FeatureStats cs = compute_stats(content);
  const FeatureStats ss = compute_stats(style);
  const int c = content.dim(0);

  const std::vector<double> w = whitening_matrix(cs.covariance, config.epsilon);
  const std::vector<double> k = coloring_matrix(ss.covariance);
  std::vector<double> t(static_cast<std::size_t>(c) * c, 0.0);
  for (int i = 0; i < c; ++i)
    for (int p = 0; p < c; ++p) {
      const double kip = k[static_cast<std::size_t>(i) * c + p];
      for (int j = 0; j < c; ++j) t[static_cast<std::size_t>(i) * c + j] += kip * w[static_cast<std::size_t>(p) * c + j];
    }

  Tensor out = matmul(to_tensor(t, c), cs.centered);
  const int n = out.dim(1);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) += ss.mean[static_cast<std::size_t>(i)];
  return blend_with_content(out, content, config.blend);
}

Tensor adain(const Tensor& content, const Tensor& style, const TransferConfig& config) {
  config.validate();
  check_pair(content, style);
  if (config.blend == 0.0f) return content;
  const Tensor cm = as_matrix(content);
  const Tensor sm = as_matrix(style);
  const int c = cm.dim(0);
  const auto moments = [](const Tensor& m, int row) {
    const int n = m.dim(1);
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += m.at(row, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (m.at(row, j) - mean) * (m.at(row, j) - mean);
    return std::pair{mean, var / n};
  };
  Tensor out(cm.shape());
  for (int i = 0; i < c; ++i) {
    const auto [mu_c, var_c] = moments(cm, i);
    const auto [mu_s, var_s] = moments(sm, i);
    const double gain = std::sqrt(var_s) / std::sqrt(var_c + 1e-5);
    for (int j = 0; j < cm.dim(1); ++j) out.at(i, j) = static_cast<float>(gain * (cm.at(i, j) - mu_c) + mu_s);
  }
  return blend_with_content(out, content, config.blend);
}

Tensor apply(const Tensor& content, const Tensor& style, const TransferConfig& config) {
  return config.kind == ModuleKind::kWct ? wct(content, style, config) : adain(content, style, config);
}

}  // namespace photonas::transfer
