#pragma once

#include <string>

#include "photonas/tensor.hpp"

namespace photonas::transfer {

struct FeatureStats {
  Tensor mean;        // (C)
  Tensor centered;    // (C, N), N = H*W
  Tensor covariance;  // (C, C), denominator max(1, N-1)
};

/// Accepts a (C,H,W) feature map or a (C,N) matrix.
FeatureStats compute_stats(const Tensor& features);

enum class ModuleKind { kWct, kAdaIn };

std::string to_string(ModuleKind kind);
ModuleKind parse_module_kind(const std::string& name);

struct TransferConfig {
  float epsilon = 0.3f;
  float blend = 1.0f;  // 1 = fully transferred, 0 = content untouched
  ModuleKind kind = ModuleKind::kWct;

  void validate() const;
};

/// E_c (D_c + eps)^(-1/2) E_c^T f_c, as a (C, N) matrix.
///
/// Eigen-directions whose regularized eigenvalue is negligible (below 1e-5 of the largest
/// eigenvalue, and not lifted by eps) are dropped rather than inverted, so constant or
/// rank-deficient content whitens to zero instead of overflowing.
Tensor whiten(const FeatureStats& stats, float epsilon);

/// Whitening-coloring transform. Output keeps the content's spatial shape; the style map may
/// have a different spatial extent. Style eigenvalues are clamped at zero and carry no epsilon.
Tensor wct(const Tensor& content, const Tensor& style, const TransferConfig& config);

/// Per-channel mean/std alignment, blended like wct.
Tensor adain(const Tensor& content, const Tensor& style, const TransferConfig& config);

/// Dispatches on config.kind.
Tensor apply(const Tensor& content, const Tensor& style, const TransferConfig& config);

}  // namespace photonas::transfer
