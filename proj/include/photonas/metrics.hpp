#pragma once

#include <optional>
#include <string>
#include <vector>

#include "photonas/arch_code.hpp"
#include "photonas/graph.hpp"
#include "photonas/tensor.hpp"

namespace photonas::metrics {

struct ObjectiveWeights {
  double alpha = 0.8;
  double beta = 0.1;
  double gamma = 0.1;

  // Non-negative and summing to 1 within 1e-9.
  void validate() const;
};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// 0.299 R + 0.587 G + 0.114 B as an (H, W) map.
Tensor luma(const Tensor& image);

/// Normalized 11-tap Gaussian, sigma 1.5.
std::vector<double> gaussian_window();

/// SSIM of two (H, W) maps with dynamic range 1, averaged over valid window positions.
/// Maps smaller than the window raise DimensionError.
double ssim_map_mean(const Tensor& a, const Tensor& b);

/// Luma SSIM of two RGB images ("SSIM-Whole").
double ssim(const Tensor& a, const Tensor& b);

/// 3x3 Sobel gradient magnitude of the luma, divided by its maximum (all zeros if flat).
Tensor edge_map(const Tensor& image);

/// SSIM between edge maps ("SSIM-Edge").
double ssim_edge(const Tensor& a, const Tensor& b);

/// F F^T / (C H W) of a (C, H, W) feature map, in double precision, returned as (C, C).
std::vector<double> gram_matrix(const Tensor& features);

/// Sum over the five encoder taps of the squared Frobenius distance between Gram matrices.
double gram_loss(const Tensor& result, const Tensor& style, const Encoder& encoder);

/// ||a - b||_F / sqrt(numel): the per-image term of E.
double rms_distance(const Tensor& a, const Tensor& b);

/// Sum over taps of ||Phi_k(a) - Phi_k(b)||_F / sqrt(numel_k): the per-image term of P.
double perceptual_distance(const EncoderFeatures& a, const EncoderFeatures& b);

struct EvalReport {
  double recon_error = 0;   // E
  double perceptual = 0;    // P
  double op_fraction = 0;   // O
  double loss = 0;          // L = alpha E + beta P + gamma O
  ObjectiveWeights weights;

  // Filled when content and style images are supplied.
  std::optional<double> ssim_whole;
  std::optional<double> ssim_edge;
  std::optional<double> gram;

  /// alpha E + beta P + gamma O recomputed from the stored fields.
  double recomposed_loss() const;
  /// Line-oriented key=value text.
  std::string to_key_values() const;
};

/// E, P, O and L of candidate outputs against oracle outputs (equal length, >= 1).
EvalReport objective(const std::vector<Tensor>& candidate_outputs, const std::vector<Tensor>& oracle_outputs,
                     const ArchCode& code, const ObjectiveWeights& weights, const Encoder& encoder);

/// Same, with the oracle outputs' encoder features precomputed.
EvalReport objective(const std::vector<Tensor>& candidate_outputs, const std::vector<Tensor>& oracle_outputs,
                     const std::vector<EncoderFeatures>& oracle_features, const ArchCode& code,
                     const ObjectiveWeights& weights, const Encoder& encoder);

/// Mean SSIM-Whole (vs content), SSIM-Edge (vs content) and Gram loss (vs style) over the
/// pairs, stored into `report`.
void add_image_metrics(EvalReport& report, const std::vector<Tensor>& results, const std::vector<Tensor>& contents,
                       const std::vector<Tensor>& styles, const Encoder& encoder);

}  // namespace photonas::metrics
