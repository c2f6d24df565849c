#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "photonas/graph.hpp"
#include "photonas/tensor.hpp"

namespace photonas {

struct TrainConfig {
  int steps = 300;
  int batch = 4;
  float learning_rate = 1e-3f;
  std::uint64_t seed = 0;
  int image_size = 64;
  float adam_beta1 = 0.9f;
  float adam_beta2 = 0.999f;
  float adam_eps = 1e-8f;

  void validate() const;
};

/// Images in [0,1], (3,H,W), H and W multiples of 16.
struct Corpus {
  std::vector<Tensor> images;

  std::size_t size() const { return images.size(); }
};

/// Seeded synthetic photos: gradients, checkerboards, smoothed noise and composited shapes.
Corpus procedural_corpus(int count, int size, std::uint64_t seed);
/// Every .ppm file of a directory, sorted by name.
Corpus directory_corpus(const std::string& path);

struct TrainResult {
  NetworkGraph graph;
  std::vector<float> loss_trace;  // batch loss before each update
};

/// Reconstruction training of the decoder with every transfer site disabled; the encoder
/// stays fixed. Loss is per-pixel MSE averaged over the batch. Throws DivergedError on a
/// non-finite loss.
TrainResult train_decoder(const NetworkGraph& graph, const Corpus& corpus, const TrainConfig& config);

/// Per-pixel MSE of the unclamped reconstruction of one image.
double reconstruction_loss(const NetworkGraph& graph, const Tensor& image);

/// 10 log10(1 / MSE) over values clamped to [0,1], capped at 99 dB.
double psnr(const Tensor& a, const Tensor& b);
inline constexpr double kPsnrCap = 99.0;

/// Mean PSNR of clamped reconstructions (transfers disabled).
double reconstruction_psnr(const NetworkGraph& graph, const Corpus& corpus);

}  // namespace photonas
