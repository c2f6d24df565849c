#pragma once

#include <vector>

#include "photonas/tensor.hpp"

// CNN op set over (C, H, W) feature maps. Every differentiable op has a matching *_backward.
namespace photonas::nn {

/// 3x3, stride 1, reflection padding 1.
struct ConvLayer {
  Tensor weight;  // (C_out, C_in, 3, 3)
  Tensor bias;    // (C_out)

  int in_channels() const { return weight.dim(1); }
  int out_channels() const { return weight.dim(0); }
};

ConvLayer make_conv(int in_channels, int out_channels);

struct ConvGrads {
  Tensor grad_x;  // empty when not requested
  Tensor grad_w;
  Tensor grad_b;
};

Tensor conv_forward(const ConvLayer& layer, const Tensor& x);
ConvGrads conv_backward(const ConvLayer& layer, const Tensor& x, const Tensor& grad_out,
                        bool want_grad_x = true);

Tensor relu(const Tensor& x);
// Gradient at exactly zero is zero.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

struct PoolRecord {
  Tensor pooled;             // (C, H/2, W/2)
  std::vector<int> argmax;   // flat index into the input, one per pooled cell
  Shape input_shape;
};

// 2x2 stride-2 max pooling; ties resolve to the smallest flat index.
PoolRecord maxpool2(const Tensor& x);
// Scatters the record's pooled values back to their argmax cells, zeros elsewhere.
Tensor unpool(const PoolRecord& record);
// Scatters `values` (shaped like record.pooled) instead; this is also maxpool2's backward.
Tensor unpool(const PoolRecord& record, const Tensor& values);

Tensor upsample_nearest(const Tensor& x);
Tensor upsample_nearest_backward(const Tensor& grad_out);

inline constexpr float kInstanceNormEps = 1e-5f;

// Parameter-free, per channel over the spatial extent, population variance.
Tensor instance_norm(const Tensor& x);
Tensor instance_norm_backward(const Tensor& x, const Tensor& grad_out);

Tensor concat_channels(const std::vector<Tensor>& xs);
std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& channels);
Tensor sum_maps(const std::vector<Tensor>& xs);

// Source index floor(i * H / target_h).
Tensor resize_nearest(const Tensor& x, int target_h, int target_w);
Tensor resize_nearest_backward(const Tensor& grad_out, int source_h, int source_w);

}  // namespace photonas::nn
