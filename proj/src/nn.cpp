#include "photonas/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "photonas/errors.hpp"
#include "photonas/linalg.hpp"

namespace photonas::nn {

namespace {

void require_map(const Tensor& x, const char* op) {
  if (x.rank() != 3)
    throw DimensionError(std::string(op) + " expects a (C,H,W) feature map, got " + shape_string(x.shape()));
}

inline int reflect(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

// cols[(c*9 + ky*3 + kx), y*W + x] = x[c, reflect(y+ky-1), reflect(x+kx-1)]
std::vector<float> im2col(const Tensor& x) {
  const int c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<float> cols(static_cast<std::size_t>(c_in) * 9 * hw);
  for (int c = 0; c < c_in; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        float* row = cols.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = reflect(y + ky - 1, h);
          const float* src = x.raw() + (static_cast<std::size_t>(c) * h + sy) * w;
          float* dst = row + static_cast<std::size_t>(y) * w;
          for (int xx = 0; xx < w; ++xx) dst[xx] = src[reflect(xx + kx - 1, w)];
        }
      }
  return cols;
}

void col2im_add(const std::vector<float>& cols, Tensor& grad_x) {
  const int c_in = grad_x.dim(0), h = grad_x.dim(1), w = grad_x.dim(2);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < c_in; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const float* row = cols.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int sy = reflect(y + ky - 1, h);
          float* dst = grad_x.raw() + (static_cast<std::size_t>(c) * h + sy) * w;
          const float* src = row + static_cast<std::size_t>(y) * w;
          for (int xx = 0; xx < w; ++xx) dst[reflect(xx + kx - 1, w)] += src[xx];
        }
      }
}

void check_conv(const ConvLayer& layer, const Tensor& x) {
  require_map(x, "conv");
  if (layer.weight.rank() != 4 || layer.weight.dim(2) != 3 || layer.weight.dim(3) != 3)
    throw DimensionError("conv weight must be (C_out,C_in,3,3), got " + shape_string(layer.weight.shape()));
  if (layer.bias.rank() != 1 || layer.bias.dim(0) != layer.weight.dim(0))
    throw DimensionError("conv bias length must equal C_out");
  if (x.dim(0) != layer.weight.dim(1))
    throw DimensionError("conv expects " + std::to_string(layer.weight.dim(1)) + " input channels, got " +
                         std::to_string(x.dim(0)));
}

}  // namespace

ConvLayer make_conv(int in_channels, int out_channels) {
  return ConvLayer{Tensor({out_channels, in_channels, 3, 3}), Tensor({out_channels})};
}

Tensor conv_forward(const ConvLayer& layer, const Tensor& x) {
  check_conv(layer, x);
  const int c_out = layer.out_channels(), h = x.dim(1), w = x.dim(2);
  const int hw = h * w;
  const int k = layer.in_channels() * 9;
  const std::vector<float> cols = im2col(x);
  Tensor out({c_out, h, w});
  for (int o = 0; o < c_out; ++o) {
    float* row = out.raw() + static_cast<std::size_t>(o) * hw;
    std::fill(row, row + hw, layer.bias[static_cast<std::size_t>(o)]);
  }
  kernels::gemm_nn(c_out, hw, k, layer.weight.raw(), cols.data(), out.raw(), true);
  return out;
}

ConvGrads conv_backward(const ConvLayer& layer, const Tensor& x, const Tensor& grad_out, bool want_grad_x) {
  check_conv(layer, x);
  const int c_out = layer.out_channels(), h = x.dim(1), w = x.dim(2);
  if (grad_out.shape() != Shape{c_out, h, w})
    throw DimensionError("conv_backward: grad_out shape " + shape_string(grad_out.shape()) +
                         " does not match output " + shape_string({c_out, h, w}));
  const int hw = h * w;
  const int k = layer.in_channels() * 9;
  const std::vector<float> cols = im2col(x);

  ConvGrads g;
  g.grad_w = Tensor(layer.weight.shape());
  kernels::gemm_nt(c_out, k, hw, grad_out.raw(), cols.data(), g.grad_w.raw(), false);
  g.grad_b = Tensor({c_out});
  for (int o = 0; o < c_out; ++o) {
    const float* row = grad_out.raw() + static_cast<std::size_t>(o) * hw;
    double s = 0.0;
    for (int i = 0; i < hw; ++i) s += row[i];
    g.grad_b[static_cast<std::size_t>(o)] = static_cast<float>(s);
  }
  if (want_grad_x) {
    std::vector<float> grad_cols(static_cast<std::size_t>(k) * hw);
    kernels::gemm_tn(k, hw, c_out, layer.weight.raw(), grad_out.raw(), grad_cols.data(), false);
    g.grad_x = Tensor(x.shape());
    col2im_add(grad_cols, g.grad_x);
  }
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (float& v : y.data()) v = v > 0.0f ? v : 0.0f;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  require_same_shape(x, grad_out, "relu_backward");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(x[i] > 0.0f)) g[i] = 0.0f;
  return g;
}

PoolRecord maxpool2(const Tensor& x) {
  require_map(x, "maxpool2");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw DimensionError("maxpool2 needs even spatial dims, got " + shape_string(x.shape()));
  PoolRecord rec;
  rec.input_shape = x.shape();
  rec.pooled = Tensor({c, h / 2, w / 2});
  rec.argmax.resize(rec.pooled.size());
  std::size_t out = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h / 2; ++y)
      for (int xx = 0; xx < w / 2; ++xx, ++out) {
        int best = (ch * h + 2 * y) * w + 2 * xx;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int i = (ch * h + 2 * y + dy) * w + 2 * xx + dx;
            if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(best)]) best = i;
          }
        rec.pooled[out] = x[static_cast<std::size_t>(best)];
        rec.argmax[out] = best;
      }
  return rec;
}

Tensor unpool(const PoolRecord& record) { return unpool(record, record.pooled); }

Tensor unpool(const PoolRecord& record, const Tensor& values) {
  require_same_shape(record.pooled, values, "unpool");
  Tensor out(record.input_shape);
  for (std::size_t i = 0; i < values.size(); ++i) out[static_cast<std::size_t>(record.argmax[i])] += values[i];
  return out;
}

Tensor upsample_nearest(const Tensor& x) {
  require_map(x, "upsample_nearest");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, 2 * h, 2 * w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < 2 * h; ++y)
      for (int xx = 0; xx < 2 * w; ++xx) out.at(ch, y, xx) = x.at(ch, y / 2, xx / 2);
  return out;
}

Tensor upsample_nearest_backward(const Tensor& grad_out) {
  require_map(grad_out, "upsample_nearest_backward");
  const int c = grad_out.dim(0), h = grad_out.dim(1), w = grad_out.dim(2);
  if (h % 2 != 0 || w % 2 != 0) throw DimensionError("upsample_nearest_backward needs even dims");
  Tensor g({c, h / 2, w / 2});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) g.at(ch, y / 2, xx / 2) += grad_out.at(ch, y, xx);
  return g;
}

Tensor instance_norm(const Tensor& x) {
  require_map(x, "instance_norm");
  const int c = x.dim(0);
  const std::size_t hw = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  Tensor y(x.shape());
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.raw() + ch * hw;
    float* dst = y.raw() + ch * hw;
    double mean = 0.0;
    for (std::size_t i = 0; i < hw; ++i) mean += src[i];
    mean /= static_cast<double>(hw);
    double var = 0.0;
    for (std::size_t i = 0; i < hw; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(hw);
    const double inv = 1.0 / std::sqrt(var + kInstanceNormEps);
    for (std::size_t i = 0; i < hw; ++i) dst[i] = static_cast<float>((src[i] - mean) * inv);
  }
  return y;
}

Tensor instance_norm_backward(const Tensor& x, const Tensor& grad_out) {
  require_map(x, "instance_norm_backward");
  require_same_shape(x, grad_out, "instance_norm_backward");
  const int c = x.dim(0);
  const std::size_t hw = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  Tensor g(x.shape());
  std::vector<double> yhat(hw);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.raw() + ch * hw;
    const float* go = grad_out.raw() + ch * hw;
    double mean = 0.0;
    for (std::size_t i = 0; i < hw; ++i) mean += src[i];
    mean /= static_cast<double>(hw);
    double var = 0.0;
    for (std::size_t i = 0; i < hw; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(hw);
    const double inv = 1.0 / std::sqrt(var + kInstanceNormEps);
    double mean_g = 0.0, mean_gy = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      yhat[i] = (src[i] - mean) * inv;
      mean_g += go[i];
      mean_gy += go[i] * yhat[i];
    }
    mean_g /= static_cast<double>(hw);
    mean_gy /= static_cast<double>(hw);
    float* dst = g.raw() + ch * hw;
    for (std::size_t i = 0; i < hw; ++i) dst[i] = static_cast<float>(inv * (go[i] - mean_g - yhat[i] * mean_gy));
  }
  return g;
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw DimensionError("concat_channels: no operands");
  int channels = 0;
  for (const Tensor& x : xs) {
    require_map(x, "concat_channels");
    if (x.dim(1) != xs[0].dim(1) || x.dim(2) != xs[0].dim(2))
      throw DimensionError("concat_channels: spatial mismatch " + shape_string(x.shape()) + " vs " +
                           shape_string(xs[0].shape()));
    channels += x.dim(0);
  }
  Tensor out({channels, xs[0].dim(1), xs[0].dim(2)});
  float* dst = out.raw();
  for (const Tensor& x : xs) dst = std::copy(x.raw(), x.raw() + x.size(), dst);
  return out;
}

std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& channels) {
  require_map(x, "split_channels");
  int total = 0;
  for (int c : channels) total += c;
  if (total != x.dim(0)) throw DimensionError("split_channels: channel counts do not sum to " + std::to_string(x.dim(0)));
  std::vector<Tensor> parts;
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  const float* src = x.raw();
  for (int c : channels) {
    Tensor part({c, x.dim(1), x.dim(2)});
    std::copy(src, src + c * plane, part.raw());
    src += c * plane;
    parts.push_back(std::move(part));
  }
  return parts;
}

Tensor sum_maps(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw DimensionError("sum_maps: no operands");
  Tensor out = xs[0];
  require_map(out, "sum_maps");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i].rank() != 3 || xs[i].dim(1) != out.dim(1) || xs[i].dim(2) != out.dim(2))
      throw DimensionError("sum_maps: spatial mismatch " + shape_string(xs[i].shape()) + " vs " +
                           shape_string(out.shape()));
    if (xs[i].dim(0) != out.dim(0)) throw DimensionError("sum_maps: channel counts differ");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += xs[i][j];
  }
  return out;
}

Tensor resize_nearest(const Tensor& x, int target_h, int target_w) {
  require_map(x, "resize_nearest");
  if (target_h < 1 || target_w < 1) throw DimensionError("resize_nearest: target dims must be >= 1");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, target_h, target_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < target_h; ++y) {
      const int sy = static_cast<int>(static_cast<long long>(y) * h / target_h);
      for (int xx = 0; xx < target_w; ++xx)
        out.at(ch, y, xx) = x.at(ch, sy, static_cast<int>(static_cast<long long>(xx) * w / target_w));
    }
  return out;
}

Tensor resize_nearest_backward(const Tensor& grad_out, int source_h, int source_w) {
  require_map(grad_out, "resize_nearest_backward");
  const int c = grad_out.dim(0), th = grad_out.dim(1), tw = grad_out.dim(2);
  Tensor g({c, source_h, source_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < th; ++y) {
      const int sy = static_cast<int>(static_cast<long long>(y) * source_h / th);
      for (int xx = 0; xx < tw; ++xx)
        g.at(ch, sy, static_cast<int>(static_cast<long long>(xx) * source_w / tw)) += grad_out.at(ch, y, xx);
    }
  return g;
}

}  // namespace photonas::nn
