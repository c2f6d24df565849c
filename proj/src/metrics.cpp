#include "photonas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "photonas/errors.hpp"

namespace photonas::metrics {

void ObjectiveWeights::validate() const {
  if (!(alpha >= 0 && beta >= 0 && gamma >= 0))
    throw PreconditionError("objective weights must be non-negative");
  if (std::abs(alpha + beta + gamma - 1.0) > 1e-9) throw PreconditionError("objective weights must sum to 1");
}

namespace {

void require_rgb_pair(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rank() != 3 || a.dim(0) != 3) throw DimensionError(std::string(op) + " expects (3,H,W) images");
  require_same_shape(a, b, op);
}

// Separable "valid" Gaussian filtering of a row-major h x w map.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& win) {
  const int k = static_cast<int>(win.size());
  const int oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int t = 0; t < k; ++t) acc += win[static_cast<std::size_t>(t)] * src[static_cast<std::size_t>(y) * w + x + t];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int t = 0; t < k; ++t) acc += win[static_cast<std::size_t>(t)] * rows[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

Tensor luma(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) throw DimensionError("luma expects a (3,H,W) image");
  const int h = image.dim(1), w = image.dim(2);
  Tensor out({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(y, x) = 0.299f * image.at(0, y, x) + 0.587f * image.at(1, y, x) + 0.114f * image.at(2, y, x);
  return out;
}

std::vector<double> gaussian_window() {
  std::vector<double> win(kSsimWindow);
  double sum = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    win[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    sum += win[static_cast<std::size_t>(i)];
  }
  for (double& v : win) v /= sum;
  return win;
}

double ssim_map_mean(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2) throw DimensionError("ssim_map_mean expects (H,W) maps");
  require_same_shape(a, b, "ssim");
  const int h = a.dim(0), w = a.dim(1);
  if (h < kSsimWindow || w < kSsimWindow)
    throw DimensionError("ssim needs maps of at least " + std::to_string(kSsimWindow) + "x" +
                         std::to_string(kSsimWindow) + ", got " + shape_string(a.shape()));
  const std::size_t n = a.size();
  std::vector<double> va(n), vb(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    va[i] = a[i];
    vb[i] = b[i];
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto win = gaussian_window();
  const auto mu_a = filter_valid(va, h, w, win);
  const auto mu_b = filter_valid(vb, h, w, win);
  const auto e_aa = filter_valid(aa, h, w, win);
  const auto e_bb = filter_valid(bb, h, w, win);
  const auto e_ab = filter_valid(ab, h, w, win);
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  double total = 0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    total += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim(const Tensor& a, const Tensor& b) {
  require_rgb_pair(a, b, "ssim");
  return ssim_map_mean(luma(a), luma(b));
}

Tensor edge_map(const Tensor& image) {
  const Tensor y = luma(image);
  const int h = y.dim(0), w = y.dim(1);
  const auto px = [&](int r, int c) {
    return static_cast<double>(y.at(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1)));
  };
  std::vector<double> mag(static_cast<std::size_t>(h) * w);
  double peak = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double gx = (px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2 * px(r, c - 1) + px(r + 1, c - 1));
      const double gy = (px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2 * px(r - 1, c) + px(r - 1, c + 1));
      const double m = std::sqrt(gx * gx + gy * gy);
      mag[static_cast<std::size_t>(r) * w + c] = m;
      peak = std::max(peak, m);
    }
  Tensor out({h, w});
  if (peak > 0)
    for (std::size_t i = 0; i < mag.size(); ++i) out[i] = static_cast<float>(mag[i] / peak);
  return out;
}

double ssim_edge(const Tensor& a, const Tensor& b) {
  require_rgb_pair(a, b, "ssim_edge");
  return ssim_map_mean(edge_map(a), edge_map(b));
}

std::vector<double> gram_matrix(const Tensor& features) {
  if (features.rank() != 3) throw DimensionError("gram_matrix expects a (C,H,W) map");
  const int c = features.dim(0);
  const std::size_t n = static_cast<std::size_t>(features.dim(1)) * features.dim(2);
  const double scale = 1.0 / (static_cast<double>(c) * static_cast<double>(n));
  std::vector<double> g(static_cast<std::size_t>(c) * c);
  const float* f = features.raw();
  for (int i = 0; i < c; ++i)
    for (int j = i; j < c; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < n; ++k) acc += static_cast<double>(f[i * n + k]) * f[j * n + k];
      g[static_cast<std::size_t>(i) * c + j] = g[static_cast<std::size_t>(j) * c + i] = acc * scale;
    }
  return g;
}

double gram_loss(const Tensor& result, const Tensor& style, const Encoder& encoder) {
  const EncoderFeatures fr = encoder.encode(result);
  const EncoderFeatures fs = encoder.encode(style);
  double total = 0;
  for (int k = 0; k < kEncoderStages; ++k) {
    const auto ga = gram_matrix(fr.taps[static_cast<std::size_t>(k)]);
    const auto gb = gram_matrix(fs.taps[static_cast<std::size_t>(k)]);
    for (std::size_t i = 0; i < ga.size(); ++i) total += (ga[i] - gb[i]) * (ga[i] - gb[i]);
  }
  return total;
}

double rms_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "rms_distance");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double perceptual_distance(const EncoderFeatures& a, const EncoderFeatures& b) {
  double total = 0;
  for (std::size_t k = 0; k < a.taps.size(); ++k) total += rms_distance(a.taps[k], b.taps[k]);
  return total;
}

double EvalReport::recomposed_loss() const {
  return weights.alpha * recon_error + weights.beta * perceptual + weights.gamma * op_fraction;
}

std::string EvalReport::to_key_values() const {
  std::ostringstream out;
  out << std::setprecision(17);
  if (ssim_whole) out << "ssim_whole=" << *ssim_whole << "\n";
  if (ssim_edge) out << "ssim_edge=" << *ssim_edge << "\n";
  if (gram) out << "gram_loss=" << *gram << "\n";
  out << "E=" << recon_error << "\nP=" << perceptual << "\nO=" << op_fraction << "\nL=" << loss << "\n";
  return out.str();
}

EvalReport objective(const std::vector<Tensor>& candidate_outputs, const std::vector<Tensor>& oracle_outputs,
                     const ArchCode& code, const ObjectiveWeights& weights, const Encoder& encoder) {
  std::vector<EncoderFeatures> oracle_features;
  oracle_features.reserve(oracle_outputs.size());
  for (const Tensor& o : oracle_outputs) oracle_features.push_back(encoder.encode(o));
  return objective(candidate_outputs, oracle_outputs, oracle_features, code, weights, encoder);
}

EvalReport objective(const std::vector<Tensor>& candidate_outputs, const std::vector<Tensor>& oracle_outputs,
                     const std::vector<EncoderFeatures>& oracle_features, const ArchCode& code,
                     const ObjectiveWeights& weights, const Encoder& encoder) {
  weights.validate();
  if (candidate_outputs.empty() || candidate_outputs.size() != oracle_outputs.size() ||
      oracle_features.size() != oracle_outputs.size())
    throw InputError("objective needs equally many (>= 1) candidate and oracle outputs, got " +
                     std::to_string(candidate_outputs.size()) + " and " + std::to_string(oracle_outputs.size()));
  EvalReport r;
  r.weights = weights;
  double e = 0, p = 0;
  for (std::size_t i = 0; i < candidate_outputs.size(); ++i) {
    e += rms_distance(candidate_outputs[i], oracle_outputs[i]);
    p += perceptual_distance(encoder.encode(candidate_outputs[i]), oracle_features[i]);
  }
  const double n = static_cast<double>(candidate_outputs.size());
  r.recon_error = e / n;
  r.perceptual = p / n;
  r.op_fraction = op_fraction(code);
  r.loss = r.recomposed_loss();
  return r;
}

void add_image_metrics(EvalReport& report, const std::vector<Tensor>& results, const std::vector<Tensor>& contents,
                       const std::vector<Tensor>& styles, const Encoder& encoder) {
  if (results.empty() || results.size() != contents.size() || results.size() != styles.size())
    throw InputError("add_image_metrics needs equally many results, contents and styles");
  double sw = 0, se = 0, g = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    sw += ssim(results[i], contents[i]);
    se += ssim_edge(results[i], contents[i]);
    g += gram_loss(results[i], styles[i], encoder);
  }
  const double n = static_cast<double>(results.size());
  report.ssim_whole = sw / n;
  report.ssim_edge = se / n;
  report.gram = g / n;
}

}  // namespace photonas::metrics
