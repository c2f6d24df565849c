#include "photonas/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>

#include "photonas/errors.hpp"
#include "photonas/io.hpp"
#include "photonas/random.hpp"

namespace photonas {

void TrainConfig::validate() const {
  if (steps < 1) throw PreconditionError("train steps must be >= 1");
  if (batch < 1) throw PreconditionError("train batch must be >= 1");
  if (!(learning_rate > 0.0f)) throw PreconditionError("learning rate must be > 0");
  if (image_size < kSizeMultiple || image_size % kSizeMultiple != 0)
    throw PreconditionError("image size must be a positive multiple of 16");
}

// ---------------------------------------------------------------------------
// Procedural corpus

namespace {

using Pixel = std::array<float, 3>;

Pixel random_color(Rng& rng) {
  std::uniform_real_distribution<float> u(0.05f, 0.95f);
  return {u(rng), u(rng), u(rng)};
}

void paint_gradient(Tensor& img, Rng& rng) {
  const Pixel a = random_color(rng), b = random_color(rng);
  std::uniform_real_distribution<float> angle(0.0f, 6.2831853f);
  const float t = angle(rng), dx = std::cos(t), dy = std::sin(t);
  const int h = img.dim(1), w = img.dim(2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float u = 0.5f + 0.5f * (dx * (2.0f * x / w - 1.0f) + dy * (2.0f * y / h - 1.0f)) / 1.4143f;
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = a[c] + (b[c] - a[c]) * u;
    }
}

void paint_checkerboard(Tensor& img, Rng& rng) {
  const Pixel a = random_color(rng), b = random_color(rng);
  std::uniform_int_distribution<int> cell_dist(2, std::max(2, img.dim(1) / 4));
  const int cell = cell_dist(rng);
  for (int y = 0; y < img.dim(1); ++y)
    for (int x = 0; x < img.dim(2); ++x) {
      const Pixel& p = ((y / cell + x / cell) % 2 == 0) ? a : b;
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = p[c];
    }
}

void paint_noise(Tensor& img, Rng& rng) {
  const Pixel base = random_color(rng);
  Tensor noise = normal_tensor(img.shape(), 0.25f, rng);
  // Two passes of a 3x3 box blur give spatially correlated texture.
  const int h = img.dim(1), w = img.dim(2);
  for (int pass = 0; pass < 2; ++pass) {
    Tensor blurred(img.shape());
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          float s = 0.0f;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
              s += noise.at(c, std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
          blurred.at(c, y, x) = s / 9.0f;
        }
    noise = std::move(blurred);
  }
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(c, y, x) = base[c] + noise.at(c, y, x);
}

void composite_shapes(Tensor& img, Rng& rng) {
  std::uniform_int_distribution<int> count_dist(1, 4);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const int h = img.dim(1), w = img.dim(2);
  const int count = count_dist(rng);
  for (int s = 0; s < count; ++s) {
    const Pixel color = random_color(rng);
    const bool disc = u(rng) < 0.5f;
    const float cx = u(rng) * w, cy = u(rng) * h;
    const float rx = (0.1f + 0.3f * u(rng)) * w, ry = (0.1f + 0.3f * u(rng)) * h;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const float nx = (x + 0.5f - cx) / rx, ny = (y + 0.5f - cy) / ry;
        const bool inside = disc ? nx * nx + ny * ny <= 1.0f : std::fabs(nx) <= 1.0f && std::fabs(ny) <= 1.0f;
        if (inside)
          for (int c = 0; c < 3; ++c) img.at(c, y, x) = color[c];
      }
  }
}

}  // namespace

Corpus procedural_corpus(int count, int size, std::uint64_t seed) {
  if (count < 1) throw PreconditionError("corpus count must be >= 1");
  if (size < kSizeMultiple || size % kSizeMultiple != 0) throw PreconditionError("corpus image size must be a multiple of 16");
  Corpus corpus;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, "corpus." + std::to_string(i)));
    Tensor img({3, size, size});
    switch (i % 3) {
      case 0: paint_gradient(img, rng); break;
      case 1: paint_checkerboard(img, rng); break;
      default: paint_noise(img, rng); break;
    }
    composite_shapes(img, rng);
    for (float& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
    corpus.images.push_back(std::move(img));
  }
  return corpus;
}

Corpus directory_corpus(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) throw InputError("corpus directory not found: " + path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  Corpus corpus;
  for (const auto& f : files) {
    Tensor img = read_ppm(f.string());
    require_image(img, f.string().c_str());
    corpus.images.push_back(std::move(img));
  }
  if (corpus.images.empty()) throw InputError("no .ppm images in " + path);
  return corpus;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct AdamSlot {
  std::vector<float> m, v;
};

void adam_update(Tensor& param, const Tensor& grad, AdamSlot& slot, const TrainConfig& cfg, int t) {
  if (slot.m.empty()) {
    slot.m.assign(param.size(), 0.0f);
    slot.v.assign(param.size(), 0.0f);
  }
  const float b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const float c1 = 1.0f - std::pow(b1, static_cast<float>(t));
  const float c2 = 1.0f - std::pow(b2, static_cast<float>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const float g = grad[i];
    slot.m[i] = b1 * slot.m[i] + (1.0f - b1) * g;
    slot.v[i] = b2 * slot.v[i] + (1.0f - b2) * g * g;
    const float mhat = slot.m[i] / c1;
    const float vhat = slot.v[i] / c2;
    param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

}  // namespace

double reconstruction_loss(const NetworkGraph& graph, const Tensor& image) {
  const Tensor out = reconstruct_raw(graph, image);
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = static_cast<double>(out[i]) - image[i];
    s += d * d;
  }
  return s / static_cast<double>(out.size());
}

TrainResult train_decoder(const NetworkGraph& graph, const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  if (corpus.images.empty()) throw PreconditionError("train_decoder: corpus is empty");
  for (const Tensor& img : corpus.images) require_image(img, "corpus image");

  TrainResult result{graph, {}};
  NetworkGraph& g = result.graph;
  // The encoder is frozen, so its features are computed once per corpus image.
  std::vector<EncoderFeatures> features;
  features.reserve(corpus.images.size());
  for (const Tensor& img : corpus.images) features.push_back(g.encoder->encode(img));

  Rng rng(derive_seed(config.seed, "train.batches"));
  std::uniform_int_distribution<std::size_t> pick(0, corpus.images.size() - 1);
  std::map<std::string, std::pair<AdamSlot, AdamSlot>> adam;

  for (int step = 1; step <= config.steps; ++step) {
    GradMap total;
    double loss = 0.0;
    for (int b = 0; b < config.batch; ++b) {
      const std::size_t idx = pick(rng);
      const Tensor& target = corpus.images[idx];
      const ProgramRun run = run_program(g, features[idx]);
      const Tensor& out = run.output();
      const float scale = 2.0f / static_cast<float>(out.size() * static_cast<std::size_t>(config.batch));
      Tensor grad(out.shape());
      double sse = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        const float d = out[i] - target[i];
        sse += static_cast<double>(d) * d;
        grad[i] = scale * d;
      }
      loss += sse / static_cast<double>(out.size());
      for (auto& [name, pg] : backward_program(g, run, grad)) {
        ParamGrad& acc = total[name];
        if (acc.weight.empty()) {
          acc = std::move(pg);
        } else {
          for (std::size_t i = 0; i < acc.weight.size(); ++i) acc.weight[i] += pg.weight[i];
          for (std::size_t i = 0; i < acc.bias.size(); ++i) acc.bias[i] += pg.bias[i];
        }
      }
    }
    loss /= config.batch;
    if (!std::isfinite(loss)) throw DivergedError(step);
    result.loss_trace.push_back(static_cast<float>(loss));
    for (auto& [name, pg] : total) {
      nn::ConvLayer& layer = g.decoder.at(name);
      auto& slots = adam[name];
      adam_update(layer.weight, pg.weight, slots.first, config, step);
      adam_update(layer.bias, pg.bias, slots.second, config, step);
    }
  }
  return result;
}

double psnr(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "psnr");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::clamp(a[i], 0.0f, 1.0f) - static_cast<double>(std::clamp(b[i], 0.0f, 1.0f));
    s += d * d;
  }
  const double mse = s / static_cast<double>(a.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double reconstruction_psnr(const NetworkGraph& graph, const Corpus& corpus) {
  if (corpus.images.empty()) throw PreconditionError("reconstruction_psnr: corpus is empty");
  double total = 0.0;
  for (const Tensor& img : corpus.images) total += psnr(reconstruct_raw(graph, img), img);
  return total / static_cast<double>(corpus.images.size());
}

}  // namespace photonas
