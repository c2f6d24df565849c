#include "photonas/graph.hpp"

#include <algorithm>
#include <cmath>

#include "photonas/errors.hpp"
#include "photonas/random.hpp"

namespace photonas {

namespace {

// Rows orthonormalized (Gram-Schmidt) then scaled by sqrt(2) for the following ReLU.
nn::ConvLayer orthogonal_conv(int c_in, int c_out, std::uint64_t seed) {
  Rng rng(seed);
  const int k = c_in * 9;
  Tensor w = normal_tensor({c_out, k}, 1.0f, rng);
  const int rows = std::min(c_out, k);
  for (int r = 0; r < rows; ++r) {
    float* row = w.raw() + static_cast<std::size_t>(r) * k;
    for (int p = 0; p < r; ++p) {
      const float* prev = w.raw() + static_cast<std::size_t>(p) * k;
      double dot = 0.0;
      for (int i = 0; i < k; ++i) dot += static_cast<double>(row[i]) * prev[i];
      for (int i = 0; i < k; ++i) row[i] -= static_cast<float>(dot) * prev[i];
    }
    double norm = 0.0;
    for (int i = 0; i < k; ++i) norm += static_cast<double>(row[i]) * row[i];
    const float inv = static_cast<float>(1.0 / std::sqrt(std::max(norm, 1e-12)));
    for (int i = 0; i < k; ++i) row[i] *= inv;
  }
  const float gain = std::sqrt(2.0f);
  for (float& v : w.data()) v *= gain;
  return nn::ConvLayer{w.reshaped({c_out, c_in, 3, 3}), Tensor({c_out})};
}

nn::ConvLayer he_conv(int c_in, int c_out, std::uint64_t seed, float gain) {
  Rng rng(seed);
  const float stddev = gain / std::sqrt(static_cast<float>(c_in * 9));
  return nn::ConvLayer{normal_tensor({c_out, c_in, 3, 3}, stddev, rng), Tensor({c_out})};
}

class ProgramBuilder {
 public:
  ProgramBuilder(NetworkGraph& graph, std::uint64_t seed) : graph_(graph), seed_(seed) {}

  int tap(int level, const std::string& label) {
    Op op;
    op.kind = OpKind::kTap;
    op.label = label;
    op.level = level;
    return emit(std::move(op), false);
  }
  int resize(int src, int ref, const std::string& label) {
    Op op;
    op.kind = OpKind::kResize;
    op.label = label;
    op.srcs = {src, ref};
    return emit(std::move(op), grad(src));
  }
  int concat(std::vector<int> srcs, const std::string& label) {
    Op op;
    op.kind = OpKind::kConcat;
    op.label = label;
    bool g = false;
    for (int s : srcs) g = g || grad(s);
    op.srcs = std::move(srcs);
    return emit(std::move(op), g);
  }
  int conv(int src, int c_in, int c_out, const std::string& name, bool with_relu = true) {
    const float gain = with_relu ? std::sqrt(2.0f) : 1.0f;
    graph_.decoder.emplace(name, he_conv(c_in, c_out, derive_seed(seed_, name), gain));
    Op op;
    op.kind = OpKind::kConv;
    op.label = name;
    op.srcs = {src};
    op.param = name;
    int r = emit(std::move(op), true);
    if (with_relu) {
      Op act;
      act.kind = OpKind::kRelu;
      act.label = name;
      act.srcs = {r};
      r = emit(std::move(act), true);
    }
    return r;
  }
  int unary(OpKind kind, int src, const std::string& label) {
    Op op;
    op.kind = kind;
    op.label = label;
    op.srcs = {src};
    return emit(std::move(op), grad(src));
  }
  int transfer(int src, const std::string& location, int slot_index) {
    Op op;
    op.kind = OpKind::kTransfer;
    op.label = location + ".wct";
    op.srcs = {src};
    op.site = static_cast<int>(graph_.transfer_sites.size());
    graph_.transfer_sites.push_back({location, slot_index});
    return emit(std::move(op), grad(src));
  }

 private:
  bool grad(int r) const { return graph_.requires_grad[static_cast<std::size_t>(r)]; }
  int emit(Op op, bool requires_grad) {
    op.dst = static_cast<int>(graph_.requires_grad.size());
    graph_.requires_grad.push_back(requires_grad);
    graph_.program.push_back(std::move(op));
    return graph_.program.back().dst;
  }

  NetworkGraph& graph_;
  std::uint64_t seed_;
};

const Tensor& reg(const std::vector<Tensor>& regs, int i) { return regs[static_cast<std::size_t>(i)]; }

void accumulate(Tensor& into, const Tensor& g) {
  if (into.empty()) {
    into = g;
    return;
  }
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

std::string Encoder::layer_name(int stage, int conv) {
  return "enc.stage" + std::to_string(stage) + ".conv" + std::to_string(conv);
}

Encoder Encoder::random(const EncoderSpec& spec, std::uint64_t seed) {
  if (spec.base_width < 2) throw PreconditionError("encoder base width must be >= 2");
  Encoder e;
  e.spec_ = spec;
  const auto widths = spec.widths();
  int c_in = 3;
  for (int s = 0; s < kEncoderStages; ++s) {
    if (spec.convs_per_stage[static_cast<std::size_t>(s)] < 1) throw PreconditionError("each encoder stage needs a conv");
    std::vector<nn::ConvLayer> layers;
    for (int j = 0; j < spec.convs_per_stage[static_cast<std::size_t>(s)]; ++j) {
      const int c_out = widths[static_cast<std::size_t>(s)];
      layers.push_back(orthogonal_conv(c_in, c_out, derive_seed(seed, layer_name(s + 1, j + 1))));
      c_in = c_out;
    }
    e.stages_.push_back(std::move(layers));
  }
  return e;
}

Encoder Encoder::from_weights(const EncoderSpec& spec, const WeightMap& weights) {
  Encoder e = random(spec, 0);
  for (int s = 0; s < kEncoderStages; ++s)
    for (std::size_t j = 0; j < e.stages_[static_cast<std::size_t>(s)].size(); ++j) {
      nn::ConvLayer& layer = e.stages_[static_cast<std::size_t>(s)][j];
      const std::string name = layer_name(s + 1, static_cast<int>(j) + 1);
      const auto w = weights.find(name + ".weight");
      const auto b = weights.find(name + ".bias");
      if (w == weights.end() || b == weights.end()) throw InputError("encoder weights missing layer " + name);
      if (w->second.shape() != layer.weight.shape() || b->second.shape() != layer.bias.shape())
        throw DimensionError("encoder layer " + name + " expects weight " + shape_string(layer.weight.shape()) +
                             ", got " + shape_string(w->second.shape()));
      layer = nn::ConvLayer{w->second, b->second};
    }
  return e;
}

const nn::ConvLayer& Encoder::layer(int stage, int conv) const {
  return stages_.at(static_cast<std::size_t>(stage - 1)).at(static_cast<std::size_t>(conv - 1));
}

WeightMap Encoder::weights() const {
  WeightMap out;
  for (std::size_t s = 0; s < stages_.size(); ++s)
    for (std::size_t j = 0; j < stages_[s].size(); ++j) {
      const std::string name = layer_name(static_cast<int>(s) + 1, static_cast<int>(j) + 1);
      out[name + ".weight"] = stages_[s][j].weight;
      out[name + ".bias"] = stages_[s][j].bias;
    }
  return out;
}

EncoderFeatures Encoder::encode(const Tensor& image) const {
  EncoderFeatures f;
  Tensor x = image;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    if (s > 0) x = nn::maxpool2(x).pooled;
    for (std::size_t j = 0; j < stages_[s].size(); ++j) {
      x = nn::relu(nn::conv_forward(stages_[s][j], x));
      if (j == 0) f.taps[s] = x;
      // Later convs of the last stage are not needed for ReLU_5_1.
      if (s + 1 == stages_.size()) break;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Graph construction

NetworkGraph build_graph(const ArchCode& code, std::shared_ptr<const Encoder> encoder, std::uint64_t seed) {
  if (!encoder) throw PreconditionError("build_graph: encoder is null");
  NetworkGraph g;
  g.code = code;
  g.encoder = std::move(encoder);
  const auto w = g.encoder->spec().widths();
  const auto width = [&w](int level) { return w[static_cast<std::size_t>(level - 1)]; };
  ProgramBuilder b(g, seed);

  // Bottleneck: ReLU_5_1, optionally aggregated with resized shallower taps (BFA).
  const int f5 = b.tap(5, "enc.tap5");
  int x = f5;
  std::vector<int> branches{f5};
  int aggregate_channels = width(5);
  for (int level = 1; level <= 4; ++level) {
    if (!code.test(slot::kBfaBranch + level - 1)) continue;
    const std::string label = "bfa.branch" + std::to_string(level);
    branches.push_back(b.resize(b.tap(level, label), f5, label));
    aggregate_channels += width(level);
  }
  if (branches.size() > 1) x = b.conv(b.concat(branches, "bfa.concat"), aggregate_channels, width(5), "bfa.conv");
  if (code.test(slot::kBottleneckNorm)) x = b.unary(OpKind::kInstanceNorm, x, "bottleneck.in");
  if (code.test(slot::kBottleneckWct)) x = b.transfer(x, "bottleneck", slot::kBottleneckWct);

  for (int level = 4; level >= 1; --level) {
    const std::string dec = "dec" + std::to_string(level);
    const int i = level - 1;
    x = b.conv(x, width(level + 1), width(level), dec + ".conv");
    if (code.test(slot::kAuxConv1 + i)) x = b.conv(x, width(level), width(level), dec + ".aux1");
    if (code.test(slot::kAuxConv2 + i)) x = b.conv(x, width(level), width(level), dec + ".aux2");
    x = b.unary(OpKind::kUpsample, x, dec + ".up");
    if (code.test(slot::kSkipLink + i)) {
      const std::string skip = "skip" + std::to_string(level);
      int s = b.tap(level, skip + ".link");
      if (code.test(slot::kSkipNorm + i)) s = b.unary(OpKind::kInstanceNorm, s, skip + ".in");
      if (code.test(slot::kSkipWct + i)) s = b.transfer(s, skip, slot::kSkipWct + i);
      x = b.conv(b.concat({x, s}, skip + ".concat"), 2 * width(level), width(level), skip + ".merge");
    }
    if (code.test(slot::kDecoderWct + i)) x = b.transfer(x, dec, slot::kDecoderWct + i);
  }
  if (code.test(slot::kOutputRefine)) x = b.conv(x, width(1), width(1), "out.refine");
  x = b.conv(x, width(1), 3, "out.conv", false);
  g.output_register = x;
  return g;
}

NetworkGraph build_graph(const ArchCode& code, int base_width, std::uint64_t seed) {
  if (base_width < 2) throw PreconditionError("build_graph: base_width must be >= 2");
  EncoderSpec spec;
  spec.base_width = base_width;
  auto encoder = std::make_shared<const Encoder>(Encoder::random(spec, derive_seed(seed, "encoder")));
  return build_graph(code, std::move(encoder), seed);
}

std::vector<int> NetworkGraph::inert_slots() const {
  std::vector<int> out;
  for (int s : code.set_slots()) {
    const int parent = slot_parent(s);
    if (parent >= 0 && !code.test(parent)) out.push_back(s);
  }
  return out;
}

std::set<std::string> NetworkGraph::op_set() const {
  std::set<std::string> labels;
  for (const Op& op : program)
    if (op.kind != OpKind::kTap || op.label != "enc.tap5") labels.insert(op.label);
  return labels;
}

// ---------------------------------------------------------------------------
// Execution

ProgramRun run_program(const NetworkGraph& graph, const EncoderFeatures& features, const SiteHook& hook,
                       int stop_after) {
  ProgramRun run;
  run.registers.resize(graph.program.size());
  auto& regs = run.registers;
  for (std::size_t i = 0; i < graph.program.size(); ++i) {
    const Op& op = graph.program[i];
    Tensor& out = regs[static_cast<std::size_t>(op.dst)];
    switch (op.kind) {
      case OpKind::kTap:
        out = features.taps[static_cast<std::size_t>(op.level - 1)];
        break;
      case OpKind::kResize: {
        const Tensor& ref = reg(regs, op.srcs[1]);
        out = nn::resize_nearest(reg(regs, op.srcs[0]), ref.dim(1), ref.dim(2));
        break;
      }
      case OpKind::kConcat: {
        std::vector<Tensor> parts;
        for (int s : op.srcs) parts.push_back(reg(regs, s));
        out = nn::concat_channels(parts);
        break;
      }
      case OpKind::kConv:
        out = nn::conv_forward(graph.decoder.at(op.param), reg(regs, op.srcs[0]));
        break;
      case OpKind::kRelu:
        out = nn::relu(reg(regs, op.srcs[0]));
        break;
      case OpKind::kInstanceNorm:
        out = nn::instance_norm(reg(regs, op.srcs[0]));
        break;
      case OpKind::kUpsample:
        out = nn::upsample_nearest(reg(regs, op.srcs[0]));
        break;
      case OpKind::kTransfer:
        out = hook ? hook(op.site, reg(regs, op.srcs[0])) : reg(regs, op.srcs[0]);
        break;
    }
    if (stop_after >= 0 && static_cast<int>(i) >= stop_after) {
      regs.resize(i + 1);
      break;
    }
  }
  return run;
}

GradMap backward_program(const NetworkGraph& graph, const ProgramRun& run, const Tensor& grad_output) {
  const auto& regs = run.registers;
  if (regs.size() != graph.program.size()) throw PreconditionError("backward_program needs a complete run");
  require_same_shape(reg(regs, graph.output_register), grad_output, "backward_program");
  std::vector<Tensor> grads(regs.size());
  grads[static_cast<std::size_t>(graph.output_register)] = grad_output;
  GradMap params;
  const auto needs = [&graph](int r) { return graph.requires_grad[static_cast<std::size_t>(r)]; };

  for (auto it = graph.program.rbegin(); it != graph.program.rend(); ++it) {
    const Op& op = *it;
    const Tensor& g = grads[static_cast<std::size_t>(op.dst)];
    if (g.empty()) continue;
    switch (op.kind) {
      case OpKind::kTap:
        break;
      case OpKind::kResize:
        if (needs(op.srcs[0])) {
          const Tensor& src = reg(regs, op.srcs[0]);
          accumulate(grads[static_cast<std::size_t>(op.srcs[0])], nn::resize_nearest_backward(g, src.dim(1), src.dim(2)));
        }
        break;
      case OpKind::kConcat: {
        std::vector<int> channels;
        for (int s : op.srcs) channels.push_back(reg(regs, s).dim(0));
        auto parts = nn::split_channels(g, channels);
        for (std::size_t k = 0; k < op.srcs.size(); ++k)
          if (needs(op.srcs[k])) accumulate(grads[static_cast<std::size_t>(op.srcs[k])], parts[k]);
        break;
      }
      case OpKind::kConv: {
        const int src = op.srcs[0];
        nn::ConvGrads cg = nn::conv_backward(graph.decoder.at(op.param), reg(regs, src), g, needs(src));
        ParamGrad& pg = params[op.param];
        accumulate(pg.weight, cg.grad_w);
        accumulate(pg.bias, cg.grad_b);
        if (needs(src)) accumulate(grads[static_cast<std::size_t>(src)], cg.grad_x);
        break;
      }
      case OpKind::kRelu:
        if (needs(op.srcs[0]))
          accumulate(grads[static_cast<std::size_t>(op.srcs[0])], nn::relu_backward(reg(regs, op.srcs[0]), g));
        break;
      case OpKind::kInstanceNorm:
        if (needs(op.srcs[0]))
          accumulate(grads[static_cast<std::size_t>(op.srcs[0])],
                     nn::instance_norm_backward(reg(regs, op.srcs[0]), g));
        break;
      case OpKind::kUpsample:
        if (needs(op.srcs[0])) accumulate(grads[static_cast<std::size_t>(op.srcs[0])], nn::upsample_nearest_backward(g));
        break;
      case OpKind::kTransfer:
        // Transfers are identities while training.
        if (needs(op.srcs[0])) accumulate(grads[static_cast<std::size_t>(op.srcs[0])], g);
        break;
    }
  }
  return params;
}

void require_image(const Tensor& image, const char* what) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw InputError(std::string(what) + " must be an RGB (3,H,W) image, got " + shape_string(image.shape()));
  if (image.dim(1) % kSizeMultiple != 0 || image.dim(2) % kSizeMultiple != 0)
    throw InputError(std::string(what) + " dims " + std::to_string(image.dim(1)) + "x" + std::to_string(image.dim(2)) +
                     " must be divisible by " + std::to_string(kSizeMultiple));
}

Tensor reconstruct_raw(const NetworkGraph& graph, const Tensor& image) {
  require_image(image, "image");
  return run_program(graph, graph.encoder->encode(image)).output();
}

Tensor forward(const NetworkGraph& graph, const Tensor& content, const Tensor& style,
               const transfer::TransferConfig& config) {
  config.validate();
  require_image(content, "content image");
  require_image(style, "style image");
  const EncoderFeatures content_features = graph.encoder->encode(content);

  Tensor out;
  if (graph.transfer_sites.empty() || config.blend == 0.0f) {
    out = run_program(graph, content_features).output();
  } else {
    int last_site_op = -1;
    for (std::size_t i = 0; i < graph.program.size(); ++i)
      if (graph.program[i].kind == OpKind::kTransfer) last_site_op = static_cast<int>(i);
    std::vector<Tensor> style_at_site(graph.transfer_sites.size());
    run_program(
        graph, graph.encoder->encode(style),
        [&style_at_site](int site, const Tensor& f) {
          style_at_site[static_cast<std::size_t>(site)] = f;
          return f;
        },
        last_site_op);
    out = run_program(graph, content_features, [&](int site, const Tensor& f) {
            return transfer::apply(f, style_at_site[static_cast<std::size_t>(site)], config);
          }).output();
  }
  for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

namespace {

// Index into [0, n) reflecting about the edges without repeating them (period 2n - 2).
int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i %= period;
  return i < n ? i : period - i;
}

}  // namespace

Tensor reflect_pad_to_multiple(const Tensor& image, int multiple) {
  if (image.rank() != 3) throw DimensionError("reflect_pad_to_multiple expects a (C,H,W) map");
  if (multiple < 1) throw PreconditionError("padding multiple must be >= 1");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const int ph = (h + multiple - 1) / multiple * multiple, pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return image;
  Tensor out({c, ph, pw});
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) out.at(k, y, x) = image.at(k, mirror(y, h), mirror(x, w));
  return out;
}

Tensor crop(const Tensor& image, int height, int width) {
  if (image.rank() != 3 || height < 1 || width < 1 || height > image.dim(1) || width > image.dim(2))
    throw DimensionError("crop window " + std::to_string(height) + "x" + std::to_string(width) +
                         " does not fit " + shape_string(image.shape()));
  const int c = image.dim(0);
  Tensor out({c, height, width});
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(k, y, x) = image.at(k, y, x);
  return out;
}

Tensor forward_any_size(const NetworkGraph& graph, const Tensor& content, const Tensor& style,
                        const transfer::TransferConfig& config) {
  if (content.rank() != 3 || content.dim(0) != 3) throw InputError("content image must be RGB (3,H,W)");
  if (style.rank() != 3 || style.dim(0) != 3) throw InputError("style image must be RGB (3,H,W)");
  const Tensor out = forward(graph, reflect_pad_to_multiple(content, kSizeMultiple),
                             reflect_pad_to_multiple(style, kSizeMultiple), config);
  return crop(out, content.dim(1), content.dim(2));
}

// ---------------------------------------------------------------------------
// Cost model

FlopReport count_flops(const NetworkGraph& graph, int height, int width) {
  if (height % kSizeMultiple != 0 || width % kSizeMultiple != 0 || height < 1 || width < 1)
    throw InputError("count_flops: dims must be positive multiples of " + std::to_string(kSizeMultiple));
  const EncoderSpec& spec = graph.encoder->spec();
  const auto widths = spec.widths();
  FlopReport encoder_cost;
  std::array<Shape, kEncoderStages> tap_shapes;
  {
    int c_in = 3, h = height, w = width;
    for (int s = 0; s < kEncoderStages; ++s) {
      if (s > 0) {
        h /= 2;
        w /= 2;
        encoder_cost.other_ops += static_cast<std::uint64_t>(c_in) * h * w * 4;
      }
      const int c = widths[static_cast<std::size_t>(s)];
      const int convs = s + 1 == kEncoderStages ? 1 : spec.convs_per_stage[static_cast<std::size_t>(s)];
      for (int j = 0; j < convs; ++j) {
        encoder_cost.conv_macs += static_cast<std::uint64_t>(h) * w * c * (j == 0 ? c_in : c) * 9;
        encoder_cost.other_ops += static_cast<std::uint64_t>(h) * w * c;
      }
      c_in = c;
      tap_shapes[static_cast<std::size_t>(s)] = {c, h, w};
    }
  }

  // Decoder cost per op, accumulated in program order.
  std::vector<Shape> shapes(graph.program.size());
  std::vector<FlopReport> per_op(graph.program.size());
  int last_site_op = -1;
  for (std::size_t i = 0; i < graph.program.size(); ++i) {
    const Op& op = graph.program[i];
    Shape& out = shapes[static_cast<std::size_t>(op.dst)];
    const auto src = [&](int k) -> const Shape& { return shapes[static_cast<std::size_t>(op.srcs[static_cast<std::size_t>(k)])]; };
    FlopReport& cost = per_op[i];
    switch (op.kind) {
      case OpKind::kTap:
        out = tap_shapes[static_cast<std::size_t>(op.level - 1)];
        break;
      case OpKind::kResize:
        out = {src(0)[0], src(1)[1], src(1)[2]};
        cost.other_ops = shape_size(out);
        break;
      case OpKind::kConcat: {
        out = src(0);
        for (std::size_t k = 1; k < op.srcs.size(); ++k) out[0] += src(static_cast<int>(k))[0];
        cost.other_ops = shape_size(out);
        break;
      }
      case OpKind::kConv: {
        const nn::ConvLayer& layer = graph.decoder.at(op.param);
        out = {layer.out_channels(), src(0)[1], src(0)[2]};
        cost.conv_macs = shape_size(out) * static_cast<std::uint64_t>(layer.in_channels()) * 9;
        break;
      }
      case OpKind::kRelu:
        out = src(0);
        cost.other_ops = shape_size(out);
        break;
      case OpKind::kInstanceNorm:
        out = src(0);
        cost.other_ops = 4 * shape_size(out);
        break;
      case OpKind::kUpsample:
        out = {src(0)[0], 2 * src(0)[1], 2 * src(0)[2]};
        cost.other_ops = shape_size(out);
        break;
      case OpKind::kTransfer: {
        out = src(0);
        const std::uint64_t c = static_cast<std::uint64_t>(out[0]);
        const std::uint64_t n = static_cast<std::uint64_t>(out[1]) * out[2];
        // Two covariances, two eigendecompositions (nominal 8 sweeps), one C x N transform.
        cost.other_ops = 2 * (c * n + c * c * n) + 2 * 8 * 4 * c * c * c + 3 * c * c * c + c * c * n + c * n;
        last_site_op = static_cast<int>(i);
        break;
      }
    }
  }

  FlopReport total = encoder_cost;
  for (const FlopReport& c : per_op) {
    total.conv_macs += c.conv_macs;
    total.other_ops += c.other_ops;
  }
  if (last_site_op >= 0) {
    // The style image is encoded and decoded up to the last transfer site.
    total.conv_macs += encoder_cost.conv_macs;
    total.other_ops += encoder_cost.other_ops;
    for (int i = 0; i < last_site_op; ++i) {
      total.conv_macs += per_op[static_cast<std::size_t>(i)].conv_macs;
      if (graph.program[static_cast<std::size_t>(i)].kind != OpKind::kTransfer)
        total.other_ops += per_op[static_cast<std::size_t>(i)].other_ops;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Parameter maps

WeightMap graph_weights(const NetworkGraph& graph) {
  WeightMap out = graph.encoder->weights();
  for (const auto& [name, layer] : graph.decoder) {
    out["dec." + name + ".weight"] = layer.weight;
    out["dec." + name + ".bias"] = layer.bias;
  }
  return out;
}

NetworkGraph with_decoder_weights(const NetworkGraph& graph, const WeightMap& weights) {
  NetworkGraph g = graph;
  for (auto& [name, layer] : g.decoder) {
    const auto w = weights.find("dec." + name + ".weight");
    const auto b = weights.find("dec." + name + ".bias");
    if (w == weights.end() || b == weights.end()) throw InputError("weights missing decoder layer " + name);
    if (w->second.shape() != layer.weight.shape() || b->second.shape() != layer.bias.shape())
      throw DimensionError("decoder layer " + name + " expects " + shape_string(layer.weight.shape()) + ", got " +
                           shape_string(w->second.shape()));
    layer = nn::ConvLayer{w->second, b->second};
  }
  return g;
}

}  // namespace photonas
