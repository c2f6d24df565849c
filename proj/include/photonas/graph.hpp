#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "photonas/arch_code.hpp"
#include "photonas/nn.hpp"
#include "photonas/tensor.hpp"
#include "photonas/transfer.hpp"

namespace photonas {

using WeightMap = std::map<std::string, Tensor>;

inline constexpr int kEncoderStages = 5;
inline constexpr int kSizeMultiple = 16;

struct EncoderSpec {
  int base_width = 8;
  // Convs per stage; the first conv of each stage is the ReLU_k_1 tap. VGG-19 up to
  // ReLU_5_1 is {2, 2, 4, 4, 1}.
  std::array<int, kEncoderStages> convs_per_stage{1, 1, 1, 1, 1};

  std::array<int, kEncoderStages> widths() const {
    return {base_width, 2 * base_width, 4 * base_width, 8 * base_width, 8 * base_width};
  }
  static EncoderSpec vgg19(int base_width = 64) { return {base_width, {2, 2, 4, 4, 1}}; }
};

struct EncoderFeatures {
  std::array<Tensor, kEncoderStages> taps;  // ReLU_1_1 .. ReLU_5_1
};

/// Fixed VGG-style encoder. Layers are named enc.stageK.convJ (1-based).
class Encoder {
 public:
  static Encoder random(const EncoderSpec& spec, std::uint64_t seed);
  // Expects enc.stageK.convJ.{weight,bias} for every layer of `spec`.
  static Encoder from_weights(const EncoderSpec& spec, const WeightMap& weights);

  const EncoderSpec& spec() const { return spec_; }
  EncoderFeatures encode(const Tensor& image) const;
  WeightMap weights() const;
  const nn::ConvLayer& layer(int stage, int conv) const;

  static std::string layer_name(int stage, int conv);

 private:
  EncoderSpec spec_;
  std::vector<std::vector<nn::ConvLayer>> stages_;
};

enum class OpKind { kTap, kResize, kConcat, kConv, kRelu, kInstanceNorm, kUpsample, kTransfer };

// One instruction of the decoder program. Every op writes a fresh register.
struct Op {
  OpKind kind = OpKind::kTap;
  std::string label;
  int dst = -1;
  std::vector<int> srcs;
  int level = 0;       // kTap: encoder stage 1..5
  std::string param;   // kConv: decoder parameter name
  int site = -1;       // kTransfer: index into transfer_sites
};

struct TransferSite {
  std::string location;  // "bottleneck", "skipL", "decL"
  int slot = -1;
};

struct NetworkGraph {
  ArchCode code;
  std::shared_ptr<const Encoder> encoder;
  std::map<std::string, nn::ConvLayer> decoder;
  std::vector<Op> program;
  std::vector<bool> requires_grad;  // per register
  int output_register = -1;
  std::vector<TransferSite> transfer_sites;

  /// Set bits of the code.
  std::vector<int> active_slots() const { return code.set_slots(); }
  /// Set dependent bits whose parent is off; they change nothing.
  std::vector<int> inert_slots() const;
  /// Labels of the decoder ops present (encoder excluded).
  std::set<std::string> op_set() const;
  int num_registers() const { return static_cast<int>(requires_grad.size()); }
};

/// Decodes `code` against a shared encoder. Decoder parameters are drawn from
/// derive_seed(seed, name), so an op's initial weights do not depend on the rest of the code.
NetworkGraph build_graph(const ArchCode& code, std::shared_ptr<const Encoder> encoder, std::uint64_t seed);
/// Convenience: fresh seeded random encoder of the given base width.
NetworkGraph build_graph(const ArchCode& code, int base_width, std::uint64_t seed = 0);

/// Called at every transfer site with the site index and the features reaching it.
using SiteHook = std::function<Tensor(int site, const Tensor& features)>;

struct ProgramRun {
  std::vector<Tensor> registers;
  const Tensor& output() const { return registers.back(); }
};

/// Executes the decoder on precomputed encoder features. A null hook leaves every site
/// untouched (transfers disabled). Execution stops after op `stop_after` when it is >= 0.
ProgramRun run_program(const NetworkGraph& graph, const EncoderFeatures& features, const SiteHook& hook = {},
                       int stop_after = -1);

struct ParamGrad {
  Tensor weight;
  Tensor bias;
};
using GradMap = std::map<std::string, ParamGrad>;

/// Reverse pass of a run made with transfers disabled.
GradMap backward_program(const NetworkGraph& graph, const ProgramRun& run, const Tensor& grad_output);

/// Reconstruction with every transfer site disabled; unclamped.
Tensor reconstruct_raw(const NetworkGraph& graph, const Tensor& image);

void require_image(const Tensor& image, const char* what);

/// Stylizes `content` with `style`. Output is clamped to [0, 1] and shaped like `content`.
Tensor forward(const NetworkGraph& graph, const Tensor& content, const Tensor& style,
               const transfer::TransferConfig& config);

/// Mirror-pads the bottom and right edges of a (C,H,W) map up to the next multiple.
Tensor reflect_pad_to_multiple(const Tensor& image, int multiple);
/// Top-left (C, h, w) window.
Tensor crop(const Tensor& image, int height, int width);
/// forward() for RGB images of any size: pads both inputs, stylizes, crops back to the content size.
Tensor forward_any_size(const NetworkGraph& graph, const Tensor& content, const Tensor& style,
                        const transfer::TransferConfig& config);

struct FlopReport {
  std::uint64_t conv_macs = 0;    // every 3x3 conv, content and style passes
  std::uint64_t other_ops = 0;    // norms, resampling, transfer statistics
  std::uint64_t total() const { return conv_macs + other_ops; }
};

FlopReport count_flops(const NetworkGraph& graph, int height, int width);

/// All trainable and fixed tensors: enc.* and dec.<param>.{weight,bias}.
WeightMap graph_weights(const NetworkGraph& graph);
/// Replaces the decoder parameters with those found in `weights`.
NetworkGraph with_decoder_weights(const NetworkGraph& graph, const WeightMap& weights);

}  // namespace photonas
