#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "photonas/arch_code.hpp"
#include "photonas/errors.hpp"
#include "photonas/graph.hpp"
#include "photonas/metrics.hpp"
#include "photonas/train.hpp"

using namespace photonas;

namespace {

transfer::TransferConfig wct_config(float eps = 0.3f, float blend = 1.0f) {
  transfer::TransferConfig c;
  c.epsilon = eps;
  c.blend = blend;
  return c;
}

Tensor image(int h, int w, std::uint64_t seed) { return oracle::random_tensor({3, h, w}, seed, 0.0f, 1.0f); }

}  // namespace

TEST(ArchCode, ParsePrintRoundTrip) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const ArchCode c = ArchCode::from_bits(static_cast<std::uint32_t>(rng()));
    EXPECT_EQ(ArchCode::parse(c.to_string()), c);
    EXPECT_EQ(ArchCode::parse(c.to_string()).to_string(), c.to_string());
  }
}

TEST(ArchCode, PhotoNasString) {
  const ArchCode c = parse_code(kPhotoNasCode);
  EXPECT_EQ(c.popcount(), 7);
  EXPECT_DOUBLE_EQ(op_fraction(c), 7.0 / 31.0);
  EXPECT_NEAR(op_fraction(c), 0.2258, 1e-4);
  EXPECT_EQ(c.set_slots(), (std::vector<int>{1, 3, 10, 27, 28, 29, 30}));
  EXPECT_EQ(resolve_arch("photonas"), c);
  EXPECT_EQ(resolve_arch("stylenas-7opt"), c);
}

TEST(ArchCode, AllOnesIsPhotoNet) {
  EXPECT_EQ(parse_code(std::string(31, '1')), ArchCode::all_ones());
  EXPECT_EQ(resolve_arch("photonet"), ArchCode::all_ones());
  EXPECT_DOUBLE_EQ(op_fraction(ArchCode::all_ones()), 1.0);
  EXPECT_DOUBLE_EQ(op_fraction(ArchCode::all_zeros()), 0.0);
}

TEST(ArchCode, SearchedPresetsHaveTheirPopcount) {
  EXPECT_EQ(resolve_arch("stylenas-5opt").popcount(), 5);
  EXPECT_EQ(resolve_arch("stylenas-9opt").popcount(), 9);
  EXPECT_EQ(preset_names().size(), 5u);
}

TEST(ArchCode, ParseErrorsReportPosition) {
  try {
    parse_code("012" + std::string(28, '0'));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 2u);
  }
  try {
    parse_code("0101");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  EXPECT_THROW(parse_code(std::string(32, '0')), ParseError);
  EXPECT_THROW(resolve_arch("photonut"), InputError);
}

TEST(ArchCode, OrderingIsLexicographicOnTheString) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const ArchCode a = ArchCode::from_bits(static_cast<std::uint32_t>(rng()));
    const ArchCode b = ArchCode::from_bits(static_cast<std::uint32_t>(rng()));
    EXPECT_EQ(a < b, a.to_string() < b.to_string());
  }
}

TEST(ArchCode, SlotNamesAndParents) {
  EXPECT_EQ(slot_name(0), "bfa.branch1");
  EXPECT_EQ(slot_name(4), "bottleneck.wct");
  EXPECT_EQ(slot_name(10), "skip2.in");
  EXPECT_EQ(slot_parent(10), 6);
  EXPECT_EQ(slot_parent(16), 8);
  EXPECT_EQ(slot_parent(17), -1);
  EXPECT_EQ(slot_parent(4), -1);
  EXPECT_THROW(slot_name(31), InputError);
}

TEST(BuildGraph, AllZerosIsMinimalDecoder) {
  const NetworkGraph g = build_graph(ArchCode::all_zeros(), 4, 0);
  EXPECT_TRUE(g.transfer_sites.empty());
  EXPECT_EQ(g.decoder.size(), 5u);  // 4 stage convs + output conv
  int convs = 0, relus = 0, ups = 0;
  for (const Op& op : g.program) {
    convs += op.kind == OpKind::kConv;
    relus += op.kind == OpKind::kRelu;
    ups += op.kind == OpKind::kUpsample;
  }
  EXPECT_EQ(convs, 5);
  EXPECT_EQ(relus, 4);
  EXPECT_EQ(ups, 4);
}

TEST(BuildGraph, AllOnesHasNineTransferSites) {
  const NetworkGraph g = build_graph(ArchCode::all_ones(), 4, 0);
  EXPECT_EQ(g.transfer_sites.size(), 9u);
  int bfa = 0, skip_in = 0;
  for (const Op& op : g.program) {
    bfa += op.kind == OpKind::kResize;
    skip_in += op.kind == OpKind::kInstanceNorm && op.label.starts_with("skip");
  }
  EXPECT_EQ(bfa, 4);
  EXPECT_EQ(skip_in, 4);
  EXPECT_TRUE(g.inert_slots().empty());
}

TEST(BuildGraph, PhotoNasDecoding) {
  const NetworkGraph g = build_graph(parse_code(kPhotoNasCode), 4, 0);
  EXPECT_EQ(g.active_slots(), (std::vector<int>{1, 3, 10, 27, 28, 29, 30}));
  EXPECT_EQ(g.inert_slots(), std::vector<int>{10});
  EXPECT_TRUE(g.transfer_sites.empty());
}

TEST(BuildGraph, MonotoneSubsetOpSets) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::uint32_t big = static_cast<std::uint32_t>(rng());
    const ArchCode b = ArchCode::from_bits(big);
    const ArchCode a = ArchCode::from_bits(big & static_cast<std::uint32_t>(rng()));
    ASSERT_TRUE(a.is_subset_of(b));
    const auto sa = build_graph(a, 2, 0).op_set();
    const auto sb = build_graph(b, 2, 0).op_set();
    EXPECT_TRUE(std::includes(sb.begin(), sb.end(), sa.begin(), sa.end())) << a.to_string() << " " << b.to_string();
  }
}

TEST(BuildGraph, EncoderIsSharedAndIdentical) {
  const NetworkGraph a = build_graph(ArchCode::all_zeros(), 4, 7);
  const NetworkGraph b = build_graph(ArchCode::all_ones(), 4, 7);
  EXPECT_EQ(a.encoder->weights(), b.encoder->weights());
  EXPECT_THROW(build_graph(ArchCode::all_zeros(), 1, 0), PreconditionError);
}

TEST(BuildGraph, ParameterInitDependsOnlyOnName) {
  const NetworkGraph a = build_graph(ArchCode::all_zeros(), 4, 9);
  const NetworkGraph b = build_graph(ArchCode::all_ones(), 4, 9);
  EXPECT_EQ(a.decoder.at("dec2.conv").weight, b.decoder.at("dec2.conv").weight);
  EXPECT_EQ(a.decoder.at("out.conv").weight, b.decoder.at("out.conv").weight);
}

TEST(Encoder, LayerNamesAndShapes) {
  EXPECT_EQ(Encoder::layer_name(3, 2), "enc.stage3.conv2");
  const Encoder e = Encoder::random(EncoderSpec::vgg19(4), 0);
  const WeightMap w = e.weights();
  EXPECT_EQ(w.size(), 2u * (2 + 2 + 4 + 4 + 1));
  EXPECT_EQ(w.at("enc.stage1.conv1.weight").shape(), (Shape{4, 3, 3, 3}));
  EXPECT_EQ(w.at("enc.stage3.conv4.weight").shape(), (Shape{16, 16, 3, 3}));
  EXPECT_EQ(w.at("enc.stage5.conv1.bias").shape(), (Shape{32}));
  const EncoderFeatures f = e.encode(image(32, 48, 1));
  EXPECT_EQ(f.taps[0].shape(), (Shape{4, 32, 48}));
  EXPECT_EQ(f.taps[4].shape(), (Shape{32, 2, 3}));
}

TEST(Encoder, FromWeightsRoundTripAndErrors) {
  const EncoderSpec spec = EncoderSpec::vgg19(4);
  const Encoder e = Encoder::random(spec, 5);
  const Encoder back = Encoder::from_weights(spec, e.weights());
  EXPECT_EQ(back.weights(), e.weights());
  WeightMap missing = e.weights();
  missing.erase("enc.stage2.conv2.weight");
  EXPECT_THROW(Encoder::from_weights(spec, missing), InputError);
  WeightMap wrong = e.weights();
  wrong["enc.stage1.conv1.bias"] = Tensor({5});
  EXPECT_THROW(Encoder::from_weights(spec, wrong), DimensionError);
}

TEST(Forward, AllZerosAndAllOnesRunOn64x64) {
  for (const ArchCode& code : {ArchCode::all_zeros(), ArchCode::all_ones()}) {
    const NetworkGraph g = build_graph(code, 4, 0);
    const Tensor out = forward(g, image(64, 64, 1), image(64, 64, 2), wct_config());
    EXPECT_EQ(out.shape(), (Shape{3, 64, 64}));
    for (float v : out.data()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(Forward, NonSquareAndShapePreserved) {
  const NetworkGraph g = build_graph(ArchCode::all_ones(), 4, 0);
  EXPECT_EQ(forward(g, image(32, 48, 3), image(64, 16, 4), wct_config()).shape(), (Shape{3, 32, 48}));
}

TEST(Forward, RejectsDimsNotDivisibleBy16) {
  const NetworkGraph g = build_graph(ArchCode::all_zeros(), 4, 0);
  try {
    forward(g, image(30, 32, 1), image(32, 32, 2), wct_config());
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
  }
  EXPECT_THROW(forward(g, Tensor({1, 32, 32}), image(32, 32, 2), wct_config()), InputError);
}

TEST(Forward, NoSitesOrZeroBlendIsReconstruction) {
  const Tensor content = image(32, 32, 5), style = image(32, 32, 6);
  Tensor recon_zero = reconstruct_raw(build_graph(ArchCode::all_zeros(), 4, 0), content);
  for (float& v : recon_zero.data()) v = std::clamp(v, 0.0f, 1.0f);
  EXPECT_EQ(forward(build_graph(ArchCode::all_zeros(), 4, 0), content, style, wct_config()), recon_zero);

  const NetworkGraph ones = build_graph(ArchCode::all_ones(), 4, 0);
  Tensor recon = reconstruct_raw(ones, content);
  for (float& v : recon.data()) v = std::clamp(v, 0.0f, 1.0f);
  EXPECT_EQ(forward(ones, content, style, wct_config(0.3f, 0.0f)), recon);
}

TEST(Forward, StyleEqualsContentStaysNearReconstruction) {
  const NetworkGraph g = build_graph(ArchCode::all_ones(), 4, 0);
  const Tensor content = image(32, 32, 7);
  Tensor recon = reconstruct_raw(g, content);
  for (float& v : recon.data()) v = std::clamp(v, 0.0f, 1.0f);
  EXPECT_LT(max_abs_diff(forward(g, content, content, wct_config(0.0f)), recon), 1e-2f);
}

TEST(Forward, InertSlotsChangeNothing) {
  const Tensor content = image(32, 32, 8), style = image(32, 32, 9);
  const ArchCode base = parse_code("0000100000000000010000000000001");
  const ArchCode with_inert = base.with(9, true).with(13, true).with(16, true);
  const NetworkGraph a = build_graph(base, 4, 0), b = build_graph(with_inert, 4, 0);
  EXPECT_EQ(b.inert_slots(), (std::vector<int>{9, 13, 16}));
  EXPECT_EQ(forward(a, content, style, wct_config()), forward(b, content, style, wct_config()));
}

TEST(Forward, Deterministic) {
  const Tensor content = image(32, 32, 10), style = image(32, 32, 11);
  const NetworkGraph g = build_graph(ArchCode::all_ones(), 4, 3);
  EXPECT_EQ(forward(g, content, style, wct_config()), forward(build_graph(ArchCode::all_ones(), 4, 3), content, style, wct_config()));
}

TEST(Forward, PhotoNetMovesDeepGramTowardStyle) {
  // Trained on a handful of images so reconstructions are meaningful, then compared on ReLU_5_1.
  const Corpus corpus = procedural_corpus(6, 32, 1);
  TrainConfig tc;
  tc.steps = 60;
  tc.learning_rate = 3e-3f;
  tc.image_size = 32;
  const auto encoder = std::make_shared<const Encoder>(Encoder::random(EncoderSpec{4, {1, 1, 1, 1, 1}}, 2));
  const NetworkGraph ones = train_decoder(build_graph(ArchCode::all_ones(), encoder, 0), corpus, tc).graph;
  const NetworkGraph zeros = train_decoder(build_graph(ArchCode::all_zeros(), encoder, 0), corpus, tc).graph;
  const Tensor content = procedural_corpus(1, 32, 10).images[0];
  const Tensor style = procedural_corpus(1, 32, 11).images[0];
  const auto deep_gram = [&](const Tensor& x) { return metrics::gram_matrix(encoder->encode(x).taps[4]); };
  const auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  const auto gs = deep_gram(style);
  EXPECT_LT(dist(deep_gram(forward(ones, content, style, wct_config())), gs),
            dist(deep_gram(forward(zeros, content, style, wct_config())), gs));
}

TEST(Forward, AnySizeThroughPadding) {
  const NetworkGraph g = build_graph(ArchCode::all_zeros(), 4, 0);
  const Tensor content = image(20, 37, 12);
  EXPECT_EQ(forward_any_size(g, content, image(9, 9, 13), wct_config()).shape(), content.shape());
  const Tensor padded = reflect_pad_to_multiple(content, 16);
  EXPECT_EQ(padded.shape(), (Shape{3, 32, 48}));
  EXPECT_EQ(padded.at(1, 20, 0), content.at(1, 18, 0));
  EXPECT_EQ(padded.at(2, 0, 37), content.at(2, 0, 35));
  EXPECT_EQ(crop(padded, 20, 37), content);
  EXPECT_EQ(reflect_pad_to_multiple(image(16, 16, 1), 16), image(16, 16, 1));
}

TEST(Backward, EndToEndReconstructionGradient) {
  const NetworkGraph g = build_graph(ArchCode::all_ones(), 2, 4);
  // 32x32 keeps the 5th tap at 2x2; at 1x1 instance norm zeroes the whole bottleneck.
  const Tensor img = image(32, 32, 14);
  const EncoderFeatures feats = g.encoder->encode(img);
  const ProgramRun run = run_program(g, feats);
  Tensor grad(run.output().shape());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = 2.0f * (run.output()[i] - img[i]) / static_cast<float>(grad.size());
  const GradMap grads = backward_program(g, run, grad);
  EXPECT_EQ(grads.size(), g.decoder.size());
  Rng rng(5);
  for (const std::string name : {"bfa.conv", "dec4.conv", "skip3.merge", "dec1.aux2", "out.refine", "out.conv"}) {
    const nn::ConvLayer& layer = g.decoder.at(name);
    std::uniform_int_distribution<std::size_t> pick(0, layer.weight.size() - 1);
    // A probe counts only where the loss is smooth at this scale: FD at h and h/2 must agree.
    int accepted = 0;
    for (int probe = 0; probe < 6; ++probe) {
      const std::size_t i = pick(rng);
      const auto loss = [&](const Tensor& w) {
        NetworkGraph h = g;
        h.decoder.at(name).weight = w;
        return reconstruction_loss(h, img);
      };
      const double fd = oracle::central_difference(loss, layer.weight, i, 1e-3);
      const double fd_half = oracle::central_difference(loss, layer.weight, i, 5e-4);
      if (oracle::rel_err(fd, fd_half, 1e-5) > 5e-3) continue;
      ++accepted;
      EXPECT_LT(oracle::rel_err(grads.at(name).weight[i], fd, 1e-4), 1e-2) << name << "[" << i << "]";
    }
    EXPECT_GE(accepted, 3) << name;
  }
}

TEST(Flops, OrderingAndScaling) {
  const NetworkGraph zeros = build_graph(ArchCode::all_zeros(), 8, 0);
  const NetworkGraph ones = build_graph(ArchCode::all_ones(), 8, 0);
  EXPECT_LT(count_flops(zeros, 64, 64).total(), count_flops(ones, 64, 64).total());
  for (const NetworkGraph* g : {&zeros, &ones})
    EXPECT_EQ(count_flops(*g, 128, 256).conv_macs, 4 * count_flops(*g, 64, 128).conv_macs);
  EXPECT_THROW(count_flops(zeros, 30, 32), InputError);
}

TEST(Flops, PhotoNasToPhotoNetRatioAt256x128) {
  const FlopReport nas = count_flops(build_graph(parse_code(kPhotoNasCode), 64, 0), 128, 256);
  const FlopReport net = count_flops(build_graph(ArchCode::all_ones(), 64, 0), 128, 256);
  EXPECT_EQ(nas.total(), 6848217088u);
  EXPECT_EQ(net.total(), 68704960512u);
  EXPECT_NEAR(static_cast<double>(nas.total()) / static_cast<double>(net.total()), 0.0996757, 1e-6);
}
