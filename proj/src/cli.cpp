#include "photonas/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "photonas/arch_code.hpp"
#include "photonas/errors.hpp"
#include "photonas/graph.hpp"
#include "photonas/io.hpp"
#include "photonas/metrics.hpp"
#include "photonas/nas.hpp"
#include "photonas/random.hpp"
#include "photonas/train.hpp"

namespace photonas {

namespace {

namespace fs = std::filesystem;

// Result printer: one key=value per line, reals at full precision.
class Report {
 public:
  explicit Report(std::ostream& out) : out_(out) { out_ << std::setprecision(10); }
  template <typename T>
  void put(const std::string& key, const T& value) {
    out_ << key << '=' << value << '\n';
  }

 private:
  std::ostream& out_;
};

struct EncoderOptions {
  int base_width = 8;
  std::string layout = "compact";
  std::string encoder_path;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--base-width", base_width, "Encoder base width C (stage widths C,2C,4C,8C,8C)")
        ->check(CLI::Range(2, 512));
    app->add_option("--encoder-layout", layout, "compact (one conv per stage) or vgg19")
        ->check(CLI::IsMember({"compact", "vgg19"}));
    app->add_option("--encoder", encoder_path, "Encoder weights file (enc.stageK.convJ tensors)")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Seed for random weights");
  }

  EncoderSpec spec() const {
    if (layout == "vgg19") return EncoderSpec::vgg19(base_width);
    EncoderSpec s;
    s.base_width = base_width;
    return s;
  }

  std::shared_ptr<const Encoder> make() const {
    if (!encoder_path.empty()) return std::make_shared<const Encoder>(load_encoder(encoder_path, spec()));
    return std::make_shared<const Encoder>(Encoder::random(spec(), derive_seed(seed, "encoder")));
  }
};

struct GraphOptions {
  std::string arch = "photonet";
  std::string weights;
  EncoderOptions encoder;
  CLI::Option* arch_option = nullptr;

  void add_to(CLI::App* app) {
    arch_option = app->add_option("--arch", arch, "31-char code or preset (" + join_presets() + ")");
    app->add_option("--weights", weights, "Graph checkpoint written by train-decoder")->check(CLI::ExistingFile);
    encoder.add_to(app);
  }

  static std::string join_presets() {
    std::string s;
    for (const auto& p : preset_names()) s += (s.empty() ? "" : ", ") + p;
    return s;
  }

  NetworkGraph make() const {
    if (!weights.empty()) {
      NetworkGraph g = load_graph(weights);
      if (arch_option->count() > 0 && resolve_arch(arch) != g.code)
        throw InputError("--arch " + arch + " does not match checkpoint code " + g.code.to_string());
      return g;
    }
    return build_graph(resolve_arch(arch), encoder.make(), encoder.seed);
  }
};

struct TransferOptions {
  float epsilon = 0.3f;
  float blend = 1.0f;
  std::string kind = "wct";

  void add_to(CLI::App* app) {
    app->add_option("--epsilon", epsilon, "Whitening regularizer")->check(CLI::NonNegativeNumber);
    app->add_option("--blend", blend, "Transfer strength in [0,1]")->check(CLI::Range(0.0, 1.0));
    app->add_option("--transfer", kind, "Transfer module")->check(CLI::IsMember({"wct", "adain"}));
  }

  transfer::TransferConfig make() const {
    transfer::TransferConfig c;
    c.epsilon = epsilon;
    c.blend = blend;
    c.kind = transfer::parse_module_kind(kind);
    return c;
  }
};

std::string join_slots(const std::vector<int>& slots) {
  std::string s;
  for (int i : slots) s += (s.empty() ? "S" : ",S") + std::to_string(i);
  return s;
}

std::vector<fs::path> ppm_files(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

Tensor random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  return uniform_tensor({3, h, w}, 0.0f, 1.0f, rng);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void print_candidate(Report& r, const std::string& prefix, const nas::Candidate& c) {
  r.put(prefix + "code", c.code.to_string());
  r.put(prefix + "loss", c.loss);
  r.put(prefix + "E", c.report.recon_error);
  r.put(prefix + "P", c.report.perceptual);
  r.put(prefix + "O", c.report.op_fraction);
  r.put(prefix + "popcount", c.code.popcount());
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photorealistic style transfer engine and architecture search", "photonas"};
  app.require_subcommand(1);
  Report report(out);

  // stylize
  auto* stylize = app.add_subcommand("stylize", "Stylize a content photo with a style photo");
  std::string content_path, style_path, out_path;
  GraphOptions stylize_graph;
  TransferOptions stylize_transfer;
  stylize->add_option("--content", content_path, "Content image (PPM)")->required()->check(CLI::ExistingFile);
  stylize->add_option("--style", style_path, "Style image (PPM)")->required()->check(CLI::ExistingFile);
  stylize->add_option("--out", out_path, "Output image (PPM)")->required();
  stylize_graph.add_to(stylize);
  stylize_transfer.add_to(stylize);

  // train-decoder
  auto* train = app.add_subcommand("train-decoder", "Train a decoder by image reconstruction");
  GraphOptions train_graph;
  TrainConfig train_config;
  std::string corpus_dir, checkpoint_path, loss_csv;
  int procedural = 16;
  train_graph.add_to(train);
  train->add_option("--corpus", corpus_dir, "Directory of PPM training images")->check(CLI::ExistingDirectory);
  train->add_option("--procedural", procedural, "Procedural corpus size when --corpus is absent")
      ->check(CLI::PositiveNumber);
  train->add_option("--image-size", train_config.image_size, "Procedural image size");
  train->add_option("--steps", train_config.steps, "Optimizer steps");
  train->add_option("--batch", train_config.batch, "Batch size");
  train->add_option("--lr", train_config.learning_rate, "Adam learning rate");
  train->add_option("--train-seed", train_config.seed, "Training seed (batch order and corpus)");
  train->add_option("--out", checkpoint_path, "Checkpoint output path")->required();
  train->add_option("--loss-csv", loss_csv, "Write the per-step loss trace here");

  // search / random-search
  std::string config_path, telemetry_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> workers_override, budget_override;
  const auto add_search_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed_override, "Search seed");
    sub->add_option("--workers", workers_override, "Parallel evaluations");
    sub->add_option("--budget", budget_override, "Total candidates evaluated");
    sub->add_option("--telemetry", telemetry_path, "Per-candidate CSV output");
  };
  auto* search = app.add_subcommand("search", "Aging-evolution architecture search");
  add_search_options(search);
  auto* random_search = app.add_subcommand("random-search", "Random architecture search baseline");
  add_search_options(random_search);

  // eval-metrics
  auto* eval = app.add_subcommand("eval-metrics", "SSIM-Whole, SSIM-Edge and Gram loss of a result");
  std::string result_path;
  EncoderOptions eval_encoder;
  eval->add_option("--content", content_path, "Content image (PPM)")->required()->check(CLI::ExistingFile);
  eval->add_option("--style", style_path, "Style image (PPM)")->required()->check(CLI::ExistingFile);
  eval->add_option("--result", result_path, "Stylized image (PPM)")->required()->check(CLI::ExistingFile);
  eval_encoder.add_to(eval);

  // decode-arch
  auto* decode = app.add_subcommand("decode-arch", "Show the operators selected by a code");
  std::string decode_arch;
  int flop_h = 128, flop_w = 256, decode_width = 64;
  decode->add_option("code", decode_arch, "31-char code or preset")->required();
  decode->add_option("--height", flop_h, "Image height for the flop count");
  decode->add_option("--width", flop_w, "Image width for the flop count");
  decode->add_option("--base-width", decode_width, "Encoder base width for the flop count")->check(CLI::Range(2, 512));

  // bench
  auto* bench = app.add_subcommand("bench", "Time forward passes");
  GraphOptions bench_graph;
  TransferOptions bench_transfer;
  int bench_h = 128, bench_w = 256, reps = 5;
  bench_graph.add_to(bench);
  bench_transfer.add_to(bench);
  bench->add_option("--height", bench_h, "Image height");
  bench->add_option("--width", bench_w, "Image width");
  bench->add_option("--reps", reps, "Repetitions")->check(CLI::PositiveNumber);

  // frames
  auto* frames = app.add_subcommand("frames", "Stylize every frame of a directory with one style");
  std::string frames_dir, frames_out;
  GraphOptions frames_graph;
  TransferOptions frames_transfer;
  frames->add_option("--frames", frames_dir, "Directory of PPM frames")->required()->check(CLI::ExistingDirectory);
  frames->add_option("--style", style_path, "Style image (PPM)")->required()->check(CLI::ExistingFile);
  frames->add_option("--out", frames_out, "Output directory")->required();
  frames_graph.add_to(frames);
  frames_transfer.add_to(frames);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (stylize->parsed()) {
      const NetworkGraph graph = stylize_graph.make();
      const Tensor result =
          forward_any_size(graph, read_ppm(content_path), read_ppm(style_path), stylize_transfer.make());
      write_ppm(result, out_path);
      report.put("out", out_path);
      report.put("code", graph.code.to_string());
      report.put("transfer_sites", graph.transfer_sites.size());
    } else if (train->parsed()) {
      const NetworkGraph graph = train_graph.make();
      const Corpus corpus = corpus_dir.empty()
                                ? procedural_corpus(procedural, train_config.image_size, derive_seed(train_config.seed, "corpus"))
                                : directory_corpus(corpus_dir);
      const TrainResult result = train_decoder(graph, corpus, train_config);
      save_graph(result.graph, checkpoint_path);
      if (!loss_csv.empty()) {
        std::ofstream csv(loss_csv);
        if (!csv) throw InputError("cannot write " + loss_csv);
        csv << std::setprecision(9) << "step,loss\n";
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i) csv << i + 1 << ',' << result.loss_trace[i] << '\n';
      }
      report.put("out", checkpoint_path);
      report.put("code", result.graph.code.to_string());
      report.put("steps", result.loss_trace.size());
      report.put("initial_loss", result.loss_trace.front());
      report.put("final_loss", result.loss_trace.back());
      report.put("psnr", reconstruction_psnr(result.graph, corpus));
    } else if (search->parsed() || random_search->parsed()) {
      nas::SearchConfig sc;
      nas::ProblemConfig pc;
      if (!config_path.empty()) nas::apply_config(read_key_values(config_path), sc, pc);
      if (seed_override) sc.seed = *seed_override;
      if (workers_override) sc.workers = *workers_override;
      if (budget_override) sc.budget = *budget_override;
      const bool evolve = search->parsed();
      if (evolve) sc.validate();
      const nas::OracleCache cache = nas::train_oracle(pc);
      const nas::Evaluator evaluate = nas::desk_evaluator(cache, pc.candidate_train, sc.weights);
      const nas::SearchResult result = evolve ? nas::search(sc, evaluate) : nas::random_search(sc, evaluate);
      if (!telemetry_path.empty()) {
        std::ofstream csv(telemetry_path);
        if (!csv) throw InputError("cannot write " + telemetry_path);
        nas::write_telemetry(csv, result);
      }
      report.put("evaluated", result.history.size());
      report.put("failed", std::count_if(result.history.begin(), result.history.end(),
                                         [](const nas::Candidate& c) { return c.status == nas::Status::kFailed; }));
      if (!result.best) throw DivergedError(0);
      print_candidate(report, "best_", *result.best);
      report.put("best", result.best->code.to_string());
    } else if (eval->parsed()) {
      const Tensor content = read_ppm(content_path), style = read_ppm(style_path), result = read_ppm(result_path);
      require_image(content, "content image");
      require_image(style, "style image");
      require_image(result, "result image");
      const auto encoder = eval_encoder.make();
      report.put("ssim_whole", metrics::ssim(result, content));
      report.put("ssim_edge", metrics::ssim_edge(result, content));
      report.put("gram_loss", metrics::gram_loss(result, style, *encoder));
    } else if (decode->parsed()) {
      const ArchCode code = resolve_arch(decode_arch);
      const NetworkGraph graph = build_graph(code, decode_width, 0);
      report.put("code", code.to_string());
      report.put("active_count", code.popcount());
      report.put("active_slots", join_slots(graph.active_slots()));
      for (int s : graph.active_slots()) report.put("slot.S" + std::to_string(s), slot_name(s));
      report.put("inert_slots", join_slots(graph.inert_slots()));
      report.put("op_fraction", op_fraction(code));
      report.put("transfer_sites", graph.transfer_sites.size());
      const FlopReport flops = count_flops(graph, flop_h, flop_w);
      report.put("flops", flops.total());
      report.put("conv_macs", flops.conv_macs);
    } else if (bench->parsed()) {
      const NetworkGraph graph = bench_graph.make();
      const Tensor content = random_image(bench_h, bench_w, derive_seed(bench_graph.encoder.seed, "bench.content"));
      const Tensor style = random_image(bench_h, bench_w, derive_seed(bench_graph.encoder.seed, "bench.style"));
      const transfer::TransferConfig tc = bench_transfer.make();
      std::vector<double> ms;
      for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const Tensor result = forward(graph, content, style, tc);
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      report.put("code", graph.code.to_string());
      report.put("reps", reps);
      report.put("median_ms", median(ms));
      report.put("min_ms", *std::min_element(ms.begin(), ms.end()));
      report.put("flops", count_flops(graph, bench_h, bench_w).total());
    } else if (frames->parsed()) {
      const NetworkGraph graph = frames_graph.make();
      const Tensor style = read_ppm(style_path);
      const transfer::TransferConfig tc = frames_transfer.make();
      const auto files = ppm_files(frames_dir);
      if (files.empty()) throw InputError("no .ppm frames in " + frames_dir);
      fs::create_directories(frames_out);
      for (const auto& f : files) write_ppm(forward_any_size(graph, read_ppm(f.string()), style, tc), (fs::path(frames_out) / f.filename()).string());
      report.put("frames", files.size());
      report.put("out", frames_out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace photonas
