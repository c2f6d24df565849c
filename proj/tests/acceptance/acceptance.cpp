// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "photonas/cli.hpp"
#include "photonas/graph.hpp"
#include "photonas/io.hpp"
#include "photonas/metrics.hpp"
#include "photonas/nas.hpp"
#include "photonas/nn.hpp"
#include "photonas/train.hpp"
#include "photonas/transfer.hpp"

using namespace photonas;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed sub-check; the first few are kept in the detail text.
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || failures < 5) detail << " [failed: " << what << "]";
    pass = false;
    ++failures;
  }
  int failures = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string tmp_path(const std::string& name) {
  const fs::path dir = fs::path(PHOTONAS_TEST_TMP) / "acceptance";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::pair<int, std::string> run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int rc = cli_dispatch(args, out, err);
  return {rc, out.str() + err.str()};
}

double rel_frobenius(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Shared desk-scale problem. Candidate training is shortened (60 steps, lr 3e-3) so the
// searches fit a single core.

struct Desk {
  nas::ProblemConfig problem;
  std::unique_ptr<nas::OracleCache> cache;
  nas::Evaluator memo;
  nas::Evaluator evaluate;  // memo plus the per-report recomposition audit
  int reports = 0;
  int recomposition_violations = 0;
  double worst_recomposition = 0;

  Desk() {
    problem.oracle_train.learning_rate = 3e-3f;
    problem.candidate_train.steps = 60;
    problem.candidate_train.learning_rate = 3e-3f;
    cache = std::make_unique<nas::OracleCache>(nas::train_oracle(problem));
    memo = nas::desk_evaluator(*cache, problem.candidate_train, {});
    evaluate = [this](const ArchCode& code) {
      nas::Candidate c = memo(code);
      if (c.status == nas::Status::kTrained) {
        ++reports;
        const double d = std::abs(c.report.recomposed_loss() - c.loss);
        worst_recomposition = std::max(worst_recomposition, d);
        recomposition_violations += d > 1e-9;
      }
      return c;
    };
  }
};

Desk& desk() {
  static Desk d;
  return d;
}

// ---------------------------------------------------------------------------

Outcome wct_correctness() {
  Outcome o;
  transfer::TransferConfig cfg;
  cfg.epsilon = 0.0f;
  const int channels[] = {2, 4, 8}, pixels[] = {50, 200};
  int fixtures = 0;
  double worst_mean = 0, worst_cov = 0, worst_identity = 0;
  for (; fixtures < 20; ++fixtures) {
    const int c = channels[fixtures % 3], hw = pixels[(fixtures / 3) % 2];
    const std::uint64_t seed = 1000 + 17 * static_cast<std::uint64_t>(fixtures);
    const Tensor content = oracle::random_tensor({c, 1, hw}, seed, -1.0f, 2.0f);
    const Tensor style = oracle::random_tensor({c, 1, hw}, seed + 1, -0.5f, 1.5f);
    const Tensor out = transfer::apply(content, style, cfg);
    const oracle::Moments ms = oracle::moments(style), mo = oracle::moments(out);
    for (int i = 0; i < c; ++i) worst_mean = std::max(worst_mean, std::abs(mo.mean[i] - ms.mean[i]));
    worst_cov = std::max(worst_cov, rel_frobenius(mo.cov, ms.cov));
    const Tensor self = transfer::apply(content, content, cfg);
    worst_identity = std::max(worst_identity, static_cast<double>(max_abs_diff(self, content)));
  }
  o.require(fixtures == 20, "fixture count");
  o.require(worst_mean < 1e-4, "mean");
  o.require(worst_cov < 1e-3, "covariance");
  o.require(worst_identity < 1e-3, "identity");
  o.detail << "fixtures=" << fixtures << " max_mean_err=" << worst_mean << " max_cov_rel=" << worst_cov
           << " max_identity_err=" << worst_identity;
  return o;
}

Outcome gradient_suite() {
  Outcome o;
  double worst_op = 0, worst_e2e = 0;
  const auto track = [&](double err, const std::string& what, double tol, double& worst) {
    worst = std::max(worst, err);
    o.require(err < tol, what);
  };
  // d<g, op(x)>/dx at every input position.
  const auto check_op = [&](const std::string& name, const std::function<Tensor(const Tensor&)>& op,
                            const std::function<Tensor(const Tensor&, const Tensor&)>& backward, const Tensor& x,
                            std::uint64_t seed, double step = 1e-3) {
    const Tensor g = oracle::random_tensor(op(x).shape(), seed);
    const Tensor analytic = backward(x, g);
    const auto f = [&](const Tensor& xp) { return oracle::dot(g, op(xp)); };
    for (std::size_t i = 0; i < x.size(); ++i)
      track(oracle::rel_err(analytic[i], oracle::central_difference(f, x, i, step)), name, 1e-3, worst_op);
  };
  // Conv objectives go through the double oracle so float round-off does not dominate.
  const nn::ConvLayer layer{oracle::random_tensor({4, 3, 3, 3}, 1), oracle::random_tensor({4}, 2)};
  const Tensor cx = oracle::random_tensor({3, 5, 6}, 3), cg = oracle::random_tensor({4, 5, 6}, 4);
  const nn::ConvGrads grads = nn::conv_backward(layer, cx, cg);
  const auto fx = [&](const Tensor& x) { return oracle::dot(cg, oracle::naive_conv_double(layer, x)); };
  const auto fw = [&](const Tensor& w) { return oracle::dot(cg, oracle::naive_conv_double({w, layer.bias}, cx)); };
  const auto fb = [&](const Tensor& b) { return oracle::dot(cg, oracle::naive_conv_double({layer.weight, b}, cx)); };
  for (std::size_t i = 0; i < cx.size(); ++i)
    track(oracle::rel_err(grads.grad_x[i], oracle::central_difference(fx, cx, i)), "conv x", 1e-3, worst_op);
  for (std::size_t i = 0; i < layer.weight.size(); ++i)
    track(oracle::rel_err(grads.grad_w[i], oracle::central_difference(fw, layer.weight, i)), "conv w", 1e-3, worst_op);
  for (std::size_t i = 0; i < layer.bias.size(); ++i)
    track(oracle::rel_err(grads.grad_b[i], oracle::central_difference(fb, layer.bias, i)), "conv b", 1e-3, worst_op);
  track(static_cast<double>(max_abs_diff(nn::conv_forward(layer, cx), oracle::naive_conv(layer, cx))) > 1e-5 ? 1.0 : 0.0,
        "conv forward vs oracle", 0.5, worst_op);

  Tensor rx = oracle::random_tensor({2, 5, 5}, 5);
  for (float& v : rx.data())
    if (std::abs(v) < 0.01f) v = 0.5f;  // keep probes off the kink
  check_op("relu", [](const Tensor& t) { return nn::relu(t); },
           [](const Tensor& t, const Tensor& g) { return nn::relu_backward(t, g); }, rx, 6);
  check_op("maxpool", [](const Tensor& t) { return nn::maxpool2(t).pooled; },
           [](const Tensor& t, const Tensor& g) { return nn::unpool(nn::maxpool2(t), g); },
           oracle::random_tensor({2, 6, 6}, 7), 8);
  check_op("upsample", [](const Tensor& t) { return nn::upsample_nearest(t); },
           [](const Tensor&, const Tensor& g) { return nn::upsample_nearest_backward(g); },
           oracle::random_tensor({3, 3, 5}, 9), 10);
  check_op("instance_norm", [](const Tensor& t) { return nn::instance_norm(t); },
           [](const Tensor& t, const Tensor& g) { return nn::instance_norm_backward(t, g); },
           oracle::random_tensor({3, 4, 5}, 11), 12, 1e-2);  // smooth: a wider step keeps float noise down
  check_op("resize", [](const Tensor& t) { return nn::resize_nearest(t, 3, 2); },
           [](const Tensor&, const Tensor& g) { return nn::resize_nearest_backward(g, 8, 8); },
           oracle::random_tensor({2, 8, 8}, 13), 14);
  check_op("concat", [](const Tensor& t) { return nn::concat_channels({t, 2.0f * t}); },
           [](const Tensor&, const Tensor& g) {
             const auto parts = nn::split_channels(g, {2, 2});
             return parts[0] + 2.0f * parts[1];
           },
           oracle::random_tensor({2, 3, 3}, 15), 16);

  // End to end: reconstruction loss of a 16x16 image through the all-ones decoder.
  const NetworkGraph g = build_graph(ArchCode::all_ones(), 2, 6);
  const Tensor img = oracle::random_tensor({3, 16, 16}, 17, 0.0f, 1.0f);
  const ProgramRun run = run_program(g, g.encoder->encode(img));
  Tensor grad(run.output().shape());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = 2.0f * (run.output()[i] - img[i]) / static_cast<float>(grad.size());
  const GradMap dec = backward_program(g, run, grad);
  Rng rng(18);
  int probes = 0;
  for (const auto& [name, conv] : g.decoder) {
    std::uniform_int_distribution<std::size_t> pick(0, conv.weight.size() - 1);
    for (int p = 0; p < 4; ++p) {
      const std::size_t i = pick(rng);
      const auto loss = [&](const Tensor& w) {
        NetworkGraph h = g;
        h.decoder.at(name).weight = w;
        return reconstruction_loss(h, img);
      };
      const double fd = oracle::central_difference(loss, conv.weight, i, 1e-2);
      // Probes whose FD estimate moves with the step straddle a ReLU kink.
      if (oracle::rel_err(fd, oracle::central_difference(loss, conv.weight, i, 5e-3), 1e-5) > 5e-3) continue;
      ++probes;
      track(oracle::rel_err(dec.at(name).weight[i], fd, 1e-4), "e2e " + name, 1e-2, worst_e2e);
    }
  }
  o.require(probes >= 40, "too few smooth end-to-end probes");
  o.detail << "max_op_rel=" << worst_op << " max_e2e_rel=" << worst_e2e << " e2e_probes=" << probes;
  return o;
}

Outcome architecture_decoding() {
  Outcome o;
  Rng rng(21);
  int roundtrip_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const ArchCode c = ArchCode::from_bits(static_cast<std::uint32_t>(rng()));
    roundtrip_bad += ArchCode::parse(c.to_string()) != c;
  }
  o.require(roundtrip_bad == 0, "round trip");
  const ArchCode nas = parse_code(kPhotoNasCode);
  o.require(nas.popcount() == 7, "popcount");
  o.require(op_fraction(nas) == 7.0 / 31.0, "O");
  const Tensor content = oracle::random_tensor({3, 64, 64}, 22, 0.0f, 1.0f);
  const Tensor style = oracle::random_tensor({3, 64, 64}, 23, 0.0f, 1.0f);
  for (const ArchCode& code : {ArchCode::all_zeros(), ArchCode::all_ones()}) {
    const Tensor out = forward(build_graph(code, 8, 0), content, style, {});
    o.require(out.shape() == content.shape(), "forward shape " + code.to_string());
    o.require(std::all_of(out.data().begin(), out.data().end(), [](float v) { return v >= 0 && v <= 1; }), "range");
  }
  int monotone_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const std::uint32_t big = static_cast<std::uint32_t>(rng());
    const ArchCode b = ArchCode::from_bits(big), a = ArchCode::from_bits(big & static_cast<std::uint32_t>(rng()));
    const auto sa = build_graph(a, 2, 0).op_set(), sb = build_graph(b, 2, 0).op_set();
    monotone_bad += !std::includes(sb.begin(), sb.end(), sa.begin(), sa.end());
  }
  o.require(monotone_bad == 0, "monotone op sets");
  o.detail << "roundtrip_failures=" << roundtrip_bad << " photonas_popcount=" << nas.popcount()
           << " monotone_failures=" << monotone_bad;
  return o;
}

// Observer asserting the aging invariants after every insertion.
struct AgingAudit {
  int population = 0;
  std::vector<nas::Candidate> before;
  std::size_t last_history = 0;
  double running_best = nas::kFailedLoss;
  int steps = 0, violations = 0;

  nas::SearchObserver observer() {
    return [this](const nas::SearchState& s, const nas::Candidate& child, const std::optional<nas::Candidate>& evicted) {
      ++steps;
      violations += s.history.size() != last_history + 1;
      last_history = s.history.size();
      const auto best = s.best();
      if (best) {
        violations += best->loss > running_best;
        running_best = best->loss;
      }
      if (evicted) {
        violations += static_cast<int>(s.population.size()) != population;
        for (const nas::Candidate& m : before)
          violations += std::pair(m.gen, m.index) < std::pair(evicted->gen, evicted->index);
        const nas::Candidate& parent = s.history.at(static_cast<std::size_t>(child.parent));
        violations += hamming(parent.code, child.code) != 1;
      }
      before = s.population;
    };
  }
};

Outcome search_correctness() {
  Outcome o;
  Desk& d = desk();
  nas::SearchSpace space;
  space.frozen = ArchCode::all_ones();
  space.free_mask = 0;
  for (int s : {4, 13, 14, 15, 16, 17, 18, 19}) {
    space.free_mask |= 1u << s;
    space.frozen = space.frozen.with(s, false);
  }
  double optimum = nas::kFailedLoss;
  for (std::uint32_t m = 0; m < 256; ++m) {
    ArchCode code = space.frozen;
    int bit = 0;
    for (int s : space.free_slots()) code = code.with(s, (m >> bit++) & 1u);
    optimum = std::min(optimum, d.evaluate(code).loss);
  }
  int hits = 0, violations = 0, steps = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    nas::SearchConfig cfg;
    cfg.population = 8;
    cfg.budget = 64;
    cfg.tournament_size = 4;
    cfg.seed = seed;
    cfg.space = space;
    AgingAudit audit;
    audit.population = cfg.population;
    const nas::SearchResult r = nas::search(cfg, d.evaluate, audit.observer());
    hits += r.best && r.best->loss <= optimum + 1e-6;
    violations += audit.violations;
    steps += audit.steps;
  }
  o.require(hits >= 18, "optimum hits");
  o.require(violations == 0, "aging invariants");
  o.detail << "hits=" << hits << "/20 optimum_L=" << optimum << " invariant_checks_steps=" << steps
           << " violations=" << violations << " (P=8 C=64 tournament=4)";
  return o;
}

struct PairedRuns {
  std::vector<nas::SearchResult> evolved, random;
};

PairedRuns& paired_runs() {
  static PairedRuns runs = [] {
    PairedRuns r;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      nas::SearchConfig cfg;
      cfg.population = 20;
      cfg.budget = 40;
      cfg.seed = seed;
      r.evolved.push_back(nas::search(cfg, desk().evaluate));
      r.random.push_back(nas::random_search(cfg, desk().evaluate));
    }
    return r;
  }();
  return runs;
}

Outcome search_vs_random() {
  Outcome o;
  const PairedRuns& runs = paired_runs();
  int wins = 0;
  double mean_evo = 0, mean_rnd = 0;
  for (std::size_t i = 0; i < runs.evolved.size(); ++i) {
    wins += runs.evolved[i].best->loss <= runs.random[i].best->loss;
    mean_evo += runs.evolved[i].best->loss / 10;
    mean_rnd += runs.random[i].best->loss / 10;
  }
  o.require(wins >= 8, "paired wins");
  o.detail << "wins=" << wins << "/10 mean_best_L evolved=" << mean_evo << " random=" << mean_rnd
           << " (P=20 C=40 tournament=5)";
  return o;
}

Outcome op_fraction_trend() {
  Outcome o;
  const PairedRuns& runs = paired_runs();
  double first = 0, last = 0;
  for (std::size_t s = 0; s < 5; ++s) {
    const auto& h = runs.evolved[s].history;
    for (std::size_t i = 0; i < 20; ++i) {
      first += h[i].report.op_fraction / 100;
      last += h[h.size() - 20 + i].report.op_fraction / 100;
    }
  }
  o.require(last <= first, "trend");
  o.detail << "mean_O first_P=" << first << " last_P=" << last << " (5 seeds)";
  return o;
}

Outcome pruning_benefit() {
  Outcome o;
  const PairedRuns& runs = paired_runs();
  const nas::Candidate* best = nullptr;
  for (const auto& r : runs.evolved)
    if (!best || r.best->loss < best->loss) best = &*r.best;
  const nas::Candidate ones = desk().evaluate(ArchCode::all_ones());
  const double ep_best = best->report.recon_error + best->report.perceptual;
  const double ep_ones = ones.report.recon_error + ones.report.perceptual;
  const int width = desk().problem.base_width;
  const auto flops_best = count_flops(build_graph(best->code, width, 0), 128, 256).total();
  const auto flops_ones = count_flops(build_graph(ArchCode::all_ones(), width, 0), 128, 256).total();
  o.require(flops_best < flops_ones, "flops");
  o.require(ep_best <= 1.1 * ep_ones, "E+P");

  const auto bench = [&](const std::string& arch) {
    const auto [rc, text] = run_cli({"bench", "--arch", arch, "--height", "128", "--width", "256", "--reps", "5"});
    o.require(rc == 0, "bench " + arch);
    return rc == 0 ? std::stod(parse_key_values(text).at("median_ms")) : 0.0;
  };
  const double net_ms = bench("photonet"), nas_ms = bench("photonas");
  o.require(nas_ms > 0 && net_ms >= 1.5 * nas_ms, "bench speedup");
  o.detail << "best=" << best->code.to_string() << " L=" << best->loss << " E+P=" << ep_best
           << " all_ones_E+P=" << ep_ones << " flops=" << flops_best << "/" << flops_ones
           << " bench_ms photonet=" << net_ms << " photonas=" << nas_ms << " speedup=" << net_ms / nas_ms;
  return o;
}

Outcome metrics_sanity() {
  Outcome o;
  const Encoder& enc = *desk().cache->oracle.encoder;
  double worst_ssim = 0;
  int ssim_one = 0, gram_zero = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor x = oracle::random_tensor({3, 32, 32}, 40 + seed, 0.0f, 1.0f);
    Tensor y = x;
    const Tensor n = oracle::random_tensor({3, 32, 32}, 50 + seed, -0.3f, 0.3f);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i] + n[i], 0.0f, 1.0f);
    ssim_one += metrics::ssim(x, x) == 1.0;
    gram_zero += metrics::gram_loss(x, x, enc) == 0.0;
    worst_ssim = std::max(worst_ssim, std::abs(metrics::ssim(x, y) - oracle::direct_ssim(x, y)));
  }
  o.require(ssim_one == 5, "ssim(x,x)");
  o.require(gram_zero == 5, "gram(x,x)");
  o.require(worst_ssim < 1e-6, "ssim oracle");
  o.require(desk().reports > 0 && desk().recomposition_violations == 0, "recomposition");
  o.detail << "ssim_oracle_max_diff=" << worst_ssim << " reports_audited=" << desk().reports
           << " recomposition_max_diff=" << desk().worst_recomposition;
  return o;
}

Outcome determinism() {
  Outcome o;
  const std::string cfg = tmp_path("det.cfg");
  {
    std::ofstream out(cfg);
    out << "population=4\nbudget=8\noracle.steps=20\ntrain.steps=10\nproblem.train_images=4\nproblem.validation_pairs=2\n";
  }
  write_ppm(procedural_corpus(1, 48, 60).images[0], tmp_path("content.ppm"));
  write_ppm(procedural_corpus(1, 32, 61).images[0], tmp_path("style.ppm"));
  // Same paths both times so the echoed key=value lines compare too.
  const std::vector<std::string> files{tmp_path("tel.csv"), tmp_path("ckpt.pnwt"), tmp_path("loss.csv"), tmp_path("styl.ppm")};
  std::vector<std::string> outputs;
  for (int run = 0; run < 2; ++run) {
    for (const std::string& f : files) fs::remove(f);
    const auto s = run_cli({"search", "--config", cfg, "--seed", "3", "--workers", "1", "--telemetry", files[0]});
    const auto t = run_cli({"train-decoder", "--arch", "photonas", "--base-width", "4", "--procedural", "4", "--image-size",
                            "32", "--steps", "20", "--seed", "3", "--out", files[1], "--loss-csv", files[2]});
    const auto st = run_cli({"stylize", "--weights", files[1], "--content", tmp_path("content.ppm"), "--style",
                             tmp_path("style.ppm"), "--out", files[3]});
    o.require(s.first == 0 && t.first == 0 && st.first == 0, "cli run " + std::to_string(run));
    std::string all = s.second + t.second + st.second;
    for (const std::string& f : files) {
      o.require(fs::exists(f), "missing " + f);
      all += read_file(f);
    }
    outputs.push_back(std::move(all));
  }
  o.require(outputs[0] == outputs[1], "bit identity");
  o.detail << "compared_bytes=" << outputs[0].size() << " (search stdout+telemetry, checkpoint, loss trace, stylized image)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  std::cout << std::setprecision(6);
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"WCT correctness", wct_correctness},
      {"Gradient suite", gradient_suite},
      {"Architecture decoding", architecture_decoding},
      {"Search correctness", search_correctness},
      {"Search-vs-random direction", search_vs_random},
      {"Pruning benefit", pruning_benefit},
      {"Metrics sanity", metrics_sanity},
      {"Determinism", determinism},
      {"Op-fraction trend (supplementary)", op_fraction_trend},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && c.name.find(only) == std::string::npos) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.name << "  (" << std::fixed << std::setprecision(1)
              << seconds_since(t0) << " s)  " << std::defaultfloat << std::setprecision(6) << o.detail.str() << std::endl;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
