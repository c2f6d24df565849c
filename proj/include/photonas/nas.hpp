#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "photonas/arch_code.hpp"
#include "photonas/graph.hpp"
#include "photonas/io.hpp"
#include "photonas/metrics.hpp"
#include "photonas/random.hpp"
#include "photonas/train.hpp"
#include "photonas/transfer.hpp"

namespace photonas::nas {

// ---------------------------------------------------------------------------
// Problem: encoder, corpus, validation pairs and the trained oracle.

struct ProblemConfig {
  int base_width = 4;
  int image_size = 32;
  int train_images = 8;
  int validation_pairs = 4;
  std::uint64_t data_seed = 0;  // encoder weights, corpus and validation images
  TrainConfig oracle_train{.steps = 300, .batch = 4, .learning_rate = 1e-3f, .seed = 0, .image_size = 32};
  // Candidates train with their own seed, so the all-ones candidate is not a copy of the oracle.
  TrainConfig candidate_train{.steps = 300, .batch = 4, .learning_rate = 1e-3f, .seed = 1, .image_size = 32};
  transfer::TransferConfig transfer;

  void validate() const;
};

/// The trained supervisory oracle and its cached stylizations of the validation pairs.
struct OracleCache {
  ProblemConfig problem;
  Corpus corpus;
  std::vector<Tensor> contents;
  std::vector<Tensor> styles;
  NetworkGraph oracle;
  std::vector<Tensor> outputs;
  std::vector<EncoderFeatures> output_features;
};

/// Builds the problem and trains the all-ones graph on it. Training divergence propagates.
OracleCache train_oracle(const ProblemConfig& problem);

/// Stylizations of every validation pair by `graph`.
std::vector<Tensor> stylize_pairs(const NetworkGraph& graph, const OracleCache& cache);

/// Objective of an already trained graph against the oracle.
metrics::EvalReport evaluate_graph(const NetworkGraph& graph, const OracleCache& cache,
                                   const metrics::ObjectiveWeights& weights);

// ---------------------------------------------------------------------------
// Candidates

enum class Status { kPending, kTrained, kFailed };
std::string to_string(Status status);

inline constexpr double kFailedLoss = std::numeric_limits<double>::infinity();

struct Candidate {
  ArchCode code;
  double loss = kFailedLoss;
  int gen = 0;
  int index = -1;   // position in history
  int parent = -1;  // history index of the tournament winner it was mutated from
  Status status = Status::kPending;
  metrics::EvalReport report;
};

/// Builds, trains (transfers disabled) and evaluates `code`. Any training or evaluation error
/// marks the candidate failed with loss +inf.
Candidate evaluate_candidate(const ArchCode& code, const OracleCache& cache, const TrainConfig& train,
                             const metrics::ObjectiveWeights& weights);

/// Maps a code to an evaluated candidate (gen and index are assigned by the search).
/// Must be safe to call from several threads.
using Evaluator = std::function<Candidate(const ArchCode&)>;

/// Thread-safe memo around an evaluator. Evaluation is deterministic per code, so a repeated
/// code is answered from the table.
class MemoEvaluator {
 public:
  explicit MemoEvaluator(Evaluator inner) : inner_(std::move(inner)) {}

  Candidate operator()(const ArchCode& code);
  std::size_t evaluations() const;
  std::size_t size() const;

 private:
  Evaluator inner_;
  mutable std::mutex mutex_;
  std::map<std::uint32_t, Candidate> table_;
  std::size_t evaluations_ = 0;
};

/// evaluate_candidate bound to an oracle, a training config and weights, memoized.
Evaluator desk_evaluator(const OracleCache& cache, const TrainConfig& train, const metrics::ObjectiveWeights& weights);

// ---------------------------------------------------------------------------
// Search

/// Codes are `frozen` with the bits of `free_mask` chosen by the search.
struct SearchSpace {
  std::uint32_t free_mask = ArchCode::all_ones().bits();
  ArchCode frozen = ArchCode::all_zeros();

  std::vector<int> free_slots() const;
  ArchCode random_code(Rng& rng) const;
  bool contains(const ArchCode& code) const;
};

struct SearchConfig {
  int population = 20;
  int budget = 40;
  int tournament_size = 0;  // 0 selects ceil(P/4), at least 2
  metrics::ObjectiveWeights weights;
  std::uint64_t seed = 0;
  int workers = 1;
  // Generation barriers: children of one generation are drawn from the same population
  // snapshot and inserted in draw order, so any worker count explores the same codes.
  bool strict = false;
  SearchSpace space;

  int effective_tournament_size() const;
  void validate() const;
};

inline constexpr int kMutationRetries = 100;

/// Flips one uniformly chosen free bit; redraws up to kMutationRetries times while the child
/// is in `seen`, then accepts the duplicate.
ArchCode mutate(const ArchCode& parent, const std::set<std::uint32_t>& seen, Rng& rng,
                const SearchSpace& space = {});

/// Uniform subset without replacement; minimum loss wins, ties go to the lower generation
/// index and then the lexicographically smaller code.
const Candidate& tournament_select(const std::vector<Candidate>& population, int tournament_size, Rng& rng);

struct SearchState {
  std::vector<Candidate> population;
  std::vector<Candidate> history;

  /// Lowest-loss trained candidate of the history (lower index on ties), or nullopt.
  std::optional<Candidate> best() const;
};

/// Called after each insertion with the new state, the inserted child and the evicted member
/// (absent during initialization).
using SearchObserver =
    std::function<void(const SearchState&, const Candidate& inserted, const std::optional<Candidate>& evicted)>;

struct SearchResult {
  std::vector<Candidate> history;
  std::optional<Candidate> best;
};

/// Aging evolution: P random codes, then tournament, mutate, evaluate, insert and evict the
/// member with the lowest (gen, index) until the history holds `budget` candidates.
SearchResult search(const SearchConfig& config, const Evaluator& evaluate, const SearchObserver& observer = {});

/// `budget` i.i.d. uniform codes under the same evaluation; argmin loss.
SearchResult random_search(const SearchConfig& config, const Evaluator& evaluate);

/// One CSV row per candidate: index,code,loss,E,P,O,gen,hamming_to_best,status.
void write_telemetry(std::ostream& out, const SearchResult& result);

/// Overrides config fields from key=value pairs (population, budget, tournament, alpha, beta,
/// gamma, seed, workers, strict, problem.*, train.*, oracle.*, transfer.*). Unknown keys throw.
void apply_config(const KeyValues& kv, SearchConfig& search, ProblemConfig& problem);

}  // namespace photonas::nas
