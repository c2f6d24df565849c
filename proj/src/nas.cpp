#include "photonas/nas.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <thread>

#include "photonas/errors.hpp"

namespace photonas::nas {

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first exception.
template <typename Fn>
void parallel_for(int n, int workers, Fn fn) {
  const int threads = std::clamp(workers, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

bool older(const Candidate& a, const Candidate& b) {
  return a.gen != b.gen ? a.gen < b.gen : a.index < b.index;
}

bool better(const Candidate& a, const Candidate& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  if (a.gen != b.gen) return a.gen < b.gen;
  return a.code < b.code;
}

// Inserts into population and history, evicting the oldest when over capacity.
std::optional<Candidate> insert(SearchState& state, Candidate child, int capacity) {
  child.index = static_cast<int>(state.history.size());
  state.history.push_back(child);
  state.population.push_back(std::move(child));
  if (static_cast<int>(state.population.size()) <= capacity) return std::nullopt;
  const auto oldest = std::min_element(state.population.begin(), state.population.end(), older);
  Candidate evicted = *oldest;
  state.population.erase(oldest);
  return evicted;
}

int generation_of(int k, int population) { return k < population ? 0 : 1 + (k - population) / population; }

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size() || v.starts_with('-')) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("config key " + key + ": expected a non-negative integer, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  const std::uint64_t x = parse_u64(key, v);
  if (x > 1000000000ull) throw InputError("config key " + key + ": value too large");
  return static_cast<int>(x);
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("config key " + key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw InputError("config key " + key + ": expected true/false, got '" + v + "'");
}

bool apply_train_key(const std::string& field, const std::string& key, const std::string& v, TrainConfig& t) {
  if (field == "steps") t.steps = parse_int(key, v);
  else if (field == "batch") t.batch = parse_int(key, v);
  else if (field == "lr") t.learning_rate = static_cast<float>(parse_real(key, v));
  else if (field == "seed") t.seed = parse_u64(key, v);
  else return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Problem and oracle

void ProblemConfig::validate() const {
  if (base_width < 2) throw PreconditionError("problem base width must be >= 2");
  if (image_size < kSizeMultiple || image_size % kSizeMultiple != 0)
    throw PreconditionError("problem image size must be a positive multiple of 16");
  if (train_images < 1 || validation_pairs < 1) throw PreconditionError("problem needs training and validation images");
  oracle_train.validate();
  candidate_train.validate();
  transfer.validate();
}

OracleCache train_oracle(const ProblemConfig& problem) {
  problem.validate();
  OracleCache cache;
  cache.problem = problem;
  EncoderSpec spec;
  spec.base_width = problem.base_width;
  auto encoder =
      std::make_shared<const Encoder>(Encoder::random(spec, derive_seed(problem.data_seed, "encoder")));
  cache.corpus = procedural_corpus(problem.train_images, problem.image_size, derive_seed(problem.data_seed, "corpus"));
  cache.contents = procedural_corpus(problem.validation_pairs, problem.image_size,
                                     derive_seed(problem.data_seed, "validation.content"))
                       .images;
  cache.styles = procedural_corpus(problem.validation_pairs, problem.image_size,
                                   derive_seed(problem.data_seed, "validation.style"))
                     .images;
  NetworkGraph untrained = build_graph(ArchCode::all_ones(), encoder, problem.oracle_train.seed);
  cache.oracle = train_decoder(untrained, cache.corpus, problem.oracle_train).graph;
  cache.outputs = stylize_pairs(cache.oracle, cache);
  for (const Tensor& o : cache.outputs) cache.output_features.push_back(cache.oracle.encoder->encode(o));
  return cache;
}

std::vector<Tensor> stylize_pairs(const NetworkGraph& graph, const OracleCache& cache) {
  std::vector<Tensor> out;
  out.reserve(cache.contents.size());
  for (std::size_t i = 0; i < cache.contents.size(); ++i)
    out.push_back(forward(graph, cache.contents[i], cache.styles[i], cache.problem.transfer));
  return out;
}

metrics::EvalReport evaluate_graph(const NetworkGraph& graph, const OracleCache& cache,
                                   const metrics::ObjectiveWeights& weights) {
  return metrics::objective(stylize_pairs(graph, cache), cache.outputs, cache.output_features, graph.code, weights,
                            *cache.oracle.encoder);
}

// ---------------------------------------------------------------------------
// Candidates

std::string to_string(Status status) {
  switch (status) {
    case Status::kPending: return "pending";
    case Status::kTrained: return "trained";
    case Status::kFailed: return "failed";
  }
  return "unknown";
}

Candidate evaluate_candidate(const ArchCode& code, const OracleCache& cache, const TrainConfig& train,
                             const metrics::ObjectiveWeights& weights) {
  Candidate c;
  c.code = code;
  try {
    const NetworkGraph graph = build_graph(code, cache.oracle.encoder, train.seed);
    const TrainResult trained = train_decoder(graph, cache.corpus, train);
    c.report = evaluate_graph(trained.graph, cache, weights);
    if (!std::isfinite(c.report.loss)) throw DivergedError(train.steps);
    c.loss = c.report.loss;
    c.status = Status::kTrained;
  } catch (const Error&) {
    c.loss = kFailedLoss;
    c.status = Status::kFailed;
  }
  return c;
}

Candidate MemoEvaluator::operator()(const ArchCode& code) {
  {
    std::lock_guard lock(mutex_);
    if (const auto it = table_.find(code.bits()); it != table_.end()) return it->second;
  }
  Candidate c = inner_(code);
  std::lock_guard lock(mutex_);
  ++evaluations_;
  return table_.emplace(code.bits(), std::move(c)).first->second;
}

std::size_t MemoEvaluator::evaluations() const {
  std::lock_guard lock(mutex_);
  return evaluations_;
}

std::size_t MemoEvaluator::size() const {
  std::lock_guard lock(mutex_);
  return table_.size();
}

Evaluator desk_evaluator(const OracleCache& cache, const TrainConfig& train, const metrics::ObjectiveWeights& weights) {
  auto memo = std::make_shared<MemoEvaluator>(
      [&cache, train, weights](const ArchCode& code) { return evaluate_candidate(code, cache, train, weights); });
  return [memo](const ArchCode& code) { return (*memo)(code); };
}

// ---------------------------------------------------------------------------
// Search primitives

std::vector<int> SearchSpace::free_slots() const {
  std::vector<int> out;
  for (int i = 0; i < kNumSlots; ++i)
    if ((free_mask >> i) & 1u) out.push_back(i);
  return out;
}

ArchCode SearchSpace::random_code(Rng& rng) const {
  ArchCode code = frozen;
  for (int i : free_slots()) code = code.with(i, (rng() >> 63) != 0);
  return code;
}

bool SearchSpace::contains(const ArchCode& code) const {
  return ((code.bits() ^ frozen.bits()) & ~free_mask) == 0;
}

int SearchConfig::effective_tournament_size() const {
  if (tournament_size > 0) return tournament_size;
  return std::max(2, (population + 3) / 4);
}

void SearchConfig::validate() const {
  if (population < 2) throw PreconditionError("population must be >= 2");
  if (budget < population) throw PreconditionError("budget must be >= population");
  const int t = effective_tournament_size();
  if (t < 2 || t > population) throw PreconditionError("tournament size must lie in [2, population]");
  if (workers < 1) throw PreconditionError("workers must be >= 1");
  if (space.free_slots().empty()) throw PreconditionError("search space has no free slots");
  weights.validate();
}

ArchCode mutate(const ArchCode& parent, const std::set<std::uint32_t>& seen, Rng& rng, const SearchSpace& space) {
  const std::vector<int> slots = space.free_slots();
  if (slots.empty()) throw PreconditionError("mutate: search space has no free slots");
  std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);
  ArchCode child = parent.flipped(slots[pick(rng)]);
  for (int attempt = 0; attempt < kMutationRetries && seen.contains(child.bits()); ++attempt)
    child = parent.flipped(slots[pick(rng)]);
  return child;
}

const Candidate& tournament_select(const std::vector<Candidate>& population, int tournament_size, Rng& rng) {
  if (tournament_size < 1 || static_cast<int>(population.size()) < tournament_size)
    throw PreconditionError("tournament of size " + std::to_string(tournament_size) + " needs that many members, have " +
                            std::to_string(population.size()));
  std::vector<std::size_t> order(population.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const Candidate* winner = nullptr;
  for (int k = 0; k < tournament_size; ++k) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), order.size() - 1);
    std::swap(order[static_cast<std::size_t>(k)], order[pick(rng)]);
    const Candidate& c = population[order[static_cast<std::size_t>(k)]];
    if (!winner || better(c, *winner)) winner = &c;
  }
  return *winner;
}

std::optional<Candidate> SearchState::best() const {
  std::optional<Candidate> out;
  for (const Candidate& c : history)
    if (c.status == Status::kTrained && (!out || c.loss < out->loss)) out = c;
  return out;
}

// ---------------------------------------------------------------------------
// Search loops

SearchResult search(const SearchConfig& config, const Evaluator& evaluate, const SearchObserver& observer) {
  config.validate();
  const int pop = config.population;
  const int tsize = config.effective_tournament_size();
  Rng rng(config.seed);
  SearchState state;
  std::set<std::uint32_t> seen;

  std::vector<Candidate> initial(static_cast<std::size_t>(pop));
  std::vector<ArchCode> codes;
  for (int i = 0; i < pop; ++i) codes.push_back(config.space.random_code(rng));
  parallel_for(pop, config.workers, [&](int i) {
    initial[static_cast<std::size_t>(i)] = evaluate(codes[static_cast<std::size_t>(i)]);
  });
  for (Candidate& c : initial) {
    c.gen = 0;
    seen.insert(c.code.bits());
    insert(state, std::move(c), pop);
    if (observer) observer(state, state.history.back(), std::nullopt);
  }

  if (config.strict) {
    while (static_cast<int>(state.history.size()) < config.budget) {
      const int k0 = static_cast<int>(state.history.size());
      const int n = std::min(pop, config.budget - k0);
      const std::vector<Candidate> snapshot = state.population;
      std::set<std::uint32_t> pending = seen;
      std::vector<ArchCode> child_codes;
      std::vector<int> parents;
      for (int j = 0; j < n; ++j) {
        const Candidate& parent = tournament_select(snapshot, tsize, rng);
        const ArchCode child = mutate(parent.code, pending, rng, config.space);
        pending.insert(child.bits());
        child_codes.push_back(child);
        parents.push_back(parent.index);
      }
      std::vector<Candidate> children(static_cast<std::size_t>(n));
      parallel_for(n, config.workers, [&](int j) {
        children[static_cast<std::size_t>(j)] = evaluate(child_codes[static_cast<std::size_t>(j)]);
      });
      for (int j = 0; j < n; ++j) {
        Candidate& c = children[static_cast<std::size_t>(j)];
        c.gen = generation_of(k0 + j, pop);
        c.parent = parents[static_cast<std::size_t>(j)];
        seen.insert(c.code.bits());
        const auto evicted = insert(state, std::move(c), pop);
        if (observer) observer(state, state.history.back(), evicted);
      }
    }
  } else {
    std::mutex mutex;
    std::multiset<std::uint32_t> in_flight;
    int issued = static_cast<int>(state.history.size());
    const auto worker = [&] {
      for (;;) {
        ArchCode child;
        int k = 0;
        int parent = -1;
        {
          std::lock_guard lock(mutex);
          if (issued >= config.budget) return;
          k = issued++;
          std::set<std::uint32_t> avoid = seen;
          avoid.insert(in_flight.begin(), in_flight.end());
          const Candidate& winner = tournament_select(state.population, tsize, rng);
          parent = winner.index;
          child = mutate(winner.code, avoid, rng, config.space);
          in_flight.insert(child.bits());
        }
        Candidate c = evaluate(child);
        std::lock_guard lock(mutex);
        in_flight.erase(in_flight.find(child.bits()));
        c.gen = generation_of(k, pop);
        c.parent = parent;
        seen.insert(c.code.bits());
        const auto evicted = insert(state, std::move(c), pop);
        if (observer) observer(state, state.history.back(), evicted);
      }
    };
    const int remaining = config.budget - issued;
    const int threads = std::clamp(config.workers, 1, std::max(1, remaining));
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
  }
  return {state.history, state.best()};
}

SearchResult random_search(const SearchConfig& config, const Evaluator& evaluate) {
  if (config.budget < 1) throw PreconditionError("random search budget must be >= 1");
  if (config.workers < 1) throw PreconditionError("workers must be >= 1");
  config.weights.validate();
  Rng rng(config.seed);
  std::vector<ArchCode> codes;
  for (int i = 0; i < config.budget; ++i) codes.push_back(config.space.random_code(rng));
  SearchState state;
  state.history.resize(codes.size());
  parallel_for(config.budget, config.workers, [&](int i) {
    Candidate c = evaluate(codes[static_cast<std::size_t>(i)]);
    c.gen = 0;
    c.index = i;
    state.history[static_cast<std::size_t>(i)] = std::move(c);
  });
  return {state.history, state.best()};
}

void write_telemetry(std::ostream& out, const SearchResult& result) {
  out << "index,code,loss,E,P,O,gen,hamming_to_best,status\n";
  const auto old_precision = out.precision(17);
  for (const Candidate& c : result.history) {
    out << c.index << ',' << c.code.to_string() << ',' << c.loss << ',' << c.report.recon_error << ','
        << c.report.perceptual << ',' << c.report.op_fraction << ',' << c.gen << ','
        << (result.best ? hamming(c.code, result.best->code) : -1) << ',' << to_string(c.status) << '\n';
  }
  out.precision(old_precision);
}

void apply_config(const KeyValues& kv, SearchConfig& search, ProblemConfig& problem) {
  for (const auto& [key, v] : kv) {
    if (key == "population") search.population = parse_int(key, v);
    else if (key == "budget") search.budget = parse_int(key, v);
    else if (key == "tournament") search.tournament_size = parse_int(key, v);
    else if (key == "alpha") search.weights.alpha = parse_real(key, v);
    else if (key == "beta") search.weights.beta = parse_real(key, v);
    else if (key == "gamma") search.weights.gamma = parse_real(key, v);
    else if (key == "seed") search.seed = parse_u64(key, v);
    else if (key == "workers") search.workers = parse_int(key, v);
    else if (key == "strict") search.strict = parse_bool(key, v);
    else if (key == "problem.base_width") problem.base_width = parse_int(key, v);
    else if (key == "problem.image_size") {
      problem.image_size = parse_int(key, v);
      problem.oracle_train.image_size = problem.candidate_train.image_size = problem.image_size;
    } else if (key == "problem.train_images") problem.train_images = parse_int(key, v);
    else if (key == "problem.validation_pairs") problem.validation_pairs = parse_int(key, v);
    else if (key == "problem.seed") problem.data_seed = parse_u64(key, v);
    else if (key == "transfer.epsilon") problem.transfer.epsilon = static_cast<float>(parse_real(key, v));
    else if (key == "transfer.blend") problem.transfer.blend = static_cast<float>(parse_real(key, v));
    else if (key == "transfer.kind") problem.transfer.kind = transfer::parse_module_kind(v);
    else if (key.starts_with("train.") && apply_train_key(key.substr(6), key, v, problem.candidate_train)) {
    } else if (key.starts_with("oracle.") && apply_train_key(key.substr(7), key, v, problem.oracle_train)) {
    } else {
      throw InputError("unknown config key '" + key + "'");
    }
  }
}

}  // namespace photonas::nas
