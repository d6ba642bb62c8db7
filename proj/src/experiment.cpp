#include "genrec/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "genrec/errors.hpp"

namespace genrec::experiment {

void ExperimentConfig::validate() const {
  if (topic.empty()) throw Error(ErrorKind::config, "experiment: topic must be non-empty");
  if (persona_ids.empty()) {
    throw Error(ErrorKind::config, "experiment: persona mix must be non-empty");
  }
  if (pool_size < 1) throw Error(ErrorKind::config, "experiment: pool_size must be >= 1");
  if (iterations < 1) throw Error(ErrorKind::config, "experiment: iterations must be >= 1");
  if (interactions < 1) throw Error(ErrorKind::config, "experiment: interactions must be >= 1");
  if (shown_k < 1) throw Error(ErrorKind::config, "experiment: shown_k must be >= 1");
  if (shown_k > pool_size) {
    throw Error(ErrorKind::config, "experiment: shown_k must not exceed pool_size");
  }
  if (max_retries < 0) throw Error(ErrorKind::config, "experiment: max_retries must be >= 0");
  if (max_question_chars < 1) {
    throw Error(ErrorKind::config, "experiment: max_question_chars must be >= 1");
  }
  strategy.validate();
  click.validate();
  scorer.validate();
  backend.validate();
  if (strategy.kind == strategies::StrategyKind::explore_exploit &&
      strategy.explore_exploit_mode == strategies::ExploreExploitMode::dual_set &&
      2 * strategy.n > pool_size) {
    throw Error(ErrorKind::config, "experiment: dual-set mode needs 2*n <= pool_size");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{{"topic", topic},
                   {"domain", relevance::domain_name(domain)},
                   {"personas", persona_ids},
                   {"strategy", strategy.to_json()},
                   {"pool_size", pool_size},
                   {"iterations", iterations},
                   {"interactions", interactions},
                   {"shown_k", shown_k},
                   {"click", {{"temperature", click.temperature},
                              {"rejection_score", click.rejection_score}}},
                   {"scorer", scorer.to_json()},
                   {"backend", backend.to_json()},
                   {"seed", seed},
                   {"max_retries", max_retries},
                   {"max_question_chars", max_question_chars}};
  if (personas_file) j["personas_file"] = *personas_file;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  try {
    config.topic = j.value("topic", config.topic);
    if (j.contains("domain")) {
      config.domain = relevance::domain_from_name(j["domain"].get<std::string>());
    }
    if (j.contains("personas")) {
      config.persona_ids = j["personas"].get<std::vector<std::string>>();
    }
    if (j.contains("personas_file") && !j["personas_file"].is_null()) {
      config.personas_file = j["personas_file"].get<std::string>();
    }
    if (j.contains("strategy")) {
      config.strategy = strategies::StrategyConfig::from_json(j["strategy"]);
    }
    config.pool_size = j.value("pool_size", config.pool_size);
    config.iterations = j.value("iterations", config.iterations);
    config.interactions = j.value("interactions", config.interactions);
    config.shown_k = j.value("shown_k", config.shown_k);
    if (j.contains("click")) {
      config.click.temperature = j["click"].value("temperature", config.click.temperature);
      config.click.rejection_score =
          j["click"].value("rejection_score", config.click.rejection_score);
    }
    if (j.contains("scorer")) config.scorer = relevance::ScorerSpec::from_json(j["scorer"]);
    if (j.contains("backend")) {
      config.backend = llm_gateway::BackendSpec::from_json(j["backend"]);
    }
    config.seed = j.value("seed", config.seed);
    config.max_retries = j.value("max_retries", config.max_retries);
    config.max_question_chars = j.value("max_question_chars", config.max_question_chars);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("experiment: malformed config: ") + e.what());
  }
  config.validate();
  return config;
}

ExperimentConfig ExperimentConfig::defaults() { return ExperimentConfig{}; }

Metrics compute_metrics(const std::vector<pool::IterationRecord>& records) {
  if (records.empty()) {
    throw Error(ErrorKind::invalid_input, "experiment: compute_metrics needs >= 1 record");
  }
  Metrics metrics;
  for (const auto& record : records) {
    metrics.avg_ctr += record.overall_ctr;
    metrics.mean_scores.push_back(record.mean_score);
  }
  metrics.avg_ctr /= static_cast<double>(records.size());
  metrics.last_ctr = records.back().overall_ctr;
  return metrics;
}

pool::IterationRecord simulate_batch(const std::vector<pool::Question>& active,
                                     const std::vector<relevance::Persona>& personas,
                                     const ScoreLookup& scores, long interactions, int shown_k,
                                     const click_model::ClickModelParams& params, Rng& rng) {
  params.validate();
  if (active.size() < static_cast<std::size_t>(shown_k) || shown_k < 1) {
    throw Error(ErrorKind::invalid_input,
                "experiment: pool of " + std::to_string(active.size()) +
                    " cannot show k=" + std::to_string(shown_k) + " questions");
  }
  if (interactions < 1) {
    throw Error(ErrorKind::invalid_input, "experiment: interactions must be >= 1");
  }
  if (personas.empty()) {
    throw Error(ErrorKind::invalid_input, "experiment: persona mix must be non-empty");
  }

  const std::size_t question_count = active.size();
  const std::size_t persona_count = personas.size();

  // Resolve the full score matrix up front; an unresolvable score aborts the
  // batch before any sampling happens.
  std::vector<double> matrix(question_count * persona_count);
  for (std::size_t qi = 0; qi < question_count; ++qi) {
    for (std::size_t pj = 0; pj < persona_count; ++pj) {
      matrix[qi * persona_count + pj] = scores(active[qi], personas[pj]);
    }
  }

  std::vector<long> impressions(question_count, 0);
  std::vector<long> clicks(question_count, 0);
  std::vector<double> shown_scores(static_cast<std::size_t>(shown_k));
  long total_clicks = 0;

  for (long s = 0; s < interactions; ++s) {
    const std::size_t pj = persona_count == 1
                               ? 0
                               : static_cast<std::size_t>(rng.next_below(persona_count));
    std::vector<std::size_t> shown =
        rng.sample_without_replacement(static_cast<std::size_t>(shown_k), question_count);
    for (int k = 0; k < shown_k; ++k) {
      shown_scores[static_cast<std::size_t>(k)] = matrix[shown[static_cast<std::size_t>(k)] * persona_count + pj];
      ++impressions[shown[static_cast<std::size_t>(k)]];
    }
    std::optional<std::size_t> action = click_model::sample_action(shown_scores, params, rng);
    if (action) {
      ++clicks[shown[*action]];
      ++total_clicks;
    }
  }

  pool::IterationRecord record;
  for (std::size_t qi = 0; qi < question_count; ++qi) {
    double ctr = impressions[qi] > 0
                     ? static_cast<double>(clicks[qi]) / static_cast<double>(impressions[qi])
                     : 0.0;
    record.questions.push_back(pool::QuestionStats{active[qi].id, active[qi].text,
                                                   impressions[qi], clicks[qi], ctr});
  }
  record.overall_ctr = static_cast<double>(total_clicks) / static_cast<double>(interactions);
  record.mean_score =
      std::accumulate(matrix.begin(), matrix.end(), 0.0) / static_cast<double>(matrix.size());
  return record;
}

namespace {

std::vector<relevance::Persona> resolve_personas(const ExperimentConfig& config) {
  std::vector<relevance::Persona> registry = config.personas_file
                                                 ? relevance::load_personas(*config.personas_file)
                                                 : relevance::builtin_personas();
  std::vector<relevance::Persona> selected;
  for (const auto& id : config.persona_ids) {
    auto it = std::find_if(registry.begin(), registry.end(),
                           [&](const relevance::Persona& p) { return p.id == id; });
    if (it == registry.end()) {
      throw Error(ErrorKind::config, "experiment: persona '" + id + "' not in registry");
    }
    selected.push_back(*it);
  }
  return selected;
}

struct Harness {
  std::unique_ptr<llm_gateway::Backend> backend;
  std::unique_ptr<relevance::Scorer> scorer;
  std::vector<relevance::Persona> personas;
  relevance::ScoreCache cache;

  explicit Harness(const ExperimentConfig& config, Journal* journal) {
    auto raw = llm_gateway::make_backend(config.backend,
                                         derive_stream(config.seed, "backend").next_u64());
    if (journal != nullptr) {
      backend = std::make_unique<llm_gateway::JournalingBackend>(std::move(raw), *journal);
    } else {
      backend = std::move(raw);
    }
    scorer = relevance::make_scorer(config.scorer, config.domain, backend.get(),
                                    config.max_retries);
    personas = resolve_personas(config);
  }

  /// Scores every (active question, persona) pair in pool order so cache
  /// fills (and any LLM scoring calls) happen in a replay-stable order.
  void resolve_scores(const std::vector<pool::Question>& active, const std::string& topic) {
    for (const auto& q : active) {
      for (const auto& p : personas) {
        cache.get_or_compute(q.id, q.text, p, topic, *scorer);
      }
    }
  }

  ScoreLookup lookup(const std::string& topic) {
    return [this, topic](const pool::Question& q, const relevance::Persona& p) {
      auto value = cache.lookup(q.id, p.id, topic, scorer->id());
      if (!value) {
        throw Error(ErrorKind::invalid_state,
                    "experiment: unresolved score for (" + q.id + ", " + p.id + ")");
      }
      return *value;
    };
  }
};

void enforce_question_length(const pool::PoolState& state, int max_chars) {
  for (const auto& q : state.questions) {
    if (static_cast<int>(q.text.size()) > max_chars) {
      throw Error(ErrorKind::invalid_input,
                  "experiment: question '" + q.id + "' exceeds max_question_chars (" +
                      std::to_string(q.text.size()) + " > " + std::to_string(max_chars) + ")");
    }
  }
}

}  // namespace

RunResult run(const ExperimentConfig& config, Journal& journal) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  journal.append(nlohmann::json{{"type", "config"}, {"config", config.to_json()}});

  pool::PoolState state;
  state.topic = config.topic;

  try {
    Harness harness(config, &journal);
    harness.cache.set_listener([&journal](const relevance::RelevanceScore& score) {
      journal.append(nlohmann::json{{"type", "score"},
                                    {"question_id", score.question_id},
                                    {"persona_id", score.persona_id},
                                    {"topic", score.topic},
                                    {"scorer_id", score.scorer_id},
                                    {"value", score.value}});
    });

    strategies::IdGen ids;
    std::vector<pool::Question> initial =
        strategies::initialize_pool(config.topic, config.pool_size, config.domain,
                                    *harness.backend, config.max_retries, ids);
    state = pool::add_questions(std::move(state), initial);
    enforce_question_length(state, config.max_question_chars);

    auto measure = [&](int iteration, std::vector<std::string> dropped,
                       std::vector<std::string> added) {
      std::vector<pool::Question> active = state.active_questions();
      harness.resolve_scores(active, config.topic);
      Rng sim_rng = derive_stream(config.seed, "sim", static_cast<std::uint64_t>(iteration));
      pool::IterationRecord record =
          simulate_batch(active, harness.personas, harness.lookup(config.topic),
                         config.interactions, config.shown_k, config.click, sim_rng);
      record.iteration = iteration;
      record.dropped = std::move(dropped);
      record.added = std::move(added);
      for (const auto& q : record.questions) {
        if (q.impressions == 0) {
          journal.append(nlohmann::json{{"type", "warning"},
                                        {"message", "question received zero impressions"},
                                        {"question_id", q.id},
                                        {"iteration", iteration}});
        }
      }
      journal.append(nlohmann::json{{"type", "iteration"}, {"record", record.to_json()}});
      state.history.push_back(record);
    };

    std::vector<std::string> initial_ids;
    for (const auto& q : initial) initial_ids.push_back(q.id);
    measure(0, {}, std::move(initial_ids));

    for (int i = 1; i <= config.iterations; ++i) {
      state.iteration = i;
      Rng strategy_rng = derive_stream(config.seed, "strategy", static_cast<std::uint64_t>(i));
      pool::IterationRecord observed = state.history.back();
      strategies::RefineOutcome outcome =
          strategies::refine(std::move(state), config.strategy, observed, *harness.backend,
                             strategy_rng, config.max_retries, ids);
      state = std::move(outcome.state);
      enforce_question_length(state, config.max_question_chars);
      measure(i, std::move(outcome.dropped_ids), std::move(outcome.added_ids));
    }

    Metrics metrics = compute_metrics(state.history);
    RunResult result;
    result.records = state.history;
    result.avg_ctr = metrics.avg_ctr;
    result.last_ctr = metrics.last_ctr;
    result.final_pool = std::move(state);
    result.config_echo = config.to_json();
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    journal.append(nlohmann::json{{"type", "summary"},
                                  {"avg_ctr", result.avg_ctr},
                                  {"last_ctr", result.last_ctr},
                                  {"iterations", config.iterations}});
    return result;
  } catch (const Error& e) {
    journal.append(nlohmann::json{{"type", "abort"},
                                  {"error_kind", error_kind_name(e.kind())},
                                  {"message", e.what()},
                                  {"completed_iterations",
                                   static_cast<long>(state.history.size())}});
    throw;
  }
}

nlohmann::json RunResult::summary_json() const {
  nlohmann::json iteration_records = nlohmann::json::array();
  for (const auto& record : records) iteration_records.push_back(record.to_json());
  return nlohmann::json{{"avg_ctr", avg_ctr},
                        {"last_ctr", last_ctr},
                        {"records", iteration_records},
                        {"config", config_echo},
                        {"wall_seconds", wall_seconds}};
}

namespace {

double sample_variance(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                static_cast<double>(values.size());
  double sum_sq = 0.0;
  for (double v : values) sum_sq += (v - mean) * (v - mean);
  return sum_sq / static_cast<double>(values.size() - 1);
}

std::vector<VarianceRow> variance_rows(const std::vector<pool::Question>& active,
                                       const std::vector<relevance::Persona>& personas,
                                       const ScoreLookup& lookup, int shown_k,
                                       const click_model::ClickModelParams& params,
                                       std::uint64_t seed, const std::vector<long>& s_values,
                                       int replications) {
  if (replications < 2) {
    throw Error(ErrorKind::invalid_input, "experiment: variance study needs >= 2 replications");
  }
  std::vector<VarianceRow> rows;
  for (std::size_t si = 0; si < s_values.size(); ++si) {
    std::vector<double> overall;
    std::vector<std::vector<double>> per_question(active.size());
    for (int rep = 0; rep < replications; ++rep) {
      Rng rng = derive_stream(seed, "variance",
                              static_cast<std::uint64_t>(si) * 1000003ull +
                                  static_cast<std::uint64_t>(rep));
      pool::IterationRecord record =
          simulate_batch(active, personas, lookup, s_values[si], shown_k, params, rng);
      overall.push_back(record.overall_ctr);
      for (std::size_t qi = 0; qi < active.size(); ++qi) {
        per_question[qi].push_back(record.questions[qi].ctr);
      }
    }
    VarianceRow row;
    row.interactions = s_values[si];
    row.overall_ctr_variance = sample_variance(overall);
    row.mean_overall_ctr = std::accumulate(overall.begin(), overall.end(), 0.0) /
                           static_cast<double>(overall.size());
    double question_var_sum = 0.0;
    for (const auto& series : per_question) question_var_sum += sample_variance(series);
    row.mean_question_ctr_variance = question_var_sum / static_cast<double>(active.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<VarianceRow> variance_study(const ExperimentConfig& config,
                                        const std::vector<long>& s_values, int replications) {
  config.validate();
  if (s_values.empty()) {
    throw Error(ErrorKind::invalid_input, "experiment: variance study needs >= 1 S value");
  }
  Harness harness(config, nullptr);
  strategies::IdGen ids;
  std::vector<pool::Question> initial =
      strategies::initialize_pool(config.topic, config.pool_size, config.domain,
                                  *harness.backend, config.max_retries, ids);
  pool::PoolState state;
  state.topic = config.topic;
  state = pool::add_questions(std::move(state), initial);
  std::vector<pool::Question> active = state.active_questions();
  harness.resolve_scores(active, config.topic);
  return variance_rows(active, harness.personas, harness.lookup(config.topic), config.shown_k,
                       config.click, config.seed, s_values, replications);
}

std::vector<VarianceRow> variance_study_scores(const std::vector<double>& question_scores,
                                               const std::vector<long>& s_values,
                                               int replications, int shown_k,
                                               const click_model::ClickModelParams& params,
                                               std::uint64_t seed) {
  std::vector<pool::Question> active;
  for (std::size_t i = 0; i < question_scores.size(); ++i) {
    active.push_back(pool::Question{"q" + std::to_string(i), "frozen question", 0,
                                    pool::Provenance::init, true});
  }
  std::vector<relevance::Persona> personas{
      relevance::Persona{"population", "Population", "frozen synthetic population",
                         relevance::Domain::synthetic, std::nullopt}};
  ScoreLookup lookup = [&question_scores, &active](const pool::Question& q,
                                                   const relevance::Persona&) {
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (active[i].id == q.id) return question_scores[i];
    }
    throw Error(ErrorKind::invalid_state, "experiment: unknown frozen question");
  };
  return variance_rows(active, personas, lookup, shown_k, params, seed, s_values, replications);
}

double enumerate_expected_ctr(const std::vector<std::vector<double>>& scores_by_question_persona,
                              int shown_k, const click_model::ClickModelParams& params) {
  const std::size_t n = scores_by_question_persona.size();
  if (n == 0 || shown_k < 1 || static_cast<std::size_t>(shown_k) > n) {
    throw Error(ErrorKind::invalid_input, "experiment: bad pool for CTR enumeration");
  }
  const std::size_t personas = scores_by_question_persona.front().size();

  std::vector<std::size_t> combo(static_cast<std::size_t>(shown_k));
  std::iota(combo.begin(), combo.end(), std::size_t{0});
  const std::size_t k = combo.size();

  auto advance = [&]() {  // next K-combination in lexicographic order
    std::size_t i = k;
    while (i > 0) {
      --i;
      if (combo[i] < n - k + i) {
        ++combo[i];
        for (std::size_t j = i + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
        return true;
      }
    }
    return false;
  };

  double total = 0.0;
  std::size_t subset_count = 0;
  do {
    for (std::size_t pj = 0; pj < personas; ++pj) {
      std::vector<double> shown;
      for (std::size_t index : combo) shown.push_back(scores_by_question_persona[index][pj]);
      total += click_model::action_distribution(shown, params).total_click_probability();
    }
    ++subset_count;
  } while (advance());
  return total / static_cast<double>(subset_count * personas);
}

}  // namespace genrec::experiment
