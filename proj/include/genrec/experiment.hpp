#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "genrec/click_model.hpp"
#include "genrec/journal.hpp"
#include "genrec/llm_gateway.hpp"
#include "genrec/pool.hpp"
#include "genrec/relevance.hpp"
#include "genrec/strategies.hpp"

namespace genrec::experiment {

struct ExperimentConfig {
  std::string topic = "Spray Bottles";
  relevance::Domain domain = relevance::Domain::ecommerce;
  std::vector<std::string> persona_ids = {"features-functionality"};
  std::optional<std::string> personas_file;  // absent -> builtin registry
  strategies::StrategyConfig strategy;
  int pool_size = 5;        // |IP|
  int iterations = 15;      // I
  long interactions = 5000; // S per iteration
  int shown_k = 3;          // K
  click_model::ClickModelParams click;
  relevance::ScorerSpec scorer;
  llm_gateway::BackendSpec backend;
  std::uint64_t seed = 1;
  int max_retries = 3;
  int max_question_chars = 400;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig defaults();
};

struct RunResult {
  std::vector<pool::IterationRecord> records;  // iterations 0..I
  double avg_ctr = 0.0;
  double last_ctr = 0.0;
  pool::PoolState final_pool;
  nlohmann::json config_echo;
  double wall_seconds = 0.0;

  nlohmann::json summary_json() const;
};

struct Metrics {
  double avg_ctr = 0.0;
  double last_ctr = 0.0;
  std::vector<double> mean_scores;
};

Metrics compute_metrics(const std::vector<pool::IterationRecord>& records);

using ScoreLookup =
    std::function<double(const pool::Question&, const relevance::Persona&)>;

/// Simulates S interactions: uniform persona, K distinct questions sampled
/// uniformly without replacement, one softmax action each. Fills impressions,
/// clicks, per-question CTR, overall CTR and the mean relevance score of the
/// pool (averaged over questions x personas).
pool::IterationRecord simulate_batch(const std::vector<pool::Question>& active,
                                     const std::vector<relevance::Persona>& personas,
                                     const ScoreLookup& scores, long interactions, int shown_k,
                                     const click_model::ClickModelParams& params, Rng& rng);

/// Full run: initialize, measure iteration 0, then refine+measure for
/// `iterations` rounds. Everything (config, completions, scores, iteration
/// records) goes to the journal; offline backends make the log byte-stable
/// for a given seed.
RunResult run(const ExperimentConfig& config, Journal& journal);

struct VarianceRow {
  long interactions = 0;
  double overall_ctr_variance = 0.0;
  double mean_question_ctr_variance = 0.0;
  double mean_overall_ctr = 0.0;
};

/// Appendix-style reliability study: repeated measurement-only batches on a
/// frozen pool, one row per S value.
std::vector<VarianceRow> variance_study(const ExperimentConfig& config,
                                        const std::vector<long>& s_values, int replications);

/// Same study on an explicit frozen pool of per-question scores (one score per
/// question; personas collapse to a single synthetic one).
std::vector<VarianceRow> variance_study_scores(const std::vector<double>& question_scores,
                                               const std::vector<long>& s_values,
                                               int replications, int shown_k,
                                               const click_model::ClickModelParams& params,
                                               std::uint64_t seed);

/// Expected overall CTR of a frozen pool by enumerating all K-subsets
/// (uniform persona mix); reference value for the variance study.
double enumerate_expected_ctr(const std::vector<std::vector<double>>& scores_by_question_persona,
                              int shown_k, const click_model::ClickModelParams& params);

}  // namespace genrec::experiment
