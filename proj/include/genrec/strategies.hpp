#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "genrec/llm_gateway.hpp"
#include "genrec/pool.hpp"
#include "genrec/relevance.hpp"
#include "genrec/rng.hpp"

namespace genrec::strategies {

enum class StrategyKind { no_drop, random_ctr, partial_ctr, full_ctr, explore_exploit };
enum class ExploreExploitMode { combined_prompt, dual_set };

const char* strategy_kind_name(StrategyKind kind);
StrategyKind strategy_kind_from_name(std::string_view name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::explore_exploit;
  int n = 1;  // questions dropped/added per iteration
  ExploreExploitMode explore_exploit_mode = ExploreExploitMode::combined_prompt;
  std::array<double, 2> random_ctr_range = {0.0, 0.15};

  void validate() const;
  nlohmann::json to_json() const;
  static StrategyConfig from_json(const nlohmann::json& j);
};

struct GenerationResult {
  std::string template_id;
  std::string prompt;
  std::string raw_response;
  std::vector<std::string> parsed_questions;
  std::vector<bool> over_word_limit;  // aligned with parsed_questions; >15 words
  int retry_count = 0;
};

/// Sequential question-id source ("q0001", "q0002", ...). Zero-padding keeps
/// lexicographic id order equal to creation order.
class IdGen {
 public:
  std::string next();

 private:
  int counter_ = 0;
};

/// Extracts the question following the first "New Question:" marker
/// (case-insensitive, leading text tolerated). Throws a parse error carrying
/// the raw payload when the marker is missing or trails nothing.
std::string parse_new_question(std::string_view raw);

/// Splits a multi-question response into question texts: one per line, list
/// markers ("1.", "-", "Q3:") stripped.
std::vector<std::string> parse_question_lines(std::string_view raw);

std::string format_ctr_percent(double ctr);

std::string build_initial_prompt(relevance::Domain domain, const std::string& topic, int n);
std::string build_plain_refine_prompt(const std::string& topic,
                                      const std::vector<std::string>& questions);
std::string build_ctr_refine_prompt(const std::string& template_id, const std::string& topic,
                                    std::vector<std::pair<std::string, double>> question_ctrs);

/// Generates the initial pool of n_init distinct questions, retrying the
/// backend on shortfall or duplicates up to max_retries extra attempts.
std::vector<pool::Question> initialize_pool(const std::string& topic, int n_init,
                                            relevance::Domain domain,
                                            llm_gateway::Backend& backend, int max_retries,
                                            IdGen& ids, GenerationResult* trace = nullptr);

struct RefineOutcome {
  pool::PoolState state;
  std::vector<std::string> dropped_ids;
  std::vector<std::string> added_ids;
  std::vector<GenerationResult> generations;
};

/// One refinement step. `observed` must be the record measured on the current
/// pool; per-question CTR for older (dropped) questions comes from state
/// history. The rng only feeds strategy randomness (random-ctr values).
RefineOutcome refine(pool::PoolState state, const StrategyConfig& strategy,
                     const pool::IterationRecord& observed, llm_gateway::Backend& backend,
                     Rng& rng, int max_retries, IdGen& ids);

}  // namespace genrec::strategies
