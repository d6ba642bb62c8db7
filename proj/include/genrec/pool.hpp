#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace genrec::pool {

enum class Provenance { init, explore, exploit, refine };

const char* provenance_name(Provenance p);
Provenance provenance_from_name(std::string_view name);

struct Question {
  std::string id;
  std::string text;
  int created_iteration = 0;
  Provenance created_by = Provenance::init;
  bool active = true;
};

struct QuestionStats {
  std::string id;
  std::string text;
  long impressions = 0;
  long clicks = 0;
  double ctr = 0.0;
};

/// One measured iteration: the drop/add transition that produced the pool
/// plus the outcome of simulating S interactions against it.
struct IterationRecord {
  int iteration = 0;
  std::vector<QuestionStats> questions;
  double overall_ctr = 0.0;
  double mean_score = 0.0;
  std::vector<std::string> dropped;
  std::vector<std::string> added;

  nlohmann::json to_json() const;
  static IterationRecord from_json(const nlohmann::json& j);
};

struct PoolState {
  std::string topic;
  int iteration = 0;
  std::vector<Question> questions;  // every question ever, in insertion order
  std::vector<IterationRecord> history;

  std::vector<Question> active_questions() const;
  std::size_t active_count() const;
  const Question* find(std::string_view id) const;
};

/// Duplicate key for question texts: case-folded, whitespace collapsed,
/// terminal punctuation stripped.
std::string normalize_text(std::string_view text);

struct DropOutcome {
  PoolState state;
  std::vector<std::string> dropped_ids;
};

/// Deactivates the n active questions with lowest CTR. Ties break toward the
/// older created_iteration, then the lexicographically smaller id. Every
/// active question must have a CTR entry.
DropOutcome drop_worst(PoolState state, int n,
                       const std::map<std::string, double>& ctr_by_id);

/// Appends new questions to the active set. Rejects any whose normalized text
/// collides with a question ever pooled (dropped ones included) or with
/// another entry of the batch.
PoolState add_questions(PoolState state, std::vector<Question> fresh);

/// Replays dropped/added ids over an empty pool; used to check that history
/// alone reconstructs the active set.
std::vector<std::string> fold_history_active_ids(const std::vector<IterationRecord>& history);

}  // namespace genrec::pool
