#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "genrec/llm_gateway.hpp"

namespace genrec::relevance {

enum class Domain { ecommerce, general_knowledge, synthetic };

const char* domain_name(Domain domain);
Domain domain_from_name(std::string_view name);

/// Pattern table for the deterministic keyword scorer: score = base plus the
/// weights of all patterns found (case-insensitively) in the question.
struct KeywordProfile {
  double base = 3.0;
  std::vector<std::pair<std::string, double>> patterns;
};

struct Persona {
  std::string id;
  std::string name;
  std::string description;
  Domain domain = Domain::ecommerce;
  std::optional<KeywordProfile> keywords;
};

struct RelevanceScore {
  std::string question_id;
  std::string persona_id;
  std::string topic;
  double value = 1.0;
  std::string scorer_id;
};

struct ScorerSpec {
  enum class Kind { llm, length_words, length_chars, keyword_persona };

  Kind kind = Kind::llm;

  void validate() const;
  nlohmann::json to_json() const;
  static ScorerSpec from_json(const nlohmann::json& j);
};

const char* scorer_kind_name(ScorerSpec::Kind kind);

// Deterministic length scorers. Word count splits on whitespace runs without
// punctuation stripping; character count includes spaces and punctuation.
std::size_t word_count(std::string_view text);
double score_length_words(std::string_view question);
double score_length_chars(std::string_view question);

double score_keyword_persona(std::string_view question, const KeywordProfile& profile);

class Scorer {
 public:
  virtual ~Scorer() = default;
  /// Uncached score for one (question, persona, topic) triple, clamped to [1,10].
  virtual double compute(std::string_view question_text, const Persona& persona,
                         std::string_view topic) = 0;
  virtual const std::string& id() const = 0;
};

/// scorer_id format: "llm", "length-words", "length-chars", "keyword-persona".
std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec, Domain domain,
                                    llm_gateway::Backend* backend, int max_retries);

/// Extracts "Score: <integer 1-10>" from an LLM scoring response.
/// Returns nullopt when absent or out of range.
std::optional<int> parse_score_response(std::string_view response);

/// One cached value per (question_id, persona_id, topic, scorer_id); the
/// underlying scorer runs at most once per key even under concurrent lookups.
class ScoreCache {
 public:
  using Listener = std::function<void(const RelevanceScore&)>;

  RelevanceScore get_or_compute(const std::string& question_id,
                                std::string_view question_text, const Persona& persona,
                                const std::string& topic, Scorer& scorer);
  std::optional<double> lookup(const std::string& question_id, const std::string& persona_id,
                               const std::string& topic, const std::string& scorer_id) const;
  void set_listener(Listener listener) { listener_ = std::move(listener); }
  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, std::string, std::string, std::string>;

  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::map<Key, double> values_;
  std::set<Key> in_flight_;
  Listener listener_;
};

std::vector<Persona> parse_personas(const nlohmann::json& registry);
std::vector<Persona> load_personas(const std::string& path);
std::vector<Persona> builtin_personas();

}  // namespace genrec::relevance
