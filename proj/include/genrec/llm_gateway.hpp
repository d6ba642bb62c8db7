#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "genrec/journal.hpp"
#include "genrec/rng.hpp"

namespace genrec::llm_gateway {

struct RemoteSpec {
  std::string endpoint;  // full URL, e.g. https://api.example.com/v1/chat/completions
  std::string model;
  double temperature = 1.0;
  double timeout_s = 30.0;
  int max_retries = 3;
  int backoff_ms = 500;
  double requests_per_minute = 60.0;
  std::string auth_env = "GENREC_API_KEY";  // env var holding the bearer token
  std::string response_path = "choices.0.message.content";
};

struct ReplaySpec {
  std::string transcript_path;
};

struct ScriptedLengthSpec {
  int min_words = 4;
  int max_words = 15;
  int cap_words = 15;
};

struct CandidateBankSpec {
  std::string bank_path;
  int max_exploit_per_topic = 2;  // beyond this, exploit pivots to the next tag
};

struct BackendSpec {
  enum class Kind { remote, replay, scripted_length, candidate_bank };

  Kind kind = Kind::scripted_length;
  RemoteSpec remote;
  ReplaySpec replay;
  ScriptedLengthSpec scripted;
  CandidateBankSpec bank;

  void validate() const;
  nlohmann::json to_json() const;
  static BackendSpec from_json(const nlohmann::json& j);
};

const char* backend_kind_name(BackendSpec::Kind kind);

struct Completion {
  std::string text;
  int retries = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const std::string& prompt) = 0;
  virtual const char* kind_name() const = 0;
};

/// FNV-1a hash of the prompt with line endings normalized to \n and trailing
/// whitespace stripped, as a 16-digit hex string. Replay matches on this.
std::string prompt_digest(std::string_view prompt);

struct BankEntry {
  std::string text;
  std::string topic_tag;
  double hidden_quality = 5.0;
};

std::vector<BankEntry> load_candidate_bank(const std::string& path);

/// Replays a journaled run: each call must match the digest of the next
/// completion record in the transcript.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const std::string& transcript_path);
  explicit ReplayBackend(std::vector<nlohmann::json> records);

  Completion complete(const std::string& prompt) override;
  const char* kind_name() const override { return "replay"; }
  std::size_t remaining() const { return entries_.size() - cursor_; }

 private:
  struct Entry {
    std::string digest;
    std::string response;
  };
  std::vector<Entry> entries_;
  std::size_t cursor_ = 0;
};

/// Deterministic generator that emulates a length-following optimizer: when
/// the prompt carries CTR lines whose ranking is consistent with question
/// length, it answers with a question one word longer than the current best
/// performer (capped); otherwise (no CTR lines, or an incoherent ranking such
/// as random CTR values) with a uniformly random length in
/// [min_words, max_words].
class ScriptedLengthBackend : public Backend {
 public:
  ScriptedLengthBackend(ScriptedLengthSpec spec, std::uint64_t seed);

  Completion complete(const std::string& prompt) override;
  const char* kind_name() const override { return "scripted-length"; }

 private:
  std::string make_question(const std::string& topic, int word_count);

  ScriptedLengthSpec spec_;
  Rng rng_;
  std::uint64_t counter_ = 0;
};

/// Draws questions from a fixed bank with hidden per-entry quality. Prompts
/// with CTR lines are served in exploit mode (same topic tag as the best
/// performer, with the >2-questions pivot rule); prompts without CTR lines in
/// explore mode (uniform over unconsumed entries).
class CandidateBankBackend : public Backend {
 public:
  CandidateBankBackend(std::vector<BankEntry> entries, std::uint64_t seed,
                       int max_exploit_per_topic = 2);

  Completion complete(const std::string& prompt) override;
  const char* kind_name() const override { return "candidate-bank"; }
  std::size_t unconsumed() const;

 private:
  std::size_t draw_explore();
  std::size_t draw_exploit(const std::string& prompt);

  std::vector<BankEntry> entries_;
  std::vector<bool> consumed_;
  Rng rng_;
  int max_exploit_per_topic_;
};

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteSpec spec);

  Completion complete(const std::string& prompt) override;
  const char* kind_name() const override { return "remote"; }

 private:
  RemoteSpec spec_;
  std::string scheme_host_;
  std::string path_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;

  void take_rate_token();
};

/// Wraps any backend and appends a completion record per call.
class JournalingBackend : public Backend {
 public:
  JournalingBackend(std::unique_ptr<Backend> inner, Journal& journal)
      : inner_(std::move(inner)), journal_(journal) {}

  Completion complete(const std::string& prompt) override;
  const char* kind_name() const override { return inner_->kind_name(); }
  Backend& inner() { return *inner_; }

 private:
  std::unique_ptr<Backend> inner_;
  Journal& journal_;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::uint64_t seed);

/// Parsed "Question:"/"CTR:" blocks of a refinement prompt, in prompt order.
struct PromptCtrBlock {
  std::string question;
  double ctr = 0.0;  // fraction, not percent
};
std::vector<PromptCtrBlock> parse_prompt_ctr_blocks(const std::string& prompt);

/// Requested question count of an initialization prompt ("write <N> ..."),
/// or 0 when the prompt is a single-question refinement prompt.
int parse_initial_request_count(const std::string& prompt);

}  // namespace genrec::llm_gateway
