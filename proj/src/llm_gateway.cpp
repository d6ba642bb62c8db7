#include "genrec/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#ifdef GENREC_HAVE_HTTPLIB
#include <httplib.h>
#endif

#include "genrec/errors.hpp"
#include "genrec/pool.hpp"

namespace genrec::llm_gateway {

const char* backend_kind_name(BackendSpec::Kind kind) {
  switch (kind) {
    case BackendSpec::Kind::remote: return "remote";
    case BackendSpec::Kind::replay: return "replay";
    case BackendSpec::Kind::scripted_length: return "scripted-length";
    case BackendSpec::Kind::candidate_bank: return "candidate-bank";
  }
  return "unknown";
}

void BackendSpec::validate() const {
  switch (kind) {
    case Kind::remote:
      if (remote.endpoint.empty()) {
        throw Error(ErrorKind::config, "llm_gateway: remote backend needs an endpoint URL");
      }
      if (remote.timeout_s <= 0) {
        throw Error(ErrorKind::config, "llm_gateway: remote timeout must be > 0");
      }
      if (remote.requests_per_minute <= 0) {
        throw Error(ErrorKind::config, "llm_gateway: requests_per_minute must be > 0");
      }
      break;
    case Kind::replay:
      if (replay.transcript_path.empty()) {
        throw Error(ErrorKind::config, "llm_gateway: replay backend needs a transcript path");
      }
      break;
    case Kind::scripted_length:
      if (scripted.min_words < 1 || scripted.max_words < scripted.min_words) {
        throw Error(ErrorKind::config, "llm_gateway: scripted-length word range is invalid");
      }
      break;
    case Kind::candidate_bank:
      if (bank.bank_path.empty()) {
        throw Error(ErrorKind::config, "llm_gateway: candidate-bank backend needs a bank file");
      }
      break;
  }
}

nlohmann::json BackendSpec::to_json() const {
  nlohmann::json j{{"kind", backend_kind_name(kind)}};
  switch (kind) {
    case Kind::remote:
      j["endpoint"] = remote.endpoint;
      j["model"] = remote.model;
      j["temperature"] = remote.temperature;
      j["timeout_s"] = remote.timeout_s;
      j["max_retries"] = remote.max_retries;
      j["backoff_ms"] = remote.backoff_ms;
      j["requests_per_minute"] = remote.requests_per_minute;
      j["auth_env"] = remote.auth_env;
      j["response_path"] = remote.response_path;
      break;
    case Kind::replay:
      j["transcript"] = replay.transcript_path;
      break;
    case Kind::scripted_length:
      j["min_words"] = scripted.min_words;
      j["max_words"] = scripted.max_words;
      j["cap_words"] = scripted.cap_words;
      break;
    case Kind::candidate_bank:
      j["bank"] = bank.bank_path;
      j["max_exploit_per_topic"] = bank.max_exploit_per_topic;
      break;
  }
  return j;
}

BackendSpec BackendSpec::from_json(const nlohmann::json& j) {
  BackendSpec spec;
  std::string kind = j.value("kind", "scripted-length");
  if (kind == "remote") {
    spec.kind = Kind::remote;
    spec.remote.endpoint = j.value("endpoint", "");
    spec.remote.model = j.value("model", "");
    spec.remote.temperature = j.value("temperature", 1.0);
    spec.remote.timeout_s = j.value("timeout_s", 30.0);
    spec.remote.max_retries = j.value("max_retries", 3);
    spec.remote.backoff_ms = j.value("backoff_ms", 500);
    spec.remote.requests_per_minute = j.value("requests_per_minute", 60.0);
    spec.remote.auth_env = j.value("auth_env", "GENREC_API_KEY");
    spec.remote.response_path = j.value("response_path", "choices.0.message.content");
  } else if (kind == "replay") {
    spec.kind = Kind::replay;
    spec.replay.transcript_path = j.value("transcript", "");
  } else if (kind == "scripted-length") {
    spec.kind = Kind::scripted_length;
    spec.scripted.min_words = j.value("min_words", 4);
    spec.scripted.max_words = j.value("max_words", 15);
    spec.scripted.cap_words = j.value("cap_words", 15);
  } else if (kind == "candidate-bank") {
    spec.kind = Kind::candidate_bank;
    spec.bank.bank_path = j.value("bank", "");
    spec.bank.max_exploit_per_topic = j.value("max_exploit_per_topic", 2);
  } else {
    throw Error(ErrorKind::config, "llm_gateway: unknown backend kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

std::string prompt_digest(std::string_view prompt) {
  std::string normalized;
  normalized.reserve(prompt.size());
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    if (prompt[i] == '\r') {
      if (i + 1 < prompt.size() && prompt[i + 1] == '\n') continue;
      normalized += '\n';
    } else {
      normalized += prompt[i];
    }
  }
  while (!normalized.empty() &&
         std::isspace(static_cast<unsigned char>(normalized.back()))) {
    normalized.pop_back();
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(fnv1a64(normalized)));
  return std::string(buffer);
}

std::vector<BankEntry> load_candidate_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::config, "llm_gateway: cannot open candidate bank '" + path + "'");
  }
  std::vector<BankEntry> entries;
  std::set<std::string> texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::config, "llm_gateway: bank '" + path + "' line " +
                                         std::to_string(line_no) + ": " + e.what());
    }
    BankEntry entry{j.at("text").get<std::string>(), j.at("topic_tag").get<std::string>(),
                    j.value("hidden_quality", 5.0)};
    if (entry.hidden_quality < 1.0 || entry.hidden_quality > 10.0) {
      throw Error(ErrorKind::config, "llm_gateway: bank hidden_quality out of [1,10] at line " +
                                         std::to_string(line_no));
    }
    if (!texts.insert(entry.text).second) {
      throw Error(ErrorKind::config,
                  "llm_gateway: duplicate bank text at line " + std::to_string(line_no));
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<PromptCtrBlock> parse_prompt_ctr_blocks(const std::string& prompt) {
  std::vector<PromptCtrBlock> blocks;
  std::istringstream stream(prompt);
  std::string line;
  std::string pending_question;
  bool have_question = false;
  while (std::getline(stream, line)) {
    if (line.starts_with("Question: ")) {
      pending_question = line.substr(10);
      have_question = true;
    } else if (line.starts_with("CTR: ") && have_question) {
      std::string value = line.substr(5);
      if (!value.empty() && value.back() == '%') value.pop_back();
      try {
        blocks.push_back(PromptCtrBlock{pending_question, std::stod(value) / 100.0});
      } catch (const std::exception&) {
        // Not a CTR number; treat the pair as plain text.
      }
      have_question = false;
    }
  }
  return blocks;
}

int parse_initial_request_count(const std::string& prompt) {
  if (prompt.find("New Question:") != std::string::npos) return 0;
  std::string lowered(prompt);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::size_t pos = lowered.find("write ");
  if (pos == std::string::npos) return 0;
  pos += 6;
  int count = 0;
  while (pos < lowered.size() && std::isdigit(static_cast<unsigned char>(lowered[pos]))) {
    count = count * 10 + (lowered[pos] - '0');
    ++pos;
  }
  return count;
}

// --- replay ---

ReplayBackend::ReplayBackend(const std::string& transcript_path)
    : ReplayBackend(read_journal_lines(transcript_path)) {}

ReplayBackend::ReplayBackend(std::vector<nlohmann::json> records) {
  for (const auto& record : records) {
    if (record.contains("type") && record["type"] != "completion") continue;
    if (!record.contains("response")) continue;
    entries_.push_back(Entry{record.value("prompt_digest", ""),
                             record.at("response").get<std::string>()});
  }
}

Completion ReplayBackend::complete(const std::string& prompt) {
  if (cursor_ >= entries_.size()) {
    throw Error(ErrorKind::transcript_exhausted,
                "llm_gateway: transcript exhausted after " + std::to_string(entries_.size()) +
                    " completions");
  }
  const Entry& entry = entries_[cursor_];
  std::string digest = prompt_digest(prompt);
  if (!entry.digest.empty() && entry.digest != digest) {
    throw Error(ErrorKind::transcript_mismatch,
                "llm_gateway: transcript mismatch at entry " + std::to_string(cursor_) +
                    ": expected digest " + entry.digest + ", got " + digest);
  }
  ++cursor_;
  return Completion{entry.response, 0};
}

// --- scripted length ---

namespace {

const char* kFillerVocabulary[] = {
    "makes",   "users",   "consider", "durable", "options",  "during",  "daily",
    "typical", "common",  "models",   "material", "care",    "handle",  "compare",
    "types",   "features", "maintain", "choose",  "useful",  "design",  "quality",
    "replace", "store",   "clean",    "safely",  "affect",   "between", "everyday"};
constexpr std::size_t kFillerCount = sizeof(kFillerVocabulary) / sizeof(kFillerVocabulary[0]);

std::string extract_prompt_topic(const std::string& prompt) {
  // Refinement prompts: "... for the category of <topic> that the customers ..."
  std::size_t pos = prompt.find("the category of ");
  if (pos != std::string::npos) {
    std::size_t start = pos + 16;
    std::size_t end = prompt.find(" that the customers", start);
    if (end != std::string::npos) return prompt.substr(start, end - start);
  }
  // Initial e-commerce prompt: "... about '<topic>'."
  pos = prompt.find("about '");
  if (pos != std::string::npos) {
    std::size_t start = pos + 7;
    std::size_t end = prompt.find('\'', start);
    if (end != std::string::npos) return prompt.substr(start, end - start);
  }
  // Initial general-knowledge prompt: "Title: <topic>"
  pos = prompt.find("Title: ");
  if (pos != std::string::npos) {
    std::size_t start = pos + 7;
    std::size_t end = prompt.find('\n', start);
    return prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
  }
  return {};
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream stream(text);
  std::string word;
  while (stream >> word) words.push_back(word);
  return words;
}

/// The CTR assignment is followable only when no strictly-longer question
/// carries a strictly-lower CTR; an incoherent ranking (e.g. random CTR
/// values) offers no trend to extend.
bool length_consistent(const std::vector<PromptCtrBlock>& blocks) {
  std::vector<std::size_t> word_counts;
  word_counts.reserve(blocks.size());
  for (const auto& block : blocks) word_counts.push_back(split_words(block.question).size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if (word_counts[i] > word_counts[j] && blocks[i].ctr < blocks[j].ctr) return false;
    }
  }
  return true;
}

}  // namespace

ScriptedLengthBackend::ScriptedLengthBackend(ScriptedLengthSpec spec, std::uint64_t seed)
    : spec_(spec), rng_(seed) {}

std::string ScriptedLengthBackend::make_question(const std::string& topic, int word_count) {
  std::vector<std::string> words;
  words.push_back("What");
  words.push_back("v" + std::to_string(++counter_));  // uniqueness token
  for (const auto& token : split_words(topic)) {
    if (static_cast<int>(words.size()) >= word_count) break;
    std::string lowered(token);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(lowered);
  }
  while (static_cast<int>(words.size()) < word_count) {
    words.push_back(kFillerVocabulary[rng_.next_below(kFillerCount)]);
  }
  words.resize(static_cast<std::size_t>(word_count));
  std::string question;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) question += ' ';
    question += words[i];
  }
  question += '?';
  return question;
}

Completion ScriptedLengthBackend::complete(const std::string& prompt) {
  const std::string topic = extract_prompt_topic(prompt);
  if (int requested = parse_initial_request_count(prompt); requested > 0) {
    std::string response;
    for (int i = 0; i < requested; ++i) {
      int words = rng_.uniform_int(spec_.min_words, spec_.max_words);
      response += std::to_string(i + 1) + ". " + make_question(topic, words) + "\n";
    }
    return Completion{response, 0};
  }

  auto blocks = parse_prompt_ctr_blocks(prompt);
  int target;
  if (blocks.empty() || !length_consistent(blocks)) {
    target = rng_.uniform_int(spec_.min_words, spec_.max_words);
  } else {
    const PromptCtrBlock* top = &blocks.front();
    for (const auto& block : blocks) {
      if (block.ctr >= top->ctr) top = &block;
    }
    int top_words = static_cast<int>(split_words(top->question).size());
    target = std::min(top_words + 1, spec_.cap_words);
  }
  return Completion{"New Question: " + make_question(topic, target), 0};
}

// --- candidate bank ---

CandidateBankBackend::CandidateBankBackend(std::vector<BankEntry> entries, std::uint64_t seed,
                                           int max_exploit_per_topic)
    : entries_(std::move(entries)),
      consumed_(entries_.size(), false),
      rng_(seed),
      max_exploit_per_topic_(max_exploit_per_topic) {}

std::size_t CandidateBankBackend::unconsumed() const {
  return static_cast<std::size_t>(std::count(consumed_.begin(), consumed_.end(), false));
}

std::size_t CandidateBankBackend::draw_explore() {
  std::vector<std::size_t> available;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!consumed_[i]) available.push_back(i);
  }
  if (available.empty()) {
    throw Error(ErrorKind::bank_exhausted, "llm_gateway: candidate bank exhausted");
  }
  return available[rng_.next_below(available.size())];
}

std::size_t CandidateBankBackend::draw_exploit(const std::string& prompt) {
  auto blocks = parse_prompt_ctr_blocks(prompt);
  if (blocks.empty()) return draw_explore();

  auto tag_of = [&](const std::string& question) -> std::string {
    std::string wanted = pool::normalize_text(question);
    for (const auto& entry : entries_) {
      if (pool::normalize_text(entry.text) == wanted) return entry.topic_tag;
    }
    return {};
  };

  // Blocks arrive sorted ascending; walk from the best CTR down, skipping tags
  // already saturating the prompt, exactly the pivot rule of the exploit
  // instruction.
  std::vector<const PromptCtrBlock*> ordered;
  for (const auto& block : blocks) ordered.push_back(&block);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const PromptCtrBlock* a, const PromptCtrBlock* b) { return a->ctr > b->ctr; });

  std::map<std::string, int> tag_counts;
  for (const auto& block : blocks) {
    std::string tag = tag_of(block.question);
    if (!tag.empty()) ++tag_counts[tag];
  }

  std::set<std::string> rejected;
  for (const PromptCtrBlock* block : ordered) {
    std::string tag = tag_of(block->question);
    if (tag.empty() || rejected.contains(tag)) continue;
    if (tag_counts[tag] > max_exploit_per_topic_) {
      rejected.insert(tag);
      continue;
    }
    std::vector<std::size_t> matching;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!consumed_[i] && entries_[i].topic_tag == tag) matching.push_back(i);
    }
    if (!matching.empty()) return matching[rng_.next_below(matching.size())];
    rejected.insert(tag);
  }
  return draw_explore();
}

Completion CandidateBankBackend::complete(const std::string& prompt) {
  if (int requested = parse_initial_request_count(prompt); requested > 0) {
    std::string response;
    for (int i = 0; i < requested; ++i) {
      std::size_t pick = draw_explore();
      consumed_[pick] = true;
      response += std::to_string(i + 1) + ". " + entries_[pick].text + "\n";
    }
    return Completion{response, 0};
  }

  bool exploit = prompt.find("CTR:") != std::string::npos;
  std::size_t pick = exploit ? draw_exploit(prompt) : draw_explore();
  consumed_[pick] = true;
  return Completion{"New Question: " + entries_[pick].text, 0};
}

// --- remote ---

RemoteBackend::RemoteBackend(RemoteSpec spec)
    : spec_(std::move(spec)), tokens_(1.0), last_refill_(std::chrono::steady_clock::now()) {
  std::size_t scheme_end = spec_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::config,
                "llm_gateway: endpoint must be a full URL, got '" + spec_.endpoint + "'");
  }
  std::size_t path_start = spec_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = spec_.endpoint;
    path_ = "/";
  } else {
    scheme_host_ = spec_.endpoint.substr(0, path_start);
    path_ = spec_.endpoint.substr(path_start);
  }
}

void RemoteBackend::take_rate_token() {
  const double rate_per_s = spec_.requests_per_minute / 60.0;
  auto now = std::chrono::steady_clock::now();
  tokens_ = std::min(1.0, tokens_ + std::chrono::duration<double>(now - last_refill_).count() *
                              rate_per_s);
  last_refill_ = now;
  if (tokens_ < 1.0) {
    auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_s);
    std::this_thread::sleep_for(wait);
    last_refill_ = std::chrono::steady_clock::now();
    tokens_ = 1.0;
  }
  tokens_ -= 1.0;
}

Completion RemoteBackend::complete(const std::string& prompt) {
#ifndef GENREC_HAVE_HTTPLIB
  (void)prompt;
  throw Error(ErrorKind::backend, "llm_gateway: remote backend not compiled in");
#else
  nlohmann::json request{{"model", spec_.model},
                         {"messages", nlohmann::json::array({nlohmann::json{
                                          {"role", "user"}, {"content", prompt}}})},
                         {"temperature", spec_.temperature}};
  const std::string body = request.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(spec_.backoff_ms * (1 << (attempt - 1))));
    }
    take_rate_token();

    httplib::Client client(scheme_host_);
    client.set_connection_timeout(std::chrono::duration<double>(spec_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(spec_.timeout_s));
    httplib::Headers headers;
    if (!spec_.auth_env.empty()) {
      if (const char* token = std::getenv(spec_.auth_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
      }
    }

    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "status " + std::to_string(result->status);
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      throw Error(ErrorKind::backend, "llm_gateway: remote returned status " +
                                          std::to_string(result->status) + ": " + result->body);
    }

    nlohmann::json response;
    try {
      response = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::backend,
                  std::string("llm_gateway: remote returned non-JSON body: ") + e.what());
    }
    nlohmann::json node = response;
    std::istringstream segments(spec_.response_path);
    std::string segment;
    while (std::getline(segments, segment, '.')) {
      if (node.is_array()) {
        std::size_t index = static_cast<std::size_t>(std::stoul(segment));
        if (index >= node.size()) {
          throw Error(ErrorKind::backend, "llm_gateway: response path '" + spec_.response_path +
                                              "' missing in remote reply");
        }
        node = node[index];
      } else if (node.is_object() && node.contains(segment)) {
        node = node[segment];
      } else {
        throw Error(ErrorKind::backend, "llm_gateway: response path '" + spec_.response_path +
                                            "' missing in remote reply");
      }
    }
    if (!node.is_string()) {
      throw Error(ErrorKind::backend, "llm_gateway: response path did not resolve to text");
    }
    return Completion{node.get<std::string>(), attempt};
  }
  throw Error(ErrorKind::backend, "llm_gateway: remote failed after " +
                                      std::to_string(spec_.max_retries) +
                                      " retries (" + last_error + ")");
#endif
}

Completion JournalingBackend::complete(const std::string& prompt) {
  Completion completion = inner_->complete(prompt);
  journal_.append(nlohmann::json{{"type", "completion"},
                                 {"prompt_digest", prompt_digest(prompt)},
                                 {"prompt", prompt},
                                 {"response", completion.text},
                                 {"retries", completion.retries}});
  return completion;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case BackendSpec::Kind::remote:
      return std::make_unique<RemoteBackend>(spec.remote);
    case BackendSpec::Kind::replay:
      return std::make_unique<ReplayBackend>(spec.replay.transcript_path);
    case BackendSpec::Kind::scripted_length:
      return std::make_unique<ScriptedLengthBackend>(spec.scripted, seed);
    case BackendSpec::Kind::candidate_bank:
      return std::make_unique<CandidateBankBackend>(load_candidate_bank(spec.bank.bank_path),
                                                    seed, spec.bank.max_exploit_per_topic);
  }
  throw Error(ErrorKind::config, "llm_gateway: unhandled backend kind");
}

}  // namespace genrec::llm_gateway
