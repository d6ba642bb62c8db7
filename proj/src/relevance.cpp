#include "genrec/relevance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "genrec/assets.hpp"
#include "genrec/errors.hpp"

namespace genrec::relevance {

const char* domain_name(Domain domain) {
  switch (domain) {
    case Domain::ecommerce: return "e-commerce";
    case Domain::general_knowledge: return "general-knowledge";
    case Domain::synthetic: return "synthetic";
  }
  return "unknown";
}

Domain domain_from_name(std::string_view name) {
  if (name == "e-commerce" || name == "ecommerce") return Domain::ecommerce;
  if (name == "general-knowledge") return Domain::general_knowledge;
  if (name == "synthetic") return Domain::synthetic;
  throw Error(ErrorKind::config, "relevance: unknown domain '" + std::string(name) + "'");
}

const char* scorer_kind_name(ScorerSpec::Kind kind) {
  switch (kind) {
    case ScorerSpec::Kind::llm: return "llm";
    case ScorerSpec::Kind::length_words: return "length-words";
    case ScorerSpec::Kind::length_chars: return "length-chars";
    case ScorerSpec::Kind::keyword_persona: return "keyword-persona";
  }
  return "unknown";
}

void ScorerSpec::validate() const {}

nlohmann::json ScorerSpec::to_json() const {
  return nlohmann::json{{"kind", scorer_kind_name(kind)}};
}

ScorerSpec ScorerSpec::from_json(const nlohmann::json& j) {
  ScorerSpec spec;
  std::string kind = j.value("kind", "llm");
  if (kind == "llm") spec.kind = Kind::llm;
  else if (kind == "length-words") spec.kind = Kind::length_words;
  else if (kind == "length-chars") spec.kind = Kind::length_chars;
  else if (kind == "keyword-persona") spec.kind = Kind::keyword_persona;
  else throw Error(ErrorKind::config, "relevance: unknown scorer kind '" + kind + "'");
  return spec;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

namespace {

double clamp_score(double value) { return std::clamp(value, 1.0, 10.0); }

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

double score_length_words(std::string_view question) {
  double words = static_cast<double>(word_count(question));
  return clamp_score((words - 4.0) * 9.0 / 11.0 + 1.0);
}

double score_length_chars(std::string_view question) {
  double chars = static_cast<double>(question.size());
  return clamp_score((chars - 20.0) * 9.0 / 55.0 + 1.0);
}

double score_keyword_persona(std::string_view question, const KeywordProfile& profile) {
  const std::string haystack = to_lower(question);
  double value = profile.base;
  for (const auto& [pattern, weight] : profile.patterns) {
    if (haystack.find(to_lower(pattern)) != std::string::npos) value += weight;
  }
  return clamp_score(value);
}

std::optional<int> parse_score_response(std::string_view response) {
  const std::string lowered = to_lower(response);
  std::size_t pos = lowered.find("score:");
  if (pos == std::string::npos) return std::nullopt;
  std::size_t i = pos + 6;
  while (i < lowered.size() && std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
  if (i >= lowered.size() || !std::isdigit(static_cast<unsigned char>(lowered[i]))) {
    return std::nullopt;
  }
  int value = 0;
  while (i < lowered.size() && std::isdigit(static_cast<unsigned char>(lowered[i]))) {
    value = value * 10 + (lowered[i] - '0');
    ++i;
  }
  if (value < 1 || value > 10) return std::nullopt;
  return value;
}

namespace {

class LengthWordsScorer : public Scorer {
 public:
  double compute(std::string_view question, const Persona&, std::string_view) override {
    return score_length_words(question);
  }
  const std::string& id() const override {
    static const std::string kId = "length-words";
    return kId;
  }
};

class LengthCharsScorer : public Scorer {
 public:
  double compute(std::string_view question, const Persona&, std::string_view) override {
    return score_length_chars(question);
  }
  const std::string& id() const override {
    static const std::string kId = "length-chars";
    return kId;
  }
};

class KeywordPersonaScorer : public Scorer {
 public:
  double compute(std::string_view question, const Persona& persona, std::string_view) override {
    if (!persona.keywords) {
      throw Error(ErrorKind::config, "relevance: persona '" + persona.id +
                                         "' has no keyword profile for keyword-persona scoring");
    }
    return score_keyword_persona(question, *persona.keywords);
  }
  const std::string& id() const override {
    static const std::string kId = "keyword-persona";
    return kId;
  }
};

class LlmScorer : public Scorer {
 public:
  LlmScorer(Domain domain, llm_gateway::Backend& backend, int max_retries)
      : domain_(domain), backend_(backend), max_retries_(max_retries) {}

  double compute(std::string_view question, const Persona& persona,
                 std::string_view topic) override {
    const std::string prompt = build_prompt(question, persona, topic);
    std::string last_response;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
      last_response = backend_.complete(prompt).text;
      if (auto score = parse_score_response(last_response)) {
        return static_cast<double>(*score);
      }
    }
    throw Error(ErrorKind::scoring,
                "relevance: unparseable score response after " +
                    std::to_string(max_retries_) + " retries: " + last_response);
  }

  const std::string& id() const override {
    static const std::string kId = "llm";
    return kId;
  }

 private:
  std::string build_prompt(std::string_view question, const Persona& persona,
                           std::string_view topic) const {
    // E-commerce descriptions carry the persona name; general-knowledge ones
    // are used bare, matching the per-domain scoring templates.
    if (domain_ == Domain::general_knowledge) {
      return assets::substitute(assets::prompt_template("scoring_general_knowledge"),
                                {{"topic", topic},
                                 {"persona_description", persona.description},
                                 {"question", question}});
    }
    const std::string described = persona.name + ": " + persona.description;
    return assets::substitute(assets::prompt_template("scoring_ecommerce"),
                              {{"persona_description", described}, {"question", question}});
  }

  Domain domain_;
  llm_gateway::Backend& backend_;
  int max_retries_;
};

}  // namespace

std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec, Domain domain,
                                    llm_gateway::Backend* backend, int max_retries) {
  switch (spec.kind) {
    case ScorerSpec::Kind::length_words:
      return std::make_unique<LengthWordsScorer>();
    case ScorerSpec::Kind::length_chars:
      return std::make_unique<LengthCharsScorer>();
    case ScorerSpec::Kind::keyword_persona:
      return std::make_unique<KeywordPersonaScorer>();
    case ScorerSpec::Kind::llm:
      if (backend == nullptr) {
        throw Error(ErrorKind::config, "relevance: llm scorer needs a generation backend");
      }
      return std::make_unique<LlmScorer>(domain, *backend, max_retries);
  }
  throw Error(ErrorKind::config, "relevance: unhandled scorer kind");
}

RelevanceScore ScoreCache::get_or_compute(const std::string& question_id,
                                          std::string_view question_text,
                                          const Persona& persona, const std::string& topic,
                                          Scorer& scorer) {
  Key key{question_id, persona.id, topic, scorer.id()};
  {
    std::unique_lock lock(mutex_);
    for (;;) {
      auto it = values_.find(key);
      if (it != values_.end()) {
        return RelevanceScore{question_id, persona.id, topic, it->second, scorer.id()};
      }
      if (!in_flight_.contains(key)) break;
      ready_.wait(lock);
    }
    in_flight_.insert(key);
  }

  double value;
  try {
    value = std::clamp(scorer.compute(question_text, persona, topic), 1.0, 10.0);
  } catch (...) {
    std::lock_guard lock(mutex_);
    in_flight_.erase(key);
    ready_.notify_all();
    throw;
  }

  RelevanceScore score{question_id, persona.id, topic, value, scorer.id()};
  {
    std::lock_guard lock(mutex_);
    in_flight_.erase(key);
    values_.emplace(std::move(key), value);
    ready_.notify_all();
  }
  if (listener_) listener_(score);
  return score;
}

std::optional<double> ScoreCache::lookup(const std::string& question_id,
                                         const std::string& persona_id,
                                         const std::string& topic,
                                         const std::string& scorer_id) const {
  std::lock_guard lock(mutex_);
  auto it = values_.find(Key{question_id, persona_id, topic, scorer_id});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::size_t ScoreCache::size() const {
  std::lock_guard lock(mutex_);
  return values_.size();
}

std::vector<Persona> parse_personas(const nlohmann::json& registry) {
  if (!registry.contains("personas") || !registry["personas"].is_array()) {
    throw Error(ErrorKind::config, "relevance: registry must contain a 'personas' array");
  }
  std::vector<Persona> personas;
  std::set<std::string> seen_ids;
  for (const auto& entry : registry["personas"]) {
    Persona p;
    p.id = entry.at("id").get<std::string>();
    p.name = entry.value("name", p.id);
    p.description = entry.at("description").get<std::string>();
    p.domain = domain_from_name(entry.value("domain", "e-commerce"));
    if (p.description.empty()) {
      throw Error(ErrorKind::config, "relevance: persona '" + p.id + "' has empty description");
    }
    if (!seen_ids.insert(p.id).second) {
      throw Error(ErrorKind::config, "relevance: duplicate persona id '" + p.id + "'");
    }
    if (entry.contains("keywords")) {
      KeywordProfile profile;
      const auto& kw = entry["keywords"];
      profile.base = kw.value("base", 3.0);
      if (kw.contains("patterns")) {
        for (const auto& [pattern, weight] : kw["patterns"].items()) {
          profile.patterns.emplace_back(pattern, weight.get<double>());
        }
      }
      p.keywords = std::move(profile);
    }
    personas.push_back(std::move(p));
  }
  return personas;
}

std::vector<Persona> load_personas(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::config, "relevance: cannot open persona registry '" + path + "'");
  }
  nlohmann::json registry;
  try {
    in >> registry;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, "relevance: registry '" + path + "': " + e.what());
  }
  return parse_personas(registry);
}

std::vector<Persona> builtin_personas() {
  return parse_personas(nlohmann::json::parse(assets::personas_json()));
}

}  // namespace genrec::relevance
