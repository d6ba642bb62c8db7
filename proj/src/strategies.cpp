#include "genrec/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "genrec/assets.hpp"
#include "genrec/errors.hpp"

namespace genrec::strategies {

const char* strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::no_drop: return "no-drop";
    case StrategyKind::random_ctr: return "random-ctr";
    case StrategyKind::partial_ctr: return "partial-ctr";
    case StrategyKind::full_ctr: return "full-ctr";
    case StrategyKind::explore_exploit: return "explore-exploit";
  }
  return "unknown";
}

StrategyKind strategy_kind_from_name(std::string_view name) {
  if (name == "no-drop") return StrategyKind::no_drop;
  if (name == "random-ctr") return StrategyKind::random_ctr;
  if (name == "partial-ctr") return StrategyKind::partial_ctr;
  if (name == "full-ctr") return StrategyKind::full_ctr;
  if (name == "explore-exploit") return StrategyKind::explore_exploit;
  throw Error(ErrorKind::config, "strategies: unknown strategy kind '" + std::string(name) + "'");
}

void StrategyConfig::validate() const {
  if (n < 1) {
    throw Error(ErrorKind::config, "strategies: n must be >= 1");
  }
  if (random_ctr_range[0] < 0.0 || random_ctr_range[1] > 1.0 ||
      random_ctr_range[0] > random_ctr_range[1]) {
    throw Error(ErrorKind::config, "strategies: random_ctr_range must satisfy 0 <= low <= high <= 1");
  }
}

nlohmann::json StrategyConfig::to_json() const {
  return nlohmann::json{
      {"kind", strategy_kind_name(kind)},
      {"n", n},
      {"explore_exploit_mode",
       explore_exploit_mode == ExploreExploitMode::combined_prompt ? "combined-prompt" : "dual-set"},
      {"random_ctr_range", random_ctr_range}};
}

StrategyConfig StrategyConfig::from_json(const nlohmann::json& j) {
  StrategyConfig config;
  config.kind = strategy_kind_from_name(j.value("kind", "explore-exploit"));
  config.n = j.value("n", 1);
  std::string mode = j.value("explore_exploit_mode", "combined-prompt");
  if (mode == "combined-prompt") {
    config.explore_exploit_mode = ExploreExploitMode::combined_prompt;
  } else if (mode == "dual-set") {
    config.explore_exploit_mode = ExploreExploitMode::dual_set;
  } else {
    throw Error(ErrorKind::config, "strategies: unknown explore_exploit_mode '" + mode + "'");
  }
  if (j.contains("random_ctr_range")) {
    auto range = j["random_ctr_range"].get<std::vector<double>>();
    if (range.size() != 2) {
      throw Error(ErrorKind::config, "strategies: random_ctr_range must have two entries");
    }
    config.random_ctr_range = {range[0], range[1]};
  }
  config.validate();
  return config;
}

std::string IdGen::next() {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "q%04d", ++counter_);
  return buffer;
}

std::string parse_new_question(std::string_view raw) {
  std::string lowered(raw);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::size_t pos = lowered.find("new question:");
  if (pos == std::string::npos) {
    throw Error(ErrorKind::parse,
                "strategies: no 'New Question:' marker in response: " + std::string(raw));
  }
  std::size_t start = pos + 13;
  std::size_t end = raw.find('\n', start);
  std::string_view slice = raw.substr(start, end == std::string_view::npos ? raw.size() - start
                                                                           : end - start);
  std::size_t first = slice.find_first_not_of(" \t\r");
  std::size_t last = slice.find_last_not_of(" \t\r");
  if (first == std::string_view::npos) {
    throw Error(ErrorKind::parse,
                "strategies: empty question after 'New Question:' marker: " + std::string(raw));
  }
  return std::string(slice.substr(first, last - first + 1));
}

std::vector<std::string> parse_question_lines(std::string_view raw) {
  std::vector<std::string> questions;
  std::istringstream stream{std::string(raw)};
  std::string line;
  while (std::getline(stream, line)) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    // Strip list markers: "3.", "3)", "-", "*", "Q3:".
    std::size_t start = i;
    if (i < line.size() && (line[i] == 'Q' || line[i] == 'q')) ++i;
    std::size_t digits = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > digits && i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) {
      ++i;
    } else if (start < line.size() && (line[start] == '-' || line[start] == '*')) {
      i = start + 1;
    } else {
      i = start;
    }
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t end = line.find_last_not_of(" \t\r");
    if (end == std::string::npos || end < i) continue;
    questions.push_back(line.substr(i, end - i + 1));
  }
  return questions;
}

std::string format_ctr_percent(double ctr) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.1f%%", ctr * 100.0);
  return buffer;
}

std::string build_initial_prompt(relevance::Domain domain, const std::string& topic, int n) {
  const char* template_id =
      domain == relevance::Domain::general_knowledge ? "initial_general_knowledge"
                                                     : "initial_ecommerce";
  return assets::substitute(assets::prompt_template(template_id),
                            {{"n", std::to_string(n)}, {"topic", topic}});
}

std::string build_plain_refine_prompt(const std::string& topic,
                                      const std::vector<std::string>& questions) {
  std::string blocks;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (i > 0) blocks += "\n\n";
    blocks += "Question: " + questions[i];
  }
  return assets::substitute(assets::prompt_template("refine_explore"),
                            {{"topic", topic}, {"question_blocks", blocks}});
}

std::string build_ctr_refine_prompt(const std::string& template_id, const std::string& topic,
                                    std::vector<std::pair<std::string, double>> question_ctrs) {
  std::stable_sort(question_ctrs.begin(), question_ctrs.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  std::string blocks;
  for (std::size_t i = 0; i < question_ctrs.size(); ++i) {
    if (i > 0) blocks += "\n\n";
    blocks += "Question: " + question_ctrs[i].first + "\nCTR: " +
              format_ctr_percent(question_ctrs[i].second);
  }
  return assets::substitute(assets::prompt_template(template_id),
                            {{"topic", topic}, {"question_blocks", blocks}});
}

namespace {

constexpr std::size_t kPromptWordLimit = 15;

std::vector<std::string> active_texts(const pool::PoolState& state) {
  std::vector<std::string> texts;
  for (const auto& q : state.questions) {
    if (q.active) texts.push_back(q.text);
  }
  return texts;
}

/// Latest observed CTR per question id, oldest record first so newer
/// measurements win.
std::map<std::string, double> last_known_ctr(const pool::PoolState& state) {
  std::map<std::string, double> ctr;
  for (const auto& record : state.history) {
    for (const auto& q : record.questions) ctr[q.id] = q.ctr;
  }
  return ctr;
}

std::map<std::string, double> observed_ctr_map(const pool::IterationRecord& observed) {
  std::map<std::string, double> ctr;
  for (const auto& q : observed.questions) ctr[q.id] = q.ctr;
  return ctr;
}

/// Generates one question through the backend, retrying on parse failures and
/// on texts that collide with the pool, and appends it to the state.
pool::Question generate_one(pool::PoolState& state, const std::string& prompt,
                            const std::string& template_id, pool::Provenance provenance,
                            llm_gateway::Backend& backend, int max_retries, IdGen& ids,
                            std::vector<GenerationResult>& generations) {
  GenerationResult trace;
  trace.template_id = template_id;
  trace.prompt = prompt;
  std::string last_problem;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    trace.retry_count = attempt;
    llm_gateway::Completion completion = backend.complete(prompt);
    trace.raw_response = completion.text;
    std::string text;
    try {
      text = parse_new_question(completion.text);
    } catch (const Error& e) {
      last_problem = e.what();
      continue;
    }
    pool::Question question{ids.next(), text, state.iteration, provenance, true};
    try {
      state = pool::add_questions(std::move(state), {question});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::duplicate_item) throw;
      last_problem = e.what();
      continue;
    }
    trace.parsed_questions = {text};
    trace.over_word_limit = {relevance::word_count(text) > kPromptWordLimit};
    generations.push_back(trace);
    return question;
  }
  throw Error(ErrorKind::strategy, "strategies: generation failed after " +
                                       std::to_string(max_retries) + " retries: " + last_problem);
}

}  // namespace

std::vector<pool::Question> initialize_pool(const std::string& topic, int n_init,
                                            relevance::Domain domain,
                                            llm_gateway::Backend& backend, int max_retries,
                                            IdGen& ids, GenerationResult* trace) {
  const std::string prompt = build_initial_prompt(domain, topic, n_init);
  std::size_t parsed_count = 0;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    llm_gateway::Completion completion = backend.complete(prompt);
    std::vector<std::string> texts = parse_question_lines(completion.text);

    std::vector<std::string> distinct;
    std::set<std::string> seen;
    for (const auto& text : texts) {
      if (seen.insert(pool::normalize_text(text)).second) distinct.push_back(text);
    }
    parsed_count = distinct.size();

    if (trace != nullptr) {
      trace->template_id = domain == relevance::Domain::general_knowledge
                               ? "initial_general_knowledge"
                               : "initial_ecommerce";
      trace->prompt = prompt;
      trace->raw_response = completion.text;
      trace->parsed_questions = distinct;
      trace->retry_count = attempt;
      trace->over_word_limit.clear();
      for (const auto& text : distinct) {
        trace->over_word_limit.push_back(relevance::word_count(text) > kPromptWordLimit);
      }
    }

    if (distinct.size() < static_cast<std::size_t>(n_init)) continue;
    distinct.resize(static_cast<std::size_t>(n_init));

    std::vector<pool::Question> questions;
    for (const auto& text : distinct) {
      questions.push_back(pool::Question{ids.next(), text, 0, pool::Provenance::init, true});
    }
    return questions;
  }
  throw Error(ErrorKind::strategy,
              "strategies: initialization yielded " + std::to_string(parsed_count) + " of " +
                  std::to_string(n_init) + " questions after " + std::to_string(max_retries) +
                  " retries");
}

RefineOutcome refine(pool::PoolState state, const StrategyConfig& strategy,
                     const pool::IterationRecord& observed, llm_gateway::Backend& backend,
                     Rng& rng, int max_retries, IdGen& ids) {
  strategy.validate();
  RefineOutcome outcome;

  auto generate_batch = [&](const std::string& prompt, const std::string& template_id,
                            pool::Provenance provenance, int count) {
    for (int i = 0; i < count; ++i) {
      pool::Question q = generate_one(state, prompt, template_id, provenance, backend,
                                      max_retries, ids, outcome.generations);
      outcome.added_ids.push_back(q.id);
    }
  };

  switch (strategy.kind) {
    case StrategyKind::no_drop: {
      const std::string prompt = build_plain_refine_prompt(state.topic, active_texts(state));
      generate_batch(prompt, "refine_explore", pool::Provenance::refine, strategy.n);
      break;
    }

    case StrategyKind::random_ctr: {
      // True CTR is never consulted: both the drop and the prompt run on
      // freshly drawn values, resampled every iteration.
      std::map<std::string, double> fake_ctr;
      std::vector<std::pair<std::string, double>> prompt_ctrs;
      for (const auto& q : state.questions) {
        double value = rng.uniform(strategy.random_ctr_range[0], strategy.random_ctr_range[1]);
        fake_ctr[q.id] = value;
        prompt_ctrs.emplace_back(q.text, value);
      }
      auto dropped = pool::drop_worst(std::move(state), strategy.n, fake_ctr);
      state = std::move(dropped.state);
      outcome.dropped_ids = std::move(dropped.dropped_ids);
      const std::string prompt =
          build_ctr_refine_prompt("refine_full_ctr", state.topic, std::move(prompt_ctrs));
      generate_batch(prompt, "refine_full_ctr", pool::Provenance::refine, strategy.n);
      break;
    }

    case StrategyKind::partial_ctr: {
      auto dropped = pool::drop_worst(std::move(state), strategy.n, observed_ctr_map(observed));
      state = std::move(dropped.state);
      outcome.dropped_ids = std::move(dropped.dropped_ids);
      const std::string prompt = build_plain_refine_prompt(state.topic, active_texts(state));
      generate_batch(prompt, "refine_explore", pool::Provenance::refine, strategy.n);
      break;
    }

    case StrategyKind::full_ctr: {
      auto dropped = pool::drop_worst(std::move(state), strategy.n, observed_ctr_map(observed));
      state = std::move(dropped.state);
      outcome.dropped_ids = std::move(dropped.dropped_ids);
      auto known = last_known_ctr(state);
      std::vector<std::pair<std::string, double>> prompt_ctrs;
      for (const auto& q : state.questions) prompt_ctrs.emplace_back(q.text, known.at(q.id));
      const std::string prompt =
          build_ctr_refine_prompt("refine_full_ctr", state.topic, std::move(prompt_ctrs));
      generate_batch(prompt, "refine_full_ctr", pool::Provenance::refine, strategy.n);
      break;
    }

    case StrategyKind::explore_exploit: {
      const bool dual = strategy.explore_exploit_mode == ExploreExploitMode::dual_set;
      const int drop_count = dual ? 2 * strategy.n : strategy.n;
      auto dropped = pool::drop_worst(std::move(state), drop_count, observed_ctr_map(observed));
      state = std::move(dropped.state);
      outcome.dropped_ids = std::move(dropped.dropped_ids);

      if (dual) {
        const std::string explore_prompt =
            build_plain_refine_prompt(state.topic, active_texts(state));
        generate_batch(explore_prompt, "refine_explore", pool::Provenance::explore, strategy.n);
      }

      // Questions added by the explore half this iteration have no measured
      // CTR yet and stay out of the exploit prompt.
      auto known = last_known_ctr(state);
      std::vector<std::pair<std::string, double>> prompt_ctrs;
      for (const auto& q : state.questions) {
        if (auto it = known.find(q.id); it != known.end()) {
          prompt_ctrs.emplace_back(q.text, it->second);
        }
      }
      const std::string exploit_prompt =
          build_ctr_refine_prompt("refine_explore_exploit", state.topic, std::move(prompt_ctrs));
      generate_batch(exploit_prompt, "refine_explore_exploit", pool::Provenance::exploit,
                     strategy.n);
      break;
    }
  }

  outcome.state = std::move(state);
  return outcome;
}

}  // namespace genrec::strategies
