#include "genrec/pool.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "genrec/errors.hpp"

namespace genrec::pool {

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::init: return "init";
    case Provenance::explore: return "explore";
    case Provenance::exploit: return "exploit";
    case Provenance::refine: return "refine";
  }
  return "unknown";
}

Provenance provenance_from_name(std::string_view name) {
  if (name == "init") return Provenance::init;
  if (name == "explore") return Provenance::explore;
  if (name == "exploit") return Provenance::exploit;
  if (name == "refine") return Provenance::refine;
  throw Error(ErrorKind::parse, "pool: unknown provenance '" + std::string(name) + "'");
}

nlohmann::json IterationRecord::to_json() const {
  nlohmann::json qs = nlohmann::json::array();
  for (const auto& q : questions) {
    qs.push_back({{"id", q.id},
                  {"text", q.text},
                  {"impressions", q.impressions},
                  {"clicks", q.clicks},
                  {"ctr", q.ctr}});
  }
  return nlohmann::json{{"iteration", iteration}, {"questions", qs},
                        {"overall_ctr", overall_ctr}, {"mean_score", mean_score},
                        {"dropped", dropped},        {"added", added}};
}

IterationRecord IterationRecord::from_json(const nlohmann::json& j) {
  IterationRecord rec;
  rec.iteration = j.at("iteration").get<int>();
  rec.overall_ctr = j.at("overall_ctr").get<double>();
  rec.mean_score = j.at("mean_score").get<double>();
  rec.dropped = j.value("dropped", std::vector<std::string>{});
  rec.added = j.value("added", std::vector<std::string>{});
  for (const auto& q : j.value("questions", nlohmann::json::array())) {
    rec.questions.push_back(QuestionStats{q.at("id").get<std::string>(),
                                          q.value("text", std::string{}),
                                          q.at("impressions").get<long>(),
                                          q.at("clicks").get<long>(),
                                          q.at("ctr").get<double>()});
  }
  return rec;
}

std::vector<Question> PoolState::active_questions() const {
  std::vector<Question> active;
  for (const auto& q : questions) {
    if (q.active) active.push_back(q);
  }
  return active;
}

std::size_t PoolState::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(questions.begin(), questions.end(), [](const Question& q) { return q.active; }));
}

const Question* PoolState::find(std::string_view id) const {
  for (const auto& q : questions) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  while (!out.empty()) {
    char back = out.back();
    if (back == '?' || back == '.' || back == '!' || back == ',' || back == ';' || back == ':') {
      out.pop_back();
    } else {
      break;
    }
  }
  return out;
}

DropOutcome drop_worst(PoolState state, int n, const std::map<std::string, double>& ctr_by_id) {
  std::vector<std::size_t> active_indices;
  for (std::size_t i = 0; i < state.questions.size(); ++i) {
    if (state.questions[i].active) active_indices.push_back(i);
  }
  if (n < 0 || static_cast<std::size_t>(n) > active_indices.size()) {
    throw Error(ErrorKind::invalid_input,
                "pool: cannot drop " + std::to_string(n) + " of " +
                    std::to_string(active_indices.size()) + " active questions");
  }
  for (std::size_t i : active_indices) {
    if (!ctr_by_id.contains(state.questions[i].id)) {
      throw Error(ErrorKind::invalid_state,
                  "pool: no CTR entry for active question '" + state.questions[i].id + "'");
    }
  }

  std::sort(active_indices.begin(), active_indices.end(),
            [&](std::size_t a, std::size_t b) {
              const Question& qa = state.questions[a];
              const Question& qb = state.questions[b];
              double ca = ctr_by_id.at(qa.id);
              double cb = ctr_by_id.at(qb.id);
              if (ca != cb) return ca < cb;
              if (qa.created_iteration != qb.created_iteration) {
                return qa.created_iteration < qb.created_iteration;
              }
              return qa.id < qb.id;
            });

  DropOutcome outcome;
  for (int i = 0; i < n; ++i) {
    state.questions[active_indices[static_cast<std::size_t>(i)]].active = false;
    outcome.dropped_ids.push_back(state.questions[active_indices[static_cast<std::size_t>(i)]].id);
  }
  outcome.state = std::move(state);
  return outcome;
}

PoolState add_questions(PoolState state, std::vector<Question> fresh) {
  std::set<std::string> known;
  for (const auto& q : state.questions) known.insert(normalize_text(q.text));

  for (auto& q : fresh) {
    if (q.text.empty()) {
      throw Error(ErrorKind::invalid_input, "pool: question text must be non-empty");
    }
    std::string normalized = normalize_text(q.text);
    if (!known.insert(normalized).second) {
      throw Error(ErrorKind::duplicate_item,
                  "pool: duplicate question text '" + q.text + "'");
    }
    q.active = true;
    q.created_iteration = state.iteration;
    state.questions.push_back(std::move(q));
  }
  return state;
}

std::vector<std::string> fold_history_active_ids(const std::vector<IterationRecord>& history) {
  std::vector<std::string> active;
  for (const auto& record : history) {
    for (const auto& id : record.dropped) {
      std::erase(active, id);
    }
    active.insert(active.end(), record.added.begin(), record.added.end());
  }
  return active;
}

}  // namespace genrec::pool
