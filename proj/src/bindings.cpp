#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "genrec/assets.hpp"
#include "genrec/click_model.hpp"
#include "genrec/errors.hpp"
#include "genrec/experiment.hpp"
#include "genrec/relevance.hpp"
#include "genrec/strategies.hpp"

namespace py = pybind11;

namespace {

using genrec::click_model::ClickModelParams;

std::string run_experiment_json(const std::string& config_json, const std::string& journal_path) {
  auto config = genrec::experiment::ExperimentConfig::from_json(
      nlohmann::json::parse(config_json));
  if (journal_path.empty()) {
    genrec::NullJournal journal;
    return genrec::experiment::run(config, journal).summary_json().dump();
  }
  genrec::FileJournal journal(journal_path);
  return genrec::experiment::run(config, journal).summary_json().dump();
}

std::string variance_study_json(const std::string& config_json,
                                const std::vector<long>& s_values, int replications) {
  auto config = genrec::experiment::ExperimentConfig::from_json(
      nlohmann::json::parse(config_json));
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : genrec::experiment::variance_study(config, s_values, replications)) {
    rows.push_back({{"s", row.interactions},
                    {"overall_ctr_variance", row.overall_ctr_variance},
                    {"mean_question_ctr_variance", row.mean_question_ctr_variance},
                    {"mean_overall_ctr", row.mean_overall_ctr}});
  }
  return rows.dump();
}

}  // namespace

PYBIND11_MODULE(_genrec, m) {
  m.doc() = "Core bindings for the genrec click simulator and pool optimizer";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const genrec::Error& e) {
      switch (e.kind()) {
        case genrec::ErrorKind::invalid_input:
        case genrec::ErrorKind::parse:
          PyErr_SetString(PyExc_ValueError, e.what());
          break;
        default:
          PyErr_SetString(PyExc_RuntimeError, e.what());
      }
    }
  });

  m.def(
      "theoretical_ctr",
      [](double score, int k, double temperature, double rejection_score) {
        return genrec::click_model::theoretical_ctr(score, k,
                                                    ClickModelParams{temperature, rejection_score});
      },
      py::arg("score"), py::arg("k") = 3, py::arg("temperature") = 1.5,
      py::arg("rejection_score") = 11.0,
      "Overall click probability for k equal-score shown questions");

  m.def(
      "action_distribution",
      [](const std::vector<double>& scores, double temperature, double rejection_score) {
        auto dist = genrec::click_model::action_distribution(
            scores, ClickModelParams{temperature, rejection_score});
        return py::make_tuple(dist.click_probabilities, dist.no_click_probability);
      },
      py::arg("scores"), py::arg("temperature") = 1.5, py::arg("rejection_score") = 11.0,
      "(per-question click probabilities, no-click probability)");

  m.def(
      "sample_action",
      [](const std::vector<double>& scores, double temperature, double rejection_score,
         std::uint64_t seed) -> std::optional<std::size_t> {
        genrec::Rng rng(seed);
        return genrec::click_model::sample_action(
            scores, ClickModelParams{temperature, rejection_score}, rng);
      },
      py::arg("scores"), py::arg("temperature") = 1.5, py::arg("rejection_score") = 11.0,
      py::arg("seed") = 0, "Index of the clicked question, or None");

  m.def("score_length_words", &genrec::relevance::score_length_words, py::arg("question"));
  m.def("score_length_chars", &genrec::relevance::score_length_chars, py::arg("question"));
  m.def(
      "score_keyword_persona",
      [](const std::string& question, double base,
         const std::map<std::string, double>& patterns) {
        genrec::relevance::KeywordProfile profile;
        profile.base = base;
        for (const auto& [pattern, weight] : patterns) {
          profile.patterns.emplace_back(pattern, weight);
        }
        return genrec::relevance::score_keyword_persona(question, profile);
      },
      py::arg("question"), py::arg("base") = 3.0,
      py::arg("patterns") = std::map<std::string, double>{});

  m.def(
      "parse_new_question",
      [](const std::string& raw) { return genrec::strategies::parse_new_question(raw); },
      py::arg("response"));

  m.def("run_experiment_json", &run_experiment_json, py::arg("config_json"),
        py::arg("journal_path") = std::string{},
        "Run a full experiment; returns the RunResult summary as a JSON string");
  m.def("variance_study_json", &variance_study_json, py::arg("config_json"),
        py::arg("s_values"), py::arg("replications") = 100);

  m.def("default_config_json", []() {
    return genrec::experiment::ExperimentConfig::defaults().to_json().dump();
  });
  m.def("builtin_personas_json",
        []() { return std::string(genrec::assets::personas_json()); });
  m.def(
      "topics",
      [](const std::string& domain) {
        return genrec::assets::topics(genrec::relevance::domain_from_name(domain));
      },
      py::arg("domain"));
  m.def(
      "prompt_template",
      [](const std::string& id) { return std::string(genrec::assets::prompt_template(id)); },
      py::arg("id"));

  m.attr("__version__") = "0.1.0";
}
