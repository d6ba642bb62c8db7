#include "genrec/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "genrec/assets.hpp"
#include "genrec/errors.hpp"
#include "genrec/experiment.hpp"

namespace genrec::cli {

namespace {

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config: return exit_config;
    case ErrorKind::backend:
    case ErrorKind::transcript_mismatch:
    case ErrorKind::transcript_exhausted:
    case ErrorKind::bank_exhausted: return exit_backend;
    case ErrorKind::strategy: return exit_strategy;
    case ErrorKind::parse:
    case ErrorKind::scoring: return exit_parse;
    case ErrorKind::invalid_input:
    case ErrorKind::invalid_state:
    case ErrorKind::duplicate_item: return exit_invalid;
  }
  return exit_failure;
}

nlohmann::json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::config, "cli: cannot open config '" + path + "'");
  }
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, "cli: config '" + path + "': " + e.what());
  }
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

/// "lo:hi" or "lo:hi:step"; a bare number is a one-element range.
std::vector<double> parse_range(const std::string& text, double default_step) {
  std::vector<double> parts;
  std::istringstream stream(text);
  std::string segment;
  while (std::getline(stream, segment, ':')) parts.push_back(std::stod(segment));
  if (parts.empty() || parts.size() > 3) {
    throw Error(ErrorKind::config, "cli: bad range '" + text + "' (want lo:hi[:step])");
  }
  if (parts.size() == 1) return {parts[0]};
  double lo = parts[0], hi = parts[1];
  double step = parts.size() == 3 ? parts[2] : default_step;
  if (step <= 0 || hi < lo) {
    throw Error(ErrorKind::config, "cli: bad range '" + text + "'");
  }
  std::vector<double> values;
  for (double v = lo; v <= hi + 1e-9; v += step) values.push_back(v);
  return values;
}

std::vector<long> parse_long_list(const std::string& text) {
  std::vector<long> values;
  std::istringstream stream(text);
  std::string segment;
  while (std::getline(stream, segment, ',')) values.push_back(std::stol(segment));
  if (values.empty()) {
    throw Error(ErrorKind::config, "cli: empty list '" + text + "'");
  }
  return values;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::config, "cli: cannot write '" + path + "'");
  }
  out << content;
}

struct SweepPoint {
  double score, temperature, rejection_score, ctr;
  int k;
};

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string csv = "score,k,temperature,rejection_score,theoretical_ctr\n";
  for (const auto& p : points) {
    csv += format_double(p.score) + "," + std::to_string(p.k) + "," +
           format_double(p.temperature) + "," + format_double(p.rejection_score) + "," +
           format_double(p.ctr) + "\n";
  }
  return csv;
}

void emit(const std::string& output_path, const std::string& data) {
  if (output_path.empty()) {
    std::cout << data;
  } else {
    write_text(output_path, data);
  }
}

int cmd_run(const std::string& config_path, const std::string& output_dir,
            const std::vector<std::string>& overrides, bool is_replay,
            const std::string& transcript) {
  nlohmann::json config_json = load_config_json(config_path);
  for (const auto& assignment : overrides) apply_override(config_json, assignment);
  if (is_replay) {
    config_json["backend"] = {{"kind", "replay"}, {"transcript", transcript}};
  }
  experiment::ExperimentConfig config = experiment::ExperimentConfig::from_json(config_json);

  std::filesystem::create_directories(output_dir);
  FileJournal journal(output_dir + "/run_log.jsonl");
  experiment::RunResult result = experiment::run(config, journal);

  write_text(output_dir + "/summary.json", result.summary_json().dump(2) + "\n");

  std::string results_csv = "iteration,overall_ctr,mean_score\n";
  for (const auto& record : result.records) {
    results_csv += std::to_string(record.iteration) + "," + format_double(record.overall_ctr) +
                   "," + format_double(record.mean_score) + "\n";
  }
  write_text(output_dir + "/results.csv", results_csv);

  std::string questions_csv = "iteration,question_id,text,impressions,clicks,ctr\n";
  for (const auto& record : result.records) {
    for (const auto& q : record.questions) {
      questions_csv += std::to_string(record.iteration) + "," + q.id + "," + csv_quote(q.text) +
                       "," + std::to_string(q.impressions) + "," + std::to_string(q.clicks) +
                       "," + format_double(q.ctr) + "\n";
    }
  }
  write_text(output_dir + "/questions.csv", questions_csv);

  std::cout << "topic: " << config.topic << "\n"
            << "strategy: " << strategies::strategy_kind_name(config.strategy.kind) << "\n"
            << "iteration  overall_ctr  mean_score\n";
  for (const auto& record : result.records) {
    std::printf("%9d  %11.4f  %10.4f\n", record.iteration, record.overall_ctr,
                record.mean_score);
  }
  std::printf("avg_ctr %.4f  last_ctr %.4f\n", result.avg_ctr, result.last_ctr);
  std::cout << "artifacts: " << output_dir << "/{run_log.jsonl,summary.json,results.csv,questions.csv}\n";
  return exit_ok;
}

int cmd_sweep_theoretical(bool temperature_sweep, const std::string& scores_range,
                          const std::string& var_range, double fixed_t, double fixed_rs, int k,
                          const std::string& output_path) {
  std::vector<double> scores = parse_range(scores_range, 1.0);
  std::vector<SweepPoint> points;
  if (temperature_sweep) {
    for (double t : parse_range(var_range, 0.25)) {
      for (double score : scores) {
        click_model::ClickModelParams params{t, fixed_rs};
        points.push_back(SweepPoint{score, t, fixed_rs,
                                    click_model::theoretical_ctr(score, k, params), k});
      }
    }
  } else {
    for (double rs : parse_range(var_range, 0.5)) {
      for (double score : scores) {
        click_model::ClickModelParams params{fixed_t, rs};
        points.push_back(SweepPoint{score, fixed_t, rs,
                                    click_model::theoretical_ctr(score, k, params), k});
      }
    }
  }
  emit(output_path, sweep_csv(points));
  return exit_ok;
}

int cmd_sweep_s_count(const std::string& s_list, int replications,
                      const std::string& config_path, std::uint64_t seed,
                      const std::string& output_path) {
  std::vector<long> s_values = parse_long_list(s_list);
  std::vector<experiment::VarianceRow> rows;
  if (!config_path.empty()) {
    experiment::ExperimentConfig config =
        experiment::ExperimentConfig::from_json(load_config_json(config_path));
    rows = experiment::variance_study(config, s_values, replications);
  } else {
    // Frozen pool of 5 with random scores in [1,10].
    Rng rng = derive_stream(seed, "sweep-pool");
    std::vector<double> scores;
    for (int i = 0; i < 5; ++i) scores.push_back(rng.uniform(1.0, 10.0));
    rows = experiment::variance_study_scores(scores, s_values, replications, 3,
                                             click_model::ClickModelParams{}, seed);
  }
  std::string csv = "s,overall_ctr_variance,mean_question_ctr_variance,mean_overall_ctr\n";
  for (const auto& row : rows) {
    csv += std::to_string(row.interactions) + "," + format_double(row.overall_ctr_variance) +
           "," + format_double(row.mean_question_ctr_variance) + "," +
           format_double(row.mean_overall_ctr) + "\n";
  }
  emit(output_path, csv);
  return exit_ok;
}

int cmd_report(const std::vector<std::string>& log_paths, const std::string& csv_path) {
  std::vector<RunLogSeries> series;
  for (const auto& path : log_paths) series.push_back(parse_run_log(path));

  std::stable_sort(series.begin(), series.end(),
                   [](const RunLogSeries& a, const RunLogSeries& b) { return a.topic < b.topic; });

  std::printf("%-28s %-16s %9s %9s\n", "topic", "strategy", "avg_ctr", "last_ctr");
  for (const auto& s : series) {
    std::printf("%-28s %-16s %9.4f %9.4f\n", s.topic.c_str(), s.strategy.c_str(), s.avg_ctr,
                s.last_ctr);
  }

  if (!csv_path.empty()) {
    std::string csv = "log,topic,strategy,iteration,overall_ctr,mean_score\n";
    for (const auto& s : series) {
      for (std::size_t i = 0; i < s.iterations.size(); ++i) {
        csv += csv_quote(s.path) + "," + csv_quote(s.topic) + "," + s.strategy + "," +
               std::to_string(s.iterations[i]) + "," + format_double(s.overall_ctr[i]) + "," +
               format_double(s.mean_score[i]) + "\n";
      }
    }
    write_text(csv_path, csv);
  }
  return exit_ok;
}

int cmd_init_config(const std::string& output_path, const std::string& topic,
                    const std::string& domain) {
  experiment::ExperimentConfig config = experiment::ExperimentConfig::defaults();
  if (!topic.empty()) config.topic = topic;
  if (!domain.empty()) config.domain = relevance::domain_from_name(domain);
  config.validate();
  write_text(output_path, config.to_json().dump(2) + "\n");
  std::cout << "wrote " << output_path << "\n";
  return exit_ok;
}

int cmd_validate(const std::string& config_path, const std::vector<std::string>& overrides) {
  nlohmann::json config_json = load_config_json(config_path);
  for (const auto& assignment : overrides) apply_override(config_json, assignment);
  experiment::ExperimentConfig config = experiment::ExperimentConfig::from_json(config_json);
  std::cout << "ok: topic='" << config.topic << "' strategy="
            << strategies::strategy_kind_name(config.strategy.kind)
            << " backend=" << llm_gateway::backend_kind_name(config.backend.kind) << "\n";
  return exit_ok;
}

}  // namespace

void apply_override(nlohmann::json& config, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorKind::config, "cli: override must look like dotted.key=value, got '" +
                                       assignment + "'");
  }
  const std::string dotted = assignment.substr(0, eq);
  const std::string raw_value = assignment.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw_value);
  } catch (const nlohmann::json::parse_error&) {
    value = raw_value;  // plain string
  }

  nlohmann::json* node = &config;
  std::istringstream stream(dotted);
  std::string segment;
  std::vector<std::string> segments;
  while (std::getline(stream, segment, '.')) segments.push_back(segment);
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    node = &(*node)[segments[i]];
  }
  (*node)[segments.back()] = value;
}

RunLogSeries parse_run_log(const std::string& path) {
  RunLogSeries series;
  series.path = path;
  bool saw_config = false;
  for (const auto& record : read_journal_lines(path)) {
    if (!record.contains("type")) continue;
    const std::string type = record["type"];
    try {
      if (type == "config") {
        series.topic = record.at("config").value("topic", "");
        series.strategy = record.at("config").at("strategy").value("kind", "");
        saw_config = true;
      } else if (type == "iteration") {
        pool::IterationRecord rec = pool::IterationRecord::from_json(record.at("record"));
        series.iterations.push_back(rec.iteration);
        series.overall_ctr.push_back(rec.overall_ctr);
        series.mean_score.push_back(rec.mean_score);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, "cli: run log '" + path + "': " + e.what());
    }
  }
  if (!saw_config || series.iterations.empty()) {
    throw Error(ErrorKind::parse,
                "cli: run log '" + path + "' is missing config or iteration records");
  }
  double total = 0.0;
  for (double v : series.overall_ctr) total += v;
  series.avg_ctr = total / static_cast<double>(series.overall_ctr.size());
  series.last_ctr = series.overall_ctr.back();
  return series;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Generative question-pool optimizer and click simulator"};
  app.require_subcommand(1);

  std::string config_path, output_dir = "run_out", transcript, output_path;
  std::vector<std::string> overrides;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file");
  run_cmd->add_option("-c,--config", config_path, "config JSON path")->required();
  run_cmd->add_option("-o,--output", output_dir, "output directory");
  run_cmd->add_option("--set", overrides, "dotted.key=value config override");

  auto* replay_cmd = app.add_subcommand("replay", "Re-run an experiment from a journaled log");
  replay_cmd->add_option("-c,--config", config_path, "config JSON path")->required();
  replay_cmd->add_option("-t,--transcript", transcript, "journaled run log / transcript")
      ->required();
  replay_cmd->add_option("-o,--output", output_dir, "output directory");
  replay_cmd->add_option("--set", overrides, "dotted.key=value config override");

  auto* validate_cmd = app.add_subcommand("validate", "Validate a config file");
  validate_cmd->add_option("-c,--config", config_path, "config JSON path")->required();
  validate_cmd->add_option("--set", overrides, "dotted.key=value config override");

  std::string init_topic, init_domain, init_output = "experiment.json";
  auto* init_cmd = app.add_subcommand("init-config", "Write a config with the default setup");
  init_cmd->add_option("-o,--output", init_output, "output path");
  init_cmd->add_option("--topic", init_topic, "topic override");
  init_cmd->add_option("--domain", init_domain, "e-commerce | general-knowledge | synthetic");

  auto* sweep_cmd = app.add_subcommand("sweep", "Emit CSV sweeps of the click model");
  sweep_cmd->require_subcommand(1);
  std::string scores_range = "1:10", rs_range = "8:14:0.5", t_range = "1.0:3.0:0.25";
  std::string s_list = "100,1000,5000,50000";
  double fixed_t = 1.5, fixed_rs = 11.0;
  int k = 3, replications = 100;
  std::uint64_t sweep_seed = 1;
  std::string sweep_config;

  auto* rs_cmd = sweep_cmd->add_subcommand("rs", "theoretical CTR across rejection scores");
  rs_cmd->add_option("--scores", scores_range, "score range lo:hi[:step]");
  rs_cmd->add_option("--rs", rs_range, "rejection score range lo:hi[:step]");
  rs_cmd->add_option("--temperature", fixed_t, "fixed temperature");
  rs_cmd->add_option("--k", k, "shown question count");
  rs_cmd->add_option("-o,--output", output_path, "CSV path (stdout when omitted)");

  auto* t_cmd = sweep_cmd->add_subcommand("temperature", "theoretical CTR across temperatures");
  t_cmd->add_option("--scores", scores_range, "score range lo:hi[:step]");
  t_cmd->add_option("--t", t_range, "temperature range lo:hi[:step]");
  t_cmd->add_option("--rs", fixed_rs, "fixed rejection score");
  t_cmd->add_option("--k", k, "shown question count");
  t_cmd->add_option("-o,--output", output_path, "CSV path (stdout when omitted)");

  auto* s_cmd = sweep_cmd->add_subcommand("s-count", "CTR variance across simulation counts");
  s_cmd->add_option("--s", s_list, "comma-separated S values");
  s_cmd->add_option("--replications", replications, "replications per S");
  s_cmd->add_option("-c,--config", sweep_config, "freeze the pool from this config");
  s_cmd->add_option("--seed", sweep_seed, "seed for the default frozen pool");
  s_cmd->add_option("-o,--output", output_path, "CSV path (stdout when omitted)");

  std::vector<std::string> log_paths;
  std::string report_csv;
  auto* report_cmd = app.add_subcommand("report", "Summarize one or more run logs");
  report_cmd->add_option("logs", log_paths, "run log paths")->required();
  report_cmd->add_option("--csv", report_csv, "write per-iteration series CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_config;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, output_dir, overrides, false, "");
    if (replay_cmd->parsed()) return cmd_run(config_path, output_dir, overrides, true, transcript);
    if (validate_cmd->parsed()) return cmd_validate(config_path, overrides);
    if (init_cmd->parsed()) return cmd_init_config(init_output, init_topic, init_domain);
    if (sweep_cmd->parsed()) {
      if (rs_cmd->parsed()) {
        return cmd_sweep_theoretical(false, scores_range, rs_range, fixed_t, fixed_rs, k,
                                     output_path);
      }
      if (t_cmd->parsed()) {
        return cmd_sweep_theoretical(true, scores_range, t_range, fixed_t, fixed_rs, k,
                                     output_path);
      }
      if (s_cmd->parsed()) {
        return cmd_sweep_s_count(s_list, replications, sweep_config, sweep_seed, output_path);
      }
    }
    if (report_cmd->parsed()) return cmd_report(log_paths, report_csv);
  } catch (const Error& e) {
    std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_failure;
  }
  return exit_failure;
}

}  // namespace genrec::cli
