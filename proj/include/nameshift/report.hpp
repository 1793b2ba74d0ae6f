//
// Copyright 2026 The NameShift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "nameshift/ensemble.hpp"
#include "nameshift/error.hpp"
#include "nameshift/probe.hpp"
#include "nameshift/trigger.hpp"

namespace nameshift {

inline constexpr int kReportSchemaVersion = 1;

// Reports carry no timestamps, hostnames, or worker counts: identical
// configuration and seed must produce byte-identical files.

inline Json assignment_to_json(const Assignment& a) {
  Json j = Json::object();
  for (const auto& [name_id, pieces] : a.names) {
    Json pj = Json::object();
    for (const auto& [part, piece] : pieces) pj[to_string(part)] = piece.surface;
    j[name_id] = std::move(pj);
  }
  return j;
}

inline Json random_block(double mean, double stddev,
                         const std::vector<double>& runs) {
  return Json{{"mean", mean}, {"std", stddev}, {"runs", runs}};
}

inline Json probe_records_json(const ProbeReport& report) {
  Json arr = Json::array();
  for (const auto& rec : report.records) {
    Json draws = Json::array();
    for (const auto& d : rec.draws)
      draws.push_back(Json{
          {"assignment", assignment_to_json(d.variant.assignment)},
          {"score", d.score}});
    arr.push_back(Json{
        {"id", rec.id},
        {"original_score", rec.original_score},
        {"worst_score", rec.draws[rec.worst_draw].score},
        {"best_score", rec.draws[rec.best_draw].score},
        {"stable", rec.stable},
        {"worst_assignment",
         assignment_to_json(rec.draws[rec.worst_draw].variant.assignment)},
        {"best_assignment",
         assignment_to_json(rec.draws[rec.best_draw].variant.assignment)},
        {"draws", std::move(draws)}});
  }
  return arr;
}

inline Json build_probe_report(const ProbeReport& report,
                               const RandomEvalResult& random_eval,
                               const GroupAnalysis& groups,
                               const Json& config_echo) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = "probe";
  j["config_echo"] = config_echo;
  j["scores"] = Json{{"original", report.original_score},
                     {"worst", report.worst_score},
                     {"best", report.best_score},
                     {"random", random_block(random_eval.mean,
                                             random_eval.stddev,
                                             random_eval.run_scores)}};
  j["stability"] = report.stability;
  j["per_instance"] = probe_records_json(report);
  Json rows = Json::array();
  for (const auto& g : groups.rows)
    rows.push_back(Json{{"group", g.group},
                        {"variant", g.variant},
                        {"score", g.score},
                        {"count", g.count}});
  j["groups"] = std::move(rows);
  if (!groups.notes.empty()) j["group_notes"] = groups.notes;
  if (report.partial) {
    j["partial"] = true;
    j["error"] = report.error;
  }
  return j;
}

inline Json build_eval_report(double score,
                              const std::vector<std::string>& ids,
                              const std::vector<double>& per_instance,
                              const Json& config_echo) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = "eval";
  j["config_echo"] = config_echo;
  j["scores"] = Json{{"original", score}};
  Json arr = Json::array();
  for (size_t i = 0; i < ids.size(); ++i)
    arr.push_back(Json{{"id", ids[i]}, {"score", per_instance[i]}});
  j["per_instance"] = std::move(arr);
  return j;
}

inline Json build_calibrate_report(double fitted, const std::vector<double>& grid,
                                   const Json& config_echo) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = "calibrate";
  j["config_echo"] = config_echo;
  j["fitted_temperature"] = fitted;
  j["grid"] = grid;
  return j;
}

inline Json build_trigger_report(const TriggerResult& result,
                                 const Json& config_echo) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = "trigger";
  j["config_echo"] = config_echo;
  Json arr = Json::array();
  for (size_t i : result.ranking) {
    const auto& p = result.state.params[i];
    std::string name;
    for (const auto& tok : result.state.vocabulary[i]) {
      if (!name.empty()) name += ' ';
      name += tok;
    }
    arr.push_back(Json{{"name", name},
                       {"alpha", p.alpha},
                       {"beta", p.beta},
                       {"posterior_mean", p.posterior_mean()},
                       {"times_sampled", p.times_sampled}});
  }
  j["candidates"] = std::move(arr);
  if (result.partial) {
    j["partial"] = true;
    j["error"] = result.error;
  }
  return j;
}

inline Json arm_to_json(const ArmScores& arm) {
  return Json{{"original", arm.original},
              {"worst", arm.worst},
              {"best", arm.best},
              {"random",
               random_block(arm.random_mean, arm.random_std, arm.random_runs)}};
}

inline Json build_defend_report(const DefendReport& report,
                                const DefendParams& params,
                                const Json& config_echo) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = "defend";
  j["config_echo"] = config_echo;
  j["scores"] = Json{{"undefended", arm_to_json(report.undefended)},
                     {"defended", arm_to_json(report.defended)}};
  j["stability"] = report.probe.stability;
  j["defense"] = Json{{"temperature", params.temperature},
                      {"confidence_default", params.confidence_default},
                      {"m", params.m}};
  j["per_instance"] = probe_records_json(report.probe);
  if (report.partial) {
    j["partial"] = true;
    j["error"] = report.error;
  }
  return j;
}

// ---------------------------------------------------------------------------

inline void validate_report(const Json& j) {
  auto need = [&](const Json& node, const char* key, const char* where) {
    if (!node.contains(key))
      throw DataError(std::string("report lacks required field '") + key +
                      "' in " + where);
  };
  need(j, "schema_version", "root");
  if (j.at("schema_version").get<int>() != kReportSchemaVersion)
    throw DataError("unsupported report schema version");
  need(j, "command", "root");
  need(j, "config_echo", "root");
  std::string command = j.at("command").get<std::string>();

  auto check_scores_block = [&](const Json& s, const char* where) {
    need(s, "original", where);
    need(s, "worst", where);
    need(s, "best", where);
    need(s, "random", where);
    need(s.at("random"), "mean", where);
    need(s.at("random"), "std", where);
    need(s.at("random"), "runs", where);
  };

  if (command == "probe") {
    need(j, "scores", "root");
    check_scores_block(j.at("scores"), "scores");
    need(j, "stability", "root");
    double s = j.at("stability").get<double>();
    if (s < 0.0 || s > 1.0) throw DataError("stability outside [0,1]");
    need(j, "per_instance", "root");
    need(j, "groups", "root");
  } else if (command == "defend") {
    need(j, "scores", "root");
    need(j.at("scores"), "undefended", "scores");
    need(j.at("scores"), "defended", "scores");
    check_scores_block(j.at("scores").at("undefended"), "scores.undefended");
    check_scores_block(j.at("scores").at("defended"), "scores.defended");
    need(j, "stability", "root");
    need(j, "defense", "root");
    need(j, "per_instance", "root");
  } else if (command == "trigger") {
    need(j, "candidates", "root");
    for (const auto& c : j.at("candidates")) {
      need(c, "name", "candidates[]");
      need(c, "alpha", "candidates[]");
      need(c, "beta", "candidates[]");
      need(c, "posterior_mean", "candidates[]");
      need(c, "times_sampled", "candidates[]");
    }
  } else if (command == "calibrate") {
    need(j, "fitted_temperature", "root");
    if (!(j.at("fitted_temperature").get<double>() > 0.0))
      throw DataError("fitted temperature must be positive");
  } else if (command == "eval") {
    need(j, "scores", "root");
    need(j.at("scores"), "original", "scores");
    need(j, "per_instance", "root");
  } else {
    throw DataError("unknown report command '" + command + "'");
  }
}

inline void write_report(const Json& j, const std::string& path) {
  validate_report(j);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open report file for writing: " + path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Plain-text rendering of a report file.

namespace detail {

inline std::string pct(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * x;
  return os.str();
}

inline std::string num(double x, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << x;
  return os.str();
}

inline void render_scores_row(std::ostringstream& os, const std::string& label,
                              const Json& s) {
  os << "  " << std::left << std::setw(12) << label << std::right
     << std::setw(9) << pct(s.at("original").get<double>()) << std::setw(9)
     << pct(s.at("worst").get<double>()) << std::setw(9)
     << pct(s.at("best").get<double>()) << std::setw(16)
     << (pct(s.at("random").at("mean").get<double>()) + " (" +
         num(100.0 * s.at("random").at("std").get<double>(), 2) + ")")
     << "\n";
}

}  // namespace detail

inline std::string render_report(const Json& j) {
  validate_report(j);
  std::ostringstream os;
  std::string command = j.at("command").get<std::string>();
  os << "command: " << command << "\n";
  for (const auto& [key, value] : j.at("config_echo").items())
    os << "  " << key << ": "
       << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
  if (j.value("partial", false))
    os << "PARTIAL RESULTS: " << j.value("error", std::string("unknown error"))
       << "\n";
  os << "\n";

  if (command == "probe") {
    os << "  " << std::left << std::setw(12) << "" << std::right
       << std::setw(9) << "original" << std::setw(9) << "worst" << std::setw(9)
       << "best" << std::setw(16) << "random (std)" << "\n";
    detail::render_scores_row(os, "score", j.at("scores"));
    os << "\n  stability: " << detail::pct(j.at("stability").get<double>())
       << "% over " << j.at("per_instance").size() << " instances\n";
    if (!j.at("groups").empty()) {
      os << "\n  by replacement length:\n";
      for (const auto& g : j.at("groups"))
        os << "    " << std::left << std::setw(4)
           << g.at("group").get<std::string>() << std::setw(10)
           << g.at("variant").get<std::string>() << std::right << std::setw(9)
           << detail::pct(g.at("score").get<double>()) << "  (n="
           << g.at("count").get<size_t>() << ")\n";
    }
  } else if (command == "defend") {
    os << "  " << std::left << std::setw(12) << "" << std::right
       << std::setw(9) << "original" << std::setw(9) << "worst" << std::setw(9)
       << "best" << std::setw(16) << "random (std)" << "\n";
    detail::render_scores_row(os, "undefended", j.at("scores").at("undefended"));
    detail::render_scores_row(os, "defended", j.at("scores").at("defended"));
    const Json& d = j.at("defense");
    os << "\n  defense: M=" << d.at("m").get<int>()
       << " T=" << detail::num(d.at("temperature").get<double>(), 2)
       << " default confidence="
       << detail::num(d.at("confidence_default").get<double>(), 2) << "\n";
    os << "  stability (undefended): "
       << detail::pct(j.at("stability").get<double>()) << "%\n";
  } else if (command == "trigger") {
    os << "  top candidates (posterior mean):\n";
    size_t shown = 0;
    for (const auto& c : j.at("candidates")) {
      if (++shown > 10) break;
      os << "    " << std::left << std::setw(20)
         << c.at("name").get<std::string>() << std::right << "mean="
         << detail::num(c.at("posterior_mean").get<double>()) << "  alpha="
         << detail::num(c.at("alpha").get<double>(), 2) << "  beta="
         << detail::num(c.at("beta").get<double>(), 2) << "  sampled="
         << c.at("times_sampled").get<size_t>() << "\n";
    }
  } else if (command == "calibrate") {
    os << "  fitted temperature: "
       << detail::num(j.at("fitted_temperature").get<double>(), 2) << "\n";
  } else if (command == "eval") {
    os << "  score: " << detail::pct(j.at("scores").at("original").get<double>())
       << "% over " << j.at("per_instance").size() << " instances\n";
  }
  return os.str();
}

}  // namespace nameshift
