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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nameshift/calibrate.hpp"
#include "nameshift/corpus.hpp"
#include "nameshift/ensemble.hpp"
#include "nameshift/error.hpp"
#include "nameshift/metrics.hpp"
#include "nameshift/oracle.hpp"
#include "nameshift/probe.hpp"
#include "nameshift/remote.hpp"
#include "nameshift/report.hpp"
#include "nameshift/trigger.hpp"

namespace ns = nameshift;
namespace fs = std::filesystem;

namespace {

struct CliOptions {
  std::string dataset;
  std::string lexicon;
  std::string oracle;
  std::string metric;
  std::string entity_type;
  std::string canonical;
  std::string frequencies;
  std::string out;
  std::string report_in;
  int budget = 50;
  int iterations = 20;
  int runs = 10;
  int m = 3;
  double temperature = 2.0;
  double confidence_default = 0.9;
  uint64_t seed = 0;
  int workers = 1;
};

void require_file(const std::string& path, const std::string& flag) {
  if (!fs::exists(path))
    throw ns::ConfigError(flag + ": file does not exist: " + path);
}

ns::OraclePtr make_oracle(const std::string& spec_string, ns::Task task) {
  ns::OracleSpec spec = ns::OracleSpec::parse(spec_string);
  ns::OraclePtr backend;
  switch (spec.kind) {
    case ns::OracleSpec::Kind::table:
      require_file(spec.param, "--oracle");
      backend = std::make_shared<ns::TableOracle>(
          ns::TableOracle::from_file(spec.param));
      break;
    case ns::OracleSpec::Kind::bow:
      require_file(spec.param, "--oracle");
      backend = std::make_shared<ns::BowClassifier>(
          ns::BowClassifier::from_file(spec.param));
      break;
    case ns::OracleSpec::Kind::remote:
      backend = std::make_shared<ns::RemoteOracle>(spec.param, task);
      break;
  }
  if (backend->task() != task)
    throw ns::ConfigError(std::string("oracle answers task ") +
                          ns::to_string(backend->task()) +
                          " but the dataset task is " + ns::to_string(task));
  return std::make_shared<ns::CachingOracle>(std::move(backend));
}

std::vector<ns::TokenSeq> vocabulary_from_lexicon(
    const ns::NameLexicon& lexicon, const std::string& entity_type) {
  std::vector<ns::TokenSeq> vocab;
  std::set<std::string> seen;
  for (size_t i = 0; i < lexicon.size(); ++i) {
    const ns::LexiconEntry& e = lexicon.entry(i);
    if (e.entity_type != entity_type) continue;
    if (seen.insert(e.surface_string()).second) vocab.push_back(e.surface);
  }
  return vocab;
}

int cmd_probe(const CliOptions& o) {
  require_file(o.dataset, "--dataset");
  require_file(o.lexicon, "--lexicon");
  if (!o.frequencies.empty()) require_file(o.frequencies, "--frequencies");
  auto dataset = ns::load_dataset(o.dataset);
  auto lexicon = ns::load_lexicon(o.lexicon);
  if (dataset.empty()) throw ns::DataError("dataset is empty: " + o.dataset);
  auto oracle = make_oracle(o.oracle, dataset.front().task);
  auto metric = ns::make_metric(o.metric);

  ns::ProbeConfig cfg;
  cfg.budget = o.budget;
  cfg.entity_type = o.entity_type;
  cfg.seed = o.seed;
  cfg.workers = o.workers;

  ns::Json echo{{"dataset", o.dataset},       {"lexicon", o.lexicon},
                {"oracle", o.oracle},         {"metric", o.metric},
                {"entity_type", o.entity_type}, {"budget", o.budget},
                {"runs", o.runs},             {"seed", o.seed}};
  if (!o.frequencies.empty()) echo["frequencies"] = o.frequencies;

  ns::ProbeReport probe = ns::run_probe(dataset, lexicon, *oracle, *metric, cfg);
  ns::RandomEvalResult random_eval;
  ns::GroupAnalysis groups;
  if (!probe.partial) {
    try {
      random_eval = ns::random_replacement_eval(
          dataset, lexicon, *oracle, *metric, o.runs, o.seed, o.entity_type);
      groups = ns::analyze_by_length(dataset, probe, *metric, o.entity_type);
    } catch (const ns::OracleError& e) {
      probe.partial = true;
      probe.error = e.what();
    }
  }

  ns::Json report = ns::build_probe_report(probe, random_eval, groups, echo);
  if (!probe.partial && !o.frequencies.empty()) {
    auto table = ns::load_frequency_table(o.frequencies);
    ns::Json rows = ns::Json::array();
    for (const auto& f : ns::analyze_by_frequency(probe, table))
      rows.push_back(ns::Json{{"name", f.name},
                              {"frequency", f.frequency},
                              {"mean_score", f.mean_score},
                              {"draws", f.draws}});
    report["frequency_groups"] = std::move(rows);
  }
  ns::write_report(report, o.out);
  if (probe.partial) {
    std::cerr << "oracle error: " << probe.error
              << " (partial report written)\n";
    return 3;
  }
  std::cout << ns::render_report(report);
  return 0;
}

int cmd_eval(const CliOptions& o) {
  require_file(o.dataset, "--dataset");
  auto dataset = ns::load_dataset(o.dataset);
  if (dataset.empty()) throw ns::DataError("dataset is empty: " + o.dataset);
  auto oracle = make_oracle(o.oracle, dataset.front().task);
  auto metric = ns::make_metric(o.metric);
  for (const auto& inst : dataset)
    if (inst.task != metric->task())
      throw ns::ConfigError("instance '" + inst.id + "' has task " +
                            ns::to_string(inst.task) + " but metric " +
                            metric->name() + " scores " +
                            ns::to_string(metric->task()));

  std::vector<ns::Prediction> preds = oracle->predict_batch(dataset);
  std::vector<std::string> ids;
  std::vector<double> scores;
  for (size_t i = 0; i < dataset.size(); ++i) {
    ids.push_back(dataset[i].id);
    scores.push_back(metric->per_instance(preds[i], dataset[i]));
  }
  double corpus = metric->corpus(preds, dataset);

  ns::Json echo{{"dataset", o.dataset},
                {"oracle", o.oracle},
                {"metric", o.metric}};
  ns::Json report = ns::build_eval_report(corpus, ids, scores, echo);
  ns::write_report(report, o.out);
  std::cout << ns::render_report(report);
  return 0;
}

int cmd_calibrate(const CliOptions& o) {
  require_file(o.dataset, "--dataset");
  auto dataset = ns::load_dataset(o.dataset);
  if (dataset.empty()) throw ns::DataError("dataset is empty: " + o.dataset);
  if (dataset.front().task != ns::Task::classify)
    throw ns::ConfigError(
        std::string(
            "temperature fitting needs label distributions; dataset task "
            "is ") +
        ns::to_string(dataset.front().task));
  auto oracle = make_oracle(o.oracle, ns::Task::classify);

  std::vector<ns::Prediction> preds = oracle->predict_batch(dataset);
  std::vector<std::vector<double>> dists;
  std::vector<int> gold;
  std::vector<std::string> ids;
  for (size_t i = 0; i < dataset.size(); ++i) {
    dists.push_back(preds[i].label_dist);
    gold.push_back(*dataset[i].gold.class_label);
    ids.push_back(dataset[i].id);
  }
  std::vector<double> grid = ns::default_temperature_grid();
  double fitted = ns::fit_temperature(dists, gold, grid, ids);

  ns::Json echo{{"dataset", o.dataset}, {"oracle", o.oracle}};
  ns::Json report = ns::build_calibrate_report(fitted, grid, echo);
  ns::write_report(report, o.out);
  std::cout << ns::render_report(report);
  return 0;
}

int cmd_trigger(const CliOptions& o) {
  require_file(o.dataset, "--dataset");
  require_file(o.lexicon, "--lexicon");
  auto dataset = ns::load_dataset(o.dataset);
  auto lexicon = ns::load_lexicon(o.lexicon);
  if (dataset.empty()) throw ns::DataError("dataset is empty: " + o.dataset);
  auto vocabulary = vocabulary_from_lexicon(lexicon, o.entity_type);
  if (vocabulary.empty())
    throw ns::ConfigError("--lexicon has no entries of type '" +
                          o.entity_type + "'");
  auto oracle = make_oracle(o.oracle, dataset.front().task);
  auto metric = ns::make_metric(o.metric);

  ns::TriggerConfig cfg;
  cfg.sample_size = o.budget;
  cfg.iterations = o.iterations;
  cfg.seed = o.seed;
  cfg.workers = o.workers;

  ns::Json echo{{"dataset", o.dataset},       {"lexicon", o.lexicon},
                {"oracle", o.oracle},         {"metric", o.metric},
                {"entity_type", o.entity_type}, {"budget", o.budget},
                {"iterations", o.iterations}, {"seed", o.seed}};

  ns::TriggerResult result = ns::run_trigger_search(
      vocabulary, dataset, *oracle, *metric, o.entity_type, cfg);
  ns::Json report = ns::build_trigger_report(result, echo);
  ns::write_report(report, o.out);

  fs::path csv_path = fs::path(o.out).replace_extension(".csv");
  std::ofstream csv(csv_path);
  if (!csv)
    throw ns::ConfigError("cannot open candidate file for writing: " +
                          csv_path.string());
  csv << ns::trigger_csv(result);
  csv.close();

  if (result.partial) {
    std::cerr << "oracle error: " << result.error
              << " (partial report written)\n";
    return 3;
  }
  std::cout << ns::render_report(report);
  return 0;
}

int cmd_defend(const CliOptions& o) {
  require_file(o.dataset, "--dataset");
  require_file(o.lexicon, "--lexicon");
  require_file(o.canonical, "--canonical");
  auto dataset = ns::load_dataset(o.dataset);
  auto lexicon = ns::load_lexicon(o.lexicon);
  if (dataset.empty()) throw ns::DataError("dataset is empty: " + o.dataset);
  ns::CanonicalSet canonical =
      ns::CanonicalSet::from_lexicon(ns::load_lexicon(o.canonical));
  if (canonical.empty())
    throw ns::ConfigError("--canonical has no entries flagged canonical: " +
                          o.canonical);
  auto oracle = make_oracle(o.oracle, dataset.front().task);
  auto metric = ns::make_metric(o.metric);

  ns::ProbeConfig pcfg;
  pcfg.budget = o.budget;
  pcfg.entity_type = o.entity_type;
  pcfg.seed = o.seed;
  pcfg.workers = o.workers;

  ns::DefendParams params;
  params.temperature = o.temperature;
  params.confidence_default = o.confidence_default;
  params.m = o.m;

  ns::Json echo{{"dataset", o.dataset},
                {"lexicon", o.lexicon},
                {"canonical", o.canonical},
                {"oracle", o.oracle},
                {"metric", o.metric},
                {"entity_type", o.entity_type},
                {"budget", o.budget},
                {"runs", o.runs},
                {"temperature", o.temperature},
                {"confidence_default", o.confidence_default},
                {"m", o.m},
                {"seed", o.seed}};

  ns::DefendReport result = ns::run_defend(dataset, lexicon, canonical,
                                           *oracle, *metric, pcfg, params,
                                           o.runs);
  ns::Json report = ns::build_defend_report(result, params, echo);
  ns::write_report(report, o.out);
  if (result.partial) {
    std::cerr << "oracle error: " << result.error
              << " (partial report written)\n";
    return 3;
  }
  std::cout << ns::render_report(report);
  return 0;
}

int cmd_report(const CliOptions& o) {
  require_file(o.report_in, "report file");
  std::ifstream in(o.report_in);
  ns::Json j;
  try {
    j = ns::Json::parse(in);
  } catch (const ns::Json::exception& e) {
    throw ns::ParseError(o.report_in + ": not valid JSON: " + e.what());
  }
  std::string text = ns::render_report(j);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(o.out);
    if (!f) throw ns::ConfigError("cannot open output file: " + o.out);
    f << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe, attack, and defend span-annotated NLP models "
               "via name substitution"};
  app.require_subcommand(1);
  CliOptions o;

  auto add_dataset = [&](CLI::App* c) {
    c->add_option("--dataset", o.dataset, "JSONL dataset path")->required();
  };
  auto add_lexicon = [&](CLI::App* c) {
    c->add_option("--lexicon", o.lexicon, "JSONL name lexicon path")
        ->required();
  };
  auto add_oracle = [&](CLI::App* c) {
    c->add_option("--oracle", o.oracle,
                  "oracle spec: table:<path> | bow:<path> | remote:<url>")
        ->required();
  };
  auto add_metric = [&](CLI::App* c) {
    c->add_option("--metric", o.metric,
                  "binary_f1 | edit_f05 | cluster_link_f1 | token_f1")
        ->required();
  };
  auto add_entity_type = [&](CLI::App* c) {
    c->add_option("--entity-type", o.entity_type,
                  "entity type whose mentions are substituted")
        ->required();
  };
  auto add_common_tail = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "rng seed (default 0)");
    c->add_option("--workers", o.workers,
                  "max concurrent oracle evaluations (default 1)");
    c->add_option("--out", o.out, "report output path")->required();
  };

  CLI::App* probe = app.add_subcommand(
      "probe", "search worst/best name substitutions within a budget");
  add_dataset(probe);
  add_lexicon(probe);
  add_oracle(probe);
  add_metric(probe);
  add_entity_type(probe);
  probe->add_option("--budget", o.budget,
                    "substitutions sampled per instance (default 50)");
  probe->add_option("--runs", o.runs,
                    "random-replacement baseline runs (default 10)");
  probe->add_option("--frequencies", o.frequencies,
                    "optional name,count CSV for frequency grouping");
  add_common_tail(probe);

  CLI::App* trigger = app.add_subcommand(
      "trigger", "search the lexicon for universally harmful names");
  add_dataset(trigger);
  add_lexicon(trigger);
  add_oracle(trigger);
  add_metric(trigger);
  add_entity_type(trigger);
  trigger->add_option("--budget", o.budget,
                      "names and instances sampled per iteration");
  trigger->add_option("--iterations", o.iterations,
                      "search iterations (default 20)");
  add_common_tail(trigger);

  CLI::App* defend = app.add_subcommand(
      "defend", "compare undefended vs replacement-ensembled scores");
  add_dataset(defend);
  add_lexicon(defend);
  add_oracle(defend);
  add_metric(defend);
  add_entity_type(defend);
  defend->add_option("--canonical", o.canonical,
                     "lexicon file of canonical replacement names")
      ->required();
  defend->add_option("--budget", o.budget,
                     "substitutions sampled per instance (default 50)");
  defend->add_option("--runs", o.runs,
                     "random-replacement baseline runs (default 10)");
  defend->add_option("--temperature", o.temperature,
                     "temperature for the original prediction (default 2)");
  defend->add_option("--confidence-default", o.confidence_default,
                     "annotator confidence when the dataset has none");
  defend->add_option("--m", o.m, "canonical replacements per instance");
  add_common_tail(defend);

  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "fit a temperature on a labeled classification set");
  add_dataset(calibrate);
  add_oracle(calibrate);
  calibrate->add_option("--out", o.out, "report output path")->required();

  CLI::App* eval = app.add_subcommand(
      "eval", "score a dataset as-is, without substitutions");
  add_dataset(eval);
  add_oracle(eval);
  add_metric(eval);
  eval->add_option("--out", o.out, "report output path")->required();

  CLI::App* report = app.add_subcommand(
      "report", "render a JSON report as readable text");
  report->add_option("file", o.report_in, "report JSON path")->required();
  report->add_option("--out", o.out, "write text here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (probe->parsed()) return cmd_probe(o);
    if (trigger->parsed()) return cmd_trigger(o);
    if (defend->parsed()) return cmd_defend(o);
    if (calibrate->parsed()) return cmd_calibrate(o);
    if (eval->parsed()) return cmd_eval(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const ns::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ns::OracleError& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    return 3;
  } catch (const ns::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 4;
  } catch (const ns::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
