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

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nameshift/corpus.hpp"
#include "nameshift/error.hpp"
#include "nameshift/metrics.hpp"
#include "nameshift/oracle.hpp"
#include "nameshift/perturb.hpp"
#include "nameshift/rng.hpp"

namespace nameshift {

struct ProbeConfig {
  int budget = 50;
  std::string entity_type;
  uint64_t seed = 0;
  int workers = 1;
  // Exhaustive mode evaluates every possible assignment instead of budget
  // draws; usable only with small lexicons.
  bool exhaustive = false;
};

// One evaluated substitution.
struct ProbeDraw {
  PerturbedInstance variant;
  Prediction prediction;
  double score = 0.0;
};

struct InstanceProbeRecord {
  std::string id;
  Prediction original_prediction;
  double original_score = 0.0;
  std::vector<ProbeDraw> draws;
  size_t worst_draw = 0;
  size_t best_draw = 0;
  bool stable = true;
};

struct ProbeReport {
  double original_score = 0.0;
  double worst_score = 0.0;
  double best_score = 0.0;
  double stability = 0.0;
  std::vector<InstanceProbeRecord> records;  // dataset order
  // Set when the oracle failed mid-run; records then cover the completed
  // instances only and `error` carries the diagnostic.
  bool partial = false;
  std::string error;
};

namespace detail {

inline void check_probe_inputs(const std::vector<AnnotatedInstance>& dataset,
                               const Metric& metric,
                               const std::string& entity_type) {
  if (dataset.empty()) throw DataError("dataset is empty");
  for (const auto& inst : dataset) {
    if (inst.task != metric.task())
      throw ConfigError("instance '" + inst.id + "' has task " +
                        to_string(inst.task) + " but metric " + metric.name() +
                        " scores " + to_string(metric.task()));
    bool has_type = false;
    for (const auto& m : inst.mentions)
      if (m.entity_type == entity_type) {
        has_type = true;
        break;
      }
    if (!has_type)
      throw ConfigError("instance '" + inst.id + "' has no mention of type '" +
                        entity_type + "'; filter the dataset first");
  }
}

// Runs fn(i) for i in [0, n) on `workers` threads. Exceptions are caught
// per index; the first one (lowest index) is reported. Indices after a
// failure may be skipped.
inline std::optional<std::pair<size_t, std::string>> parallel_for(
    size_t n, int workers, const std::function<void(size_t)>& fn) {
  workers = std::max(1, workers);
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::optional<std::pair<size_t, std::string>> first_error;
  auto body = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error || i < first_error->first)
          first_error = {i, e.what()};
        failed.store(true);
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  return first_error;
}

}  // namespace detail

// Budgeted search for the substitutions on which the oracle does worst and
// best, per instance, plus the fraction of instances whose decoded output
// never moved. Each instance draws from its own seed-derived stream, so
// results do not depend on evaluation order or worker count.
inline ProbeReport run_probe(const std::vector<AnnotatedInstance>& dataset,
                             const NameLexicon& lexicon, Oracle& oracle,
                             const Metric& metric, const ProbeConfig& config) {
  if (config.budget < 1) throw ConfigError("budget must be >= 1");
  detail::check_probe_inputs(dataset, metric, config.entity_type);

  std::vector<InstanceProbeRecord> records(dataset.size());
  std::vector<char> done(dataset.size(), 0);

  auto work = [&](size_t i) {
    const AnnotatedInstance& inst = dataset[i];
    std::vector<Assignment> assignments;
    if (config.exhaustive) {
      assignments =
          enumerate_assignments(inst, lexicon, config.entity_type);
    } else {
      Rng rng(derive_seed(config.seed, "probe:" + inst.id));
      assignments.reserve(static_cast<size_t>(config.budget));
      for (int b = 0; b < config.budget; ++b)
        assignments.push_back(
            sample_assignment(inst, lexicon, config.entity_type, rng));
    }

    std::vector<PerturbedInstance> variants;
    variants.reserve(assignments.size());
    std::vector<AnnotatedInstance> batch;
    batch.reserve(assignments.size() + 1);
    batch.push_back(inst);
    for (auto& a : assignments) {
      variants.push_back(apply_assignment(inst, a));
      batch.push_back(variants.back().instance);
    }
    std::vector<Prediction> preds = oracle.predict_batch(batch);

    InstanceProbeRecord rec;
    rec.id = inst.id;
    rec.original_prediction = preds[0];
    rec.original_score = metric.per_instance(preds[0], inst);
    double min_score = std::numeric_limits<double>::infinity();
    double max_score = -std::numeric_limits<double>::infinity();
    for (size_t d = 0; d < variants.size(); ++d) {
      ProbeDraw draw;
      draw.prediction = preds[d + 1];
      draw.score = metric.per_instance(draw.prediction,
                                       variants[d].instance);
      if (rec.stable &&
          !prediction_unchanged(inst, preds[0], draw.prediction,
                                variants[d].span_map))
        rec.stable = false;
      draw.variant = std::move(variants[d]);
      if (draw.score < min_score) {
        min_score = draw.score;
        rec.worst_draw = d;
      }
      if (draw.score > max_score) {
        max_score = draw.score;
        rec.best_draw = d;
      }
      rec.draws.push_back(std::move(draw));
    }
    records[i] = std::move(rec);
    done[i] = 1;
  };

  auto failure =
      detail::parallel_for(dataset.size(), config.workers, work);

  ProbeReport report;
  if (failure) {
    report.partial = true;
    report.error = failure->second;
  }
  std::vector<AnnotatedInstance> orig_insts, worst_insts, best_insts;
  std::vector<Prediction> orig_preds, worst_preds, best_preds;
  for (size_t i = 0; i < dataset.size(); ++i) {
    if (!done[i]) continue;
    auto& rec = records[i];
    orig_insts.push_back(dataset[i]);
    orig_preds.push_back(rec.original_prediction);
    worst_insts.push_back(rec.draws[rec.worst_draw].variant.instance);
    worst_preds.push_back(rec.draws[rec.worst_draw].prediction);
    best_insts.push_back(rec.draws[rec.best_draw].variant.instance);
    best_preds.push_back(rec.draws[rec.best_draw].prediction);
    report.records.push_back(std::move(rec));
  }
  if (!report.records.empty()) {
    report.original_score = metric.corpus(orig_preds, orig_insts);
    report.worst_score = metric.corpus(worst_preds, worst_insts);
    report.best_score = metric.corpus(best_preds, best_insts);
    size_t stable = 0;
    for (const auto& rec : report.records)
      if (rec.stable) ++stable;
    report.stability =
        static_cast<double>(stable) / static_cast<double>(report.records.size());
  }
  return report;
}

// One full-dataset rewrite with fresh draws, deterministic in (seed, run)
// and independent of instance evaluation order.
inline std::vector<AnnotatedInstance> build_random_dataset(
    const std::vector<AnnotatedInstance>& dataset, const NameLexicon& lexicon,
    const std::string& entity_type, uint64_t seed, int run) {
  std::vector<AnnotatedInstance> out;
  out.reserve(dataset.size());
  for (const auto& inst : dataset) {
    Rng rng(derive_seed(seed, "random:" + inst.id,
                        static_cast<uint64_t>(run)));
    out.push_back(
        apply_assignment(inst,
                         sample_assignment(inst, lexicon, entity_type, rng))
            .instance);
  }
  return out;
}

// k full-dataset rewrites with fresh random draws; corpus score per run.
struct RandomEvalResult {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> run_scores;
  bool degenerate_std = false;  // fewer than 2 runs
};

inline RandomEvalResult random_replacement_eval(
    const std::vector<AnnotatedInstance>& dataset, const NameLexicon& lexicon,
    Oracle& oracle, const Metric& metric, int k, uint64_t seed,
    const std::string& entity_type) {
  if (k < 1) throw ConfigError("run count must be >= 1");
  detail::check_probe_inputs(dataset, metric, entity_type);

  RandomEvalResult out;
  for (int run = 0; run < k; ++run) {
    std::vector<AnnotatedInstance> perturbed =
        build_random_dataset(dataset, lexicon, entity_type, seed, run);
    std::vector<Prediction> preds = oracle.predict_batch(perturbed);
    out.run_scores.push_back(metric.corpus(preds, perturbed));
  }
  double sum = 0.0;
  for (double s : out.run_scores) sum += s;
  out.mean = sum / k;
  if (k < 2) {
    out.degenerate_std = true;
  } else {
    double ss = 0.0;
    for (double s : out.run_scores) ss += (s - out.mean) * (s - out.mean);
    out.stddev = std::sqrt(ss / (k - 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grouped analyses over probe records.

struct GroupScore {
  std::string group;    // "1", "2", "3+"
  std::string variant;  // "original", "worst", "best"
  double score = 0.0;
  size_t count = 0;
};

struct GroupAnalysis {
  std::vector<GroupScore> rows;
  std::vector<std::string> notes;  // omitted empty buckets
};

namespace detail {

inline std::string length_bucket(int len) {
  if (len <= 1) return "1";
  if (len == 2) return "2";
  return "3+";
}

inline int max_mention_length(const AnnotatedInstance& inst,
                              const std::string& entity_type) {
  int len = 1;
  for (const auto& m : inst.mentions) {
    if (m.entity_type != entity_type) continue;
    for (const auto& ms : m.spans) len = std::max(len, ms.span.length());
  }
  return len;
}

inline int max_replacement_length(const Assignment& a) {
  int len = 1;
  for (const auto& [id, pieces] : a.names)
    for (const auto& [part, piece] : pieces)
      len = std::max(len, static_cast<int>(piece.surface.size()));
  return len;
}

}  // namespace detail

// Splits scores by the longest probed surface: the original mention text
// for the original variant, the longest assigned replacement for the
// worst/best variants.
inline GroupAnalysis analyze_by_length(
    const std::vector<AnnotatedInstance>& dataset, const ProbeReport& report,
    const Metric& metric, const std::string& entity_type) {
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < dataset.size(); ++i) index[dataset[i].id] = i;

  GroupAnalysis out;
  const std::vector<std::string> buckets{"1", "2", "3+"};
  const std::vector<std::string> variants{"original", "worst", "best"};
  for (const auto& bucket : buckets) {
    for (const auto& variant : variants) {
      std::vector<AnnotatedInstance> insts;
      std::vector<Prediction> preds;
      for (const auto& rec : report.records) {
        const AnnotatedInstance& orig = dataset[index.at(rec.id)];
        std::string key;
        if (variant == "original") {
          key = detail::length_bucket(
              detail::max_mention_length(orig, entity_type));
          if (key != bucket) continue;
          insts.push_back(orig);
          preds.push_back(rec.original_prediction);
        } else {
          const ProbeDraw& draw = variant == "worst"
                                      ? rec.draws[rec.worst_draw]
                                      : rec.draws[rec.best_draw];
          key = detail::length_bucket(
              detail::max_replacement_length(draw.variant.assignment));
          if (key != bucket) continue;
          insts.push_back(draw.variant.instance);
          preds.push_back(draw.prediction);
        }
      }
      if (insts.empty()) {
        out.notes.push_back("bucket " + bucket + "/" + variant +
                            " is empty; omitted");
        continue;
      }
      out.rows.push_back(
          {bucket, variant, metric.corpus(preds, insts), insts.size()});
    }
  }
  return out;
}

struct FrequencyScore {
  std::string name;
  double frequency = 0.0;
  double mean_score = 0.0;
  size_t draws = 0;
};

// Two-column CSV "name,count". Multi-token names use their space-joined
// surface.
inline std::map<std::string, double> load_frequency_table(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open frequency table: " + path);
  std::map<std::string, double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected name,count");
    try {
      out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": count is not a number");
    }
  }
  return out;
}

// Mean per-draw score of every replacement surface that occurred in the
// probe, tagged with its corpus frequency (0 when the table lacks it).
inline std::vector<FrequencyScore> analyze_by_frequency(
    const ProbeReport& report,
    const std::map<std::string, double>& frequency_table) {
  std::map<std::string, std::pair<double, size_t>> sums;
  for (const auto& rec : report.records)
    for (const auto& draw : rec.draws)
      for (const auto& [id, pieces] : draw.variant.assignment.names) {
        std::set<std::string> surfaces;  // count a draw once per surface
        for (const auto& [part, piece] : pieces)
          for (const auto& src : piece.sources)
            surfaces.insert(src.surface_string());
        for (const auto& s : surfaces) {
          sums[s].first += draw.score;
          sums[s].second += 1;
        }
      }
  std::vector<FrequencyScore> out;
  for (const auto& [name, acc] : sums) {
    FrequencyScore f;
    f.name = name;
    auto it = frequency_table.find(name);
    f.frequency = it == frequency_table.end() ? 0.0 : it->second;
    f.mean_score = acc.first / static_cast<double>(acc.second);
    f.draws = acc.second;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace nameshift
