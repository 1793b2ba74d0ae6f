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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nameshift/calibrate.hpp"
#include "nameshift/corpus.hpp"
#include "nameshift/error.hpp"
#include "nameshift/metrics.hpp"
#include "nameshift/oracle.hpp"
#include "nameshift/perturb.hpp"
#include "nameshift/probe.hpp"

namespace nameshift {

// Ordered lists of trusted replacement names, grouped by type and gender.
// Built from lexicon entries flagged `canonical: true`, keeping file order.
class CanonicalSet {
 public:
  CanonicalSet() = default;

  static CanonicalSet from_lexicon(const NameLexicon& lexicon) {
    CanonicalSet cs;
    for (const auto& e : lexicon.entries())
      if (e.canonical) cs.entries_.push_back(e);
    return cs;
  }

  bool empty() const { return entries_.empty(); }
  const std::vector<LexiconEntry>& entries() const { return entries_; }

  // The first `m` canonical entries usable for a mention of (type, gender).
  // A gendered mention accepts its own gender plus `any`. A genderless
  // mention prefers explicitly genderless entries; when those run short the
  // list is completed by convention with one male name followed by female
  // names.
  std::vector<LexiconEntry> resolve(const std::string& entity_type,
                                    Gender gender, size_t m) const {
    if (m < 1) throw ConfigError("canonical list size must be >= 1");
    std::vector<LexiconEntry> pool;
    if (gender == Gender::male || gender == Gender::female) {
      for (const auto& e : entries_)
        if (e.entity_type == entity_type &&
            (e.gender == gender || e.gender == Gender::any))
          pool.push_back(e);
    } else {
      for (const auto& e : entries_)
        if (e.entity_type == entity_type && e.gender == Gender::any)
          pool.push_back(e);
      if (pool.size() < m) {
        pool.clear();
        std::vector<LexiconEntry> male, female;
        for (const auto& e : entries_) {
          if (e.entity_type != entity_type) continue;
          if (e.gender == Gender::male) male.push_back(e);
          if (e.gender == Gender::female) female.push_back(e);
        }
        if (!male.empty()) pool.push_back(male.front());
        for (const auto& e : female) {
          if (pool.size() >= m) break;
          pool.push_back(e);
        }
      }
    }
    if (pool.size() < m)
      throw ConfigError("canonical set has " + std::to_string(pool.size()) +
                        " entries for type '" + entity_type + "', gender " +
                        to_string(gender) + ", need " + std::to_string(m));
    pool.resize(m);
    return pool;
  }

 private:
  std::vector<LexiconEntry> entries_;
};

// Confidence-weighted mix of the temperature-scaled original with the
// geometric mean of the original and the M replacement distributions;
// replacement terms enter unscaled. Computed in log space with a 1e-300
// floor, then normalized.
inline std::vector<double> ensemble_distributions(
    const std::vector<double>& p_orig,
    const std::vector<std::vector<double>>& replacement_dists,
    double confidence, double temperature) {
  if (confidence < 0.0 || confidence > 1.0)
    throw ConfigError("confidence must lie in [0,1]");
  for (const auto& d : replacement_dists)
    if (d.size() != p_orig.size())
      throw DataError("replacement distribution width differs from original");

  std::vector<double> scaled = temperature_scale(p_orig, temperature);
  const double m = static_cast<double>(replacement_dists.size());
  std::vector<double> u(p_orig.size());
  double sum = 0.0;
  for (size_t y = 0; y < p_orig.size(); ++y) {
    double log_geo = std::log(std::max(scaled[y], 1e-300));
    for (const auto& d : replacement_dists)
      log_geo += std::log(std::max(d[y], 1e-300));
    log_geo /= m + 1.0;
    u[y] = (1.0 - confidence) * scaled[y] + confidence * std::exp(log_geo);
    sum += u[y];
  }
  if (sum <= 0.0) throw DataError("ensembled distribution has zero mass");
  for (double& x : u) x /= sum;
  return u;
}

// Per-position pairing of the original sequence prediction with the
// replacement predictions. Positions inside any replaced range (or
// unalignable in any variant) carry an empty replacement list.
struct AlignedPosition {
  std::vector<double> original;
  std::vector<std::vector<double>> replacements;  // empty when not alignable
};

namespace detail {

inline std::vector<int> flat_offsets(const AnnotatedInstance& inst,
                                     const SpanMap* map) {
  std::vector<int> off{0};
  for (size_t seg = 0; seg < inst.segments.size(); ++seg) {
    int len = inst.segment_length(static_cast<int>(seg));
    if (map)
      for (const auto& rp : map->replaced(static_cast<int>(seg)))
        len += (rp.new_end - rp.new_start) - (rp.orig_end - rp.orig_start);
    off.push_back(off.back() + len);
  }
  return off;
}

}  // namespace detail

inline std::vector<AlignedPosition> align_sequence_predictions(
    const AnnotatedInstance& original_inst, const Prediction& original,
    const std::vector<Prediction>& replacements,
    const std::vector<SpanMap>& span_maps) {
  if (replacements.size() != span_maps.size())
    throw DataError("replacement predictions and span maps differ in count");
  std::vector<int> orig_off = detail::flat_offsets(original_inst, nullptr);
  std::vector<std::vector<int>> repl_off;
  repl_off.reserve(span_maps.size());
  for (const auto& map : span_maps)
    repl_off.push_back(detail::flat_offsets(original_inst, &map));

  std::vector<AlignedPosition> out;
  for (size_t seg = 0; seg < original_inst.segments.size(); ++seg) {
    int len = original_inst.segment_length(static_cast<int>(seg));
    for (int pos = 0; pos < len; ++pos) {
      AlignedPosition ap;
      ap.original =
          original.token_dists.at(static_cast<size_t>(orig_off[seg] + pos));
      bool alignable = true;
      std::vector<std::vector<double>> mapped;
      for (size_t v = 0; v < replacements.size(); ++v) {
        bool inside = false;
        for (const auto& rp : span_maps[v].replaced(static_cast<int>(seg)))
          if (pos >= rp.orig_start && pos < rp.orig_end) {
            inside = true;
            break;
          }
        if (inside) {
          alignable = false;
          break;
        }
        auto b = span_maps[v].forward_boundary(static_cast<int>(seg), pos);
        mapped.push_back(replacements[v].token_dists.at(
            static_cast<size_t>(repl_off[v][seg] + *b)));
      }
      if (alignable) ap.replacements = std::move(mapped);
      out.push_back(std::move(ap));
    }
  }
  return out;
}

namespace detail {

// Rewrites a sequence prediction onto a shared alphabet.
inline Prediction remap_alphabet(const Prediction& p,
                                 const std::vector<std::string>& alphabet) {
  Prediction out = p;
  out.alphabet = alphabet;
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < alphabet.size(); ++i) index[alphabet[i]] = i;
  out.token_dists.clear();
  for (const auto& dist : p.token_dists) {
    std::vector<double> row(alphabet.size(), 0.0);
    for (size_t i = 0; i < dist.size(); ++i) row[index.at(p.alphabet[i])] += dist[i];
    out.token_dists.push_back(std::move(row));
  }
  return out;
}

inline std::vector<std::string> union_alphabet(
    const Prediction& original, const std::vector<Prediction>& others) {
  std::vector<std::string> alphabet = original.alphabet;
  std::set<std::string> seen(alphabet.begin(), alphabet.end());
  for (const auto& p : others)
    for (const auto& sym : p.alphabet)
      if (seen.insert(sym).second) alphabet.push_back(sym);
  return alphabet;
}

}  // namespace detail

struct DefendParams {
  double temperature = 2.0;
  double confidence_default = 0.9;
  int m = 3;  // canonical replacements per instance
};

// Replaces the instance's target names with each canonical entry in turn,
// queries the oracle on the original plus the M rewrites, and fuses the
// answers. The fused prediction lives in the instance's own coordinates.
inline Prediction defend_instance(const AnnotatedInstance& inst,
                                  Oracle& oracle,
                                  const CanonicalSet& canonical,
                                  const std::string& entity_type,
                                  const DefendParams& params) {
  if (inst.task == Task::qa)
    throw ConfigError(
        "the defense supports classify, seq_edit, and coref instances");
  check_temperature(params.temperature);
  double confidence =
      inst.annotator_confidence.value_or(params.confidence_default);
  if (confidence < 0.0 || confidence > 1.0)
    throw ConfigError("confidence must lie in [0,1]");

  // Per-name canonical lists, resolved once; variant m substitutes entry m.
  size_t m_count = static_cast<size_t>(params.m);
  std::map<std::string, std::vector<LexiconEntry>> lists;
  std::map<std::string, std::set<NamePart>> parts;
  for (const auto& mention : inst.mentions) {
    if (mention.entity_type != entity_type) continue;
    if (!lists.count(mention.name_id))
      lists[mention.name_id] =
          canonical.resolve(entity_type, mention.gender, m_count);
    for (const auto& ms : mention.spans)
      parts[mention.name_id].insert(ms.part);
  }

  std::vector<PerturbedInstance> variants;
  std::vector<AnnotatedInstance> batch;
  batch.push_back(inst);
  for (size_t v = 0; v < m_count; ++v) {
    Assignment a;
    for (const auto& [name_id, list] : lists) {
      const TokenSeq& surface = list[v].surface;
      auto& pieces = a.names[name_id];
      for (NamePart part : parts[name_id]) {
        TokenSeq text;
        switch (part) {
          case NamePart::first:
            text = {surface.front()};
            break;
          case NamePart::last:
            text = {surface.back()};
            break;
          case NamePart::full:
            text = surface;
            break;
        }
        LexiconEntry src = list[v];
        src.part = part;
        pieces[part] = {std::move(text), {std::move(src)}};
      }
    }
    variants.push_back(apply_assignment(inst, a));
    batch.push_back(variants.back().instance);
  }

  std::vector<Prediction> preds = oracle.predict_batch(batch);
  Prediction original = preds[0];
  std::vector<Prediction> replacements(preds.begin() + 1, preds.end());

  Prediction out;
  out.task = inst.task;
  switch (inst.task) {
    case Task::classify: {
      std::vector<std::vector<double>> dists;
      for (const auto& p : replacements) dists.push_back(p.label_dist);
      out.label_dist = ensemble_distributions(original.label_dist, dists,
                                              confidence, params.temperature);
      break;
    }
    case Task::seq_edit: {
      auto alphabet = detail::union_alphabet(original, replacements);
      Prediction orig_mapped = detail::remap_alphabet(original, alphabet);
      std::vector<Prediction> repl_mapped;
      for (const auto& p : replacements)
        repl_mapped.push_back(detail::remap_alphabet(p, alphabet));
      std::vector<SpanMap> maps;
      for (const auto& v : variants) maps.push_back(v.span_map);
      auto aligned = align_sequence_predictions(inst, orig_mapped,
                                                repl_mapped, maps);
      out.alphabet = alphabet;
      for (const auto& ap : aligned) {
        if (ap.replacements.empty())
          out.token_dists.push_back(ap.original);  // in-span: untouched
        else
          out.token_dists.push_back(
              ensemble_distributions(ap.original, ap.replacements, confidence,
                                     params.temperature));
      }
      break;
    }
    case Task::coref: {
      // Pair universe in original coordinates: the original prediction's
      // pairs plus every variant pair that maps back. Mention ranges map
      // exactly, so identity is preserved across rewrites.
      std::set<std::pair<Span, Span>> universe;
      for (const auto& [pair, p] : original.link_probs) universe.insert(pair);
      for (size_t v = 0; v < replacements.size(); ++v)
        for (const auto& [pair, p] : replacements[v].link_probs) {
          auto a = variants[v].span_map.backward_span(pair.first);
          auto b = variants[v].span_map.backward_span(pair.second);
          if (a && b && !(*a == *b)) universe.insert(ordered_pair(*a, *b));
        }
      for (const auto& pair : universe) {
        auto lookup = [](const Prediction& p,
                         const std::pair<Span, Span>& key) {
          auto it = p.link_probs.find(key);
          return it == p.link_probs.end() ? 0.0 : it->second;
        };
        double p0 = lookup(original, pair);
        std::vector<std::vector<double>> dists;
        for (size_t v = 0; v < replacements.size(); ++v) {
          auto a = variants[v].span_map.forward_span(pair.first);
          auto b = variants[v].span_map.forward_span(pair.second);
          double pv = (a && b)
                          ? lookup(replacements[v], ordered_pair(*a, *b))
                          : 0.0;
          dists.push_back({pv, 1.0 - pv});
        }
        out.link_probs[pair] = ensemble_distributions(
            {p0, 1.0 - p0}, dists, confidence, params.temperature)[0];
      }
      break;
    }
    case Task::qa:
      break;  // rejected above
  }
  validate_prediction(out);
  decode(out);
  return out;
}

// ---------------------------------------------------------------------------
// Full defense evaluation: probe the oracle undefended, then score the
// fused predictions on the same original / worst / best / random datasets.

struct ArmScores {
  double original = 0.0;
  double worst = 0.0;
  double best = 0.0;
  double random_mean = 0.0;
  double random_std = 0.0;
  std::vector<double> random_runs;
};

struct DefendReport {
  ProbeReport probe;  // undefended search
  ArmScores undefended;
  ArmScores defended;
  bool partial = false;
  std::string error;
};

inline DefendReport run_defend(const std::vector<AnnotatedInstance>& dataset,
                               const NameLexicon& lexicon,
                               const CanonicalSet& canonical, Oracle& oracle,
                               const Metric& metric,
                               const ProbeConfig& probe_config,
                               const DefendParams& params, int random_runs) {
  DefendReport report;
  report.probe = run_probe(dataset, lexicon, oracle, metric, probe_config);
  if (report.probe.partial) {
    report.partial = true;
    report.error = report.probe.error;
    return report;
  }
  report.undefended.original = report.probe.original_score;
  report.undefended.worst = report.probe.worst_score;
  report.undefended.best = report.probe.best_score;

  auto defended_corpus =
      [&](const std::vector<AnnotatedInstance>& insts) -> double {
    std::vector<Prediction> preds(insts.size());
    auto failure = detail::parallel_for(
        insts.size(), probe_config.workers, [&](size_t i) {
          preds[i] = defend_instance(insts[i], oracle, canonical,
                                     probe_config.entity_type, params);
        });
    if (failure) throw OracleError(failure->second);
    return metric.corpus(preds, insts);
  };

  std::vector<AnnotatedInstance> worst_insts, best_insts;
  for (const auto& rec : report.probe.records) {
    worst_insts.push_back(rec.draws[rec.worst_draw].variant.instance);
    best_insts.push_back(rec.draws[rec.best_draw].variant.instance);
  }

  try {
    report.defended.original = defended_corpus(dataset);
    report.defended.worst = defended_corpus(worst_insts);
    report.defended.best = defended_corpus(best_insts);

    for (int run = 0; run < random_runs; ++run) {
      auto rand_insts = build_random_dataset(
          dataset, lexicon, probe_config.entity_type, probe_config.seed, run);
      std::vector<Prediction> preds = oracle.predict_batch(rand_insts);
      report.undefended.random_runs.push_back(
          metric.corpus(preds, rand_insts));
      report.defended.random_runs.push_back(defended_corpus(rand_insts));
    }
  } catch (const std::exception& e) {
    report.partial = true;
    report.error = e.what();
    return report;
  }

  auto summarize = [](ArmScores& arm) {
    if (arm.random_runs.empty()) return;
    double sum = 0.0;
    for (double s : arm.random_runs) sum += s;
    arm.random_mean = sum / static_cast<double>(arm.random_runs.size());
    if (arm.random_runs.size() >= 2) {
      double ss = 0.0;
      for (double s : arm.random_runs)
        ss += (s - arm.random_mean) * (s - arm.random_mean);
      arm.random_std =
          std::sqrt(ss / static_cast<double>(arm.random_runs.size() - 1));
    }
  };
  summarize(report.undefended);
  summarize(report.defended);
  return report;
}

}  // namespace nameshift
