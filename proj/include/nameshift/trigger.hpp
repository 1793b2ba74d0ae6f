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
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nameshift/corpus.hpp"
#include "nameshift/error.hpp"
#include "nameshift/metrics.hpp"
#include "nameshift/oracle.hpp"
#include "nameshift/perturb.hpp"
#include "nameshift/probe.hpp"
#include "nameshift/rng.hpp"

namespace nameshift {

// Beta posterior over "this name hurts the score", one per candidate.
struct NameParams {
  double alpha = 1.0;
  double beta = 1.0;
  size_t times_sampled = 0;

  double posterior_mean() const { return alpha / (alpha + beta); }
};

struct TriggerState {
  std::vector<TokenSeq> vocabulary;
  std::vector<NameParams> params;
  std::vector<double> weights;  // normalized posterior means
  int iteration = 0;
};

struct TriggerConfig {
  int sample_size = 10;  // names and instances drawn per iteration
  int iterations = 20;
  double alpha0 = 1.0;
  double beta0 = 1.0;
  uint64_t seed = 0;
  int workers = 1;
};

inline double weight_of(const TriggerState& state, size_t name_index) {
  return state.params.at(name_index).posterior_mean();
}

inline void renormalize_weights(TriggerState& state) {
  state.weights.resize(state.params.size());
  double sum = 0.0;
  for (const auto& p : state.params) sum += p.posterior_mean();
  for (size_t i = 0; i < state.params.size(); ++i)
    state.weights[i] = state.params[i].posterior_mean() / sum;
}

inline TriggerState init_trigger_state(std::vector<TokenSeq> vocabulary,
                                       double alpha0, double beta0) {
  if (vocabulary.empty()) throw ConfigError("trigger vocabulary is empty");
  if (!(alpha0 > 0.0) || !(beta0 > 0.0))
    throw ConfigError("prior parameters must be positive");
  TriggerState s;
  s.vocabulary = std::move(vocabulary);
  s.params.assign(s.vocabulary.size(), NameParams{alpha0, beta0, 0});
  renormalize_weights(s);
  return s;
}

// Evidence from one batch: the share of instances the name made strictly
// worse versus strictly better. Negative net evidence is clamped to zero,
// feeding entirely into beta, which keeps both parameters positive.
inline void update_name_params(TriggerState& state, size_t name_index,
                               double frac_worse, double frac_better,
                               int batch) {
  if (frac_worse < 0 || frac_worse > 1 || frac_better < 0 || frac_better > 1)
    throw DataError("fractions must lie in [0,1]");
  double delta = std::max(0.0, frac_worse - frac_better);
  auto& p = state.params.at(name_index);
  p.alpha += delta * batch;
  p.beta += (1.0 - delta) * batch;
}

// Replaces every covered part of every target-type name with the candidate
// surface, verbatim. Universality is the point, so gender and part
// compatibility are deliberately ignored.
inline Assignment forced_assignment(const AnnotatedInstance& inst,
                                    const std::string& entity_type,
                                    const TokenSeq& surface) {
  Assignment out;
  for (const auto& m : inst.mentions) {
    if (m.entity_type != entity_type) continue;
    auto& pieces = out.names[m.name_id];
    for (const auto& ms : m.spans) {
      if (pieces.count(ms.part)) continue;
      LexiconEntry src;
      src.surface = surface;
      src.entity_type = entity_type;
      src.gender = Gender::any;
      src.part = ms.part;
      pieces[ms.part] = {surface, {src}};
    }
  }
  return out;
}

struct TriggerResult {
  TriggerState state;
  std::vector<size_t> ranking;  // vocabulary indices, strongest first
  bool partial = false;
  std::string error;
};

// Posterior-guided search for names that hurt the oracle across instances.
// Per iteration: draw names by weight and instances uniformly (both without
// replacement), score each name's forced substitution against the same
// originals, then fold the evidence into the posteriors in vocabulary
// order and renormalize the weights once.
inline TriggerResult run_trigger_search(
    const std::vector<TokenSeq>& vocabulary,
    const std::vector<AnnotatedInstance>& dataset, Oracle& oracle,
    const Metric& metric, const std::string& entity_type,
    const TriggerConfig& config) {
  if (config.sample_size < 1) throw ConfigError("sample size must be >= 1");
  if (config.iterations < 1) throw ConfigError("iterations must be >= 1");
  detail::check_probe_inputs(dataset, metric, entity_type);

  TriggerResult result;
  result.state =
      init_trigger_state(vocabulary, config.alpha0, config.beta0);
  TriggerState& state = result.state;

  size_t names_per_iter =
      std::min(static_cast<size_t>(config.sample_size), vocabulary.size());
  size_t insts_per_iter =
      std::min(static_cast<size_t>(config.sample_size), dataset.size());

  for (int it = 0; it < config.iterations && !result.partial; ++it) {
    state.iteration = it;
    Rng rng(derive_seed(config.seed, "trigger:iteration",
                        static_cast<uint64_t>(it)));
    std::vector<size_t> names =
        rng.weighted_sample_without_replacement(state.weights, names_per_iter);
    std::vector<size_t> insts =
        rng.sample_without_replacement(dataset.size(), insts_per_iter);

    std::vector<AnnotatedInstance> sampled;
    sampled.reserve(insts.size());
    for (size_t i : insts) sampled.push_back(dataset[i]);

    struct NameOutcome {
      double frac_worse = 0.0;
      double frac_better = 0.0;
    };
    std::vector<NameOutcome> outcomes(names.size());
    std::vector<double> original_scores(sampled.size());

    std::optional<std::pair<size_t, std::string>> failure;
    try {
      std::vector<Prediction> preds = oracle.predict_batch(sampled);
      for (size_t i = 0; i < sampled.size(); ++i)
        original_scores[i] = metric.per_instance(preds[i], sampled[i]);
    } catch (const std::exception& e) {
      failure = {size_t{0}, e.what()};
    }

    if (!failure)
      failure = detail::parallel_for(
          names.size(), config.workers, [&](size_t slot) {
            size_t name = names[slot];
            std::vector<AnnotatedInstance> batch;
            batch.reserve(sampled.size());
            for (const auto& inst : sampled)
              batch.push_back(
                  apply_assignment(inst,
                                   forced_assignment(inst, entity_type,
                                                     state.vocabulary[name]))
                      .instance);
            std::vector<Prediction> preds = oracle.predict_batch(batch);
            size_t worse = 0, better = 0;
            for (size_t i = 0; i < batch.size(); ++i) {
              double s = metric.per_instance(preds[i], batch[i]);
              if (s < original_scores[i]) ++worse;
              if (s > original_scores[i]) ++better;
            }
            outcomes[slot].frac_worse =
                static_cast<double>(worse) / static_cast<double>(batch.size());
            outcomes[slot].frac_better =
                static_cast<double>(better) /
                static_cast<double>(batch.size());
          });
    if (failure) {
      result.partial = true;
      result.error = failure->second;
      break;
    }

    // Evidence lands in vocabulary order, independent of draw order.
    std::vector<size_t> order(names.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return names[a] < names[b];
    });
    for (size_t k : order) {
      update_name_params(state, names[k], outcomes[k].frac_worse,
                         outcomes[k].frac_better,
                         static_cast<int>(insts_per_iter));
      state.params[names[k]].times_sampled += 1;
    }
    renormalize_weights(state);
  }

  result.ranking.resize(state.vocabulary.size());
  std::iota(result.ranking.begin(), result.ranking.end(), size_t{0});
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [&](size_t a, size_t b) {
                     return state.params[a].posterior_mean() >
                            state.params[b].posterior_mean();
                   });
  return result;
}

inline std::string trigger_csv(const TriggerResult& result) {
  std::ostringstream os;
  os << "name,alpha,beta,posterior_mean,times_sampled\n";
  os << std::setprecision(12);
  for (size_t i : result.ranking) {
    const auto& p = result.state.params[i];
    std::string name;
    for (const auto& tok : result.state.vocabulary[i]) {
      if (!name.empty()) name += ' ';
      name += tok;
    }
    os << name << ',' << p.alpha << ',' << p.beta << ',' << p.posterior_mean()
       << ',' << p.times_sampled << '\n';
  }
  return os.str();
}

}  // namespace nameshift
