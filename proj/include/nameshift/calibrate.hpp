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

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nameshift/error.hpp"
#include "nameshift/prediction.hpp"

namespace nameshift {

inline void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw ConfigError("temperature must be a positive finite number, got " +
                      std::to_string(t));
}

// Sharpens (T < 1) or flattens (T > 1) a distribution by raising each entry
// to 1/T and renormalizing. Computed in log space; entries are floored at
// 1e-300 first so the exponentiation cannot zero out the whole vector.
inline std::vector<double> temperature_scale(const std::vector<double>& dist,
                                             double t) {
  check_temperature(t);
  if (dist.empty()) throw DataError("temperature scaling of an empty vector");
  std::vector<double> out(dist.size());
  double lmax = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < dist.size(); ++i) {
    out[i] = std::log(std::max(dist[i], 1e-300)) / t;
    lmax = std::max(lmax, out[i]);
  }
  double sum = 0.0;
  for (double& x : out) {
    x = std::exp(x - lmax);
    sum += x;
  }
  for (double& x : out) x /= sum;
  return out;
}

// Applies the same temperature to every distribution a prediction carries.
// Link probabilities scale as two-point distributions; an answer span has
// no distribution to scale beyond its confidence.
inline Prediction temperature_scale(const Prediction& p, double t) {
  Prediction out = p;
  switch (p.task) {
    case Task::classify:
      out.label_dist = temperature_scale(p.label_dist, t);
      break;
    case Task::seq_edit:
      for (auto& dist : out.token_dists) dist = temperature_scale(dist, t);
      break;
    case Task::coref:
      for (auto& [pair, prob] : out.link_probs)
        prob = temperature_scale(std::vector<double>{prob, 1.0 - prob}, t)[0];
      break;
    case Task::qa:
      out.answer_confidence = temperature_scale(
          std::vector<double>{p.answer_confidence, 1.0 - p.answer_confidence},
          t)[0];
      break;
  }
  decode(out);
  return out;
}

inline std::vector<double> default_temperature_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 32; ++i) grid.push_back(0.25 * i);
  return grid;
}

// Picks the grid temperature minimizing mean negative log-likelihood of the
// gold labels under the scaled distributions. Ties take the smallest T.
inline double fit_temperature(
    const std::vector<std::vector<double>>& dists,
    const std::vector<int>& gold_labels,
    const std::vector<double>& grid = default_temperature_grid(),
    const std::vector<std::string>& ids = {}) {
  if (grid.empty()) throw ConfigError("temperature grid is empty");
  for (double t : grid) check_temperature(t);
  if (dists.size() != gold_labels.size())
    throw DataError("predictions and gold labels differ in count");
  if (dists.empty()) throw DataError("temperature fitting needs data");

  auto name_of = [&](size_t i) {
    return i < ids.size() ? ids[i] : std::to_string(i);
  };
  for (size_t i = 0; i < dists.size(); ++i)
    if (gold_labels[i] < 0 ||
        gold_labels[i] >= static_cast<int>(dists[i].size()))
      throw DataError("gold label of instance " + name_of(i) +
                      " is outside the predicted distribution");

  double best_t = 0.0;
  double best_nll = std::numeric_limits<double>::infinity();
  std::vector<bool> ever_finite(dists.size(), false);
  for (double t : grid) {
    double nll = 0.0;
    for (size_t i = 0; i < dists.size(); ++i) {
      double p = temperature_scale(
          dists[i], t)[static_cast<size_t>(gold_labels[i])];
      if (p > 0.0) ever_finite[i] = true;
      nll += -std::log(p);
    }
    nll /= static_cast<double>(dists.size());
    if (nll < best_nll) {
      best_nll = nll;
      best_t = t;
    }
  }
  if (!std::isfinite(best_nll)) {
    for (size_t i = 0; i < dists.size(); ++i)
      if (!ever_finite[i])
        throw DataError("instance " + name_of(i) +
                        " gives its gold label probability 0 at every grid "
                        "temperature");
  }
  return best_t;
}

}  // namespace nameshift
