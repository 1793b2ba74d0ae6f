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
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "nameshift/corpus.hpp"
#include "nameshift/error.hpp"

namespace nameshift {

// Edit-tagging symbols used by sequence predictions. A position tagged
// kKeepSymbol keeps its source token; kDeleteSymbol drops it; any other
// symbol substitutes itself for the source token.
inline constexpr const char* kKeepSymbol = "<keep>";
inline constexpr const char* kDeleteSymbol = "<del>";

inline int argmax_index(const std::vector<double>& v) {
  if (v.empty()) return -1;
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::pair<Span, Span> ordered_pair(Span a, Span b) {
  if (b < a) std::swap(a, b);
  return {a, b};
}

// Output of one oracle call. Exactly the fields of the task variant are
// populated; the decoded_* members are derived from the distributions and
// kept consistent by decode().
struct Prediction {
  Task task = Task::classify;

  // classify
  std::vector<double> label_dist;
  int decoded_label = -1;

  // seq_edit: one distribution over `alphabet` per source token position,
  // segments concatenated in order.
  std::vector<std::string> alphabet;
  std::vector<std::vector<double>> token_dists;
  std::vector<std::string> decoded_symbols;

  // coref: link probabilities over ordered span pairs (first < second).
  std::map<std::pair<Span, Span>, double> link_probs;
  std::vector<std::vector<Span>> decoded_clusters;

  // qa
  Span answer_span;
  double answer_confidence = 0.0;

  bool operator==(const Prediction&) const = default;
};

// Greedy transitive closure of links with probability > 0.5; clusters of
// size 1 are dropped. Cluster and span order is canonical so decoded
// outputs compare with ==.
inline std::vector<std::vector<Span>> decode_clusters(
    const std::map<std::pair<Span, Span>, double>& link_probs) {
  std::vector<Span> spans;
  for (const auto& [pair, p] : link_probs) {
    spans.push_back(pair.first);
    spans.push_back(pair.second);
  }
  std::sort(spans.begin(), spans.end());
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
  std::vector<size_t> parent(spans.size());
  std::iota(parent.begin(), parent.end(), size_t{0});
  auto find = [&](size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto index_of = [&](const Span& s) {
    return static_cast<size_t>(
        std::lower_bound(spans.begin(), spans.end(), s) - spans.begin());
  };
  for (const auto& [pair, p] : link_probs) {
    if (p <= 0.5) continue;
    size_t a = find(index_of(pair.first));
    size_t b = find(index_of(pair.second));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<size_t, std::vector<Span>> groups;
  for (size_t i = 0; i < spans.size(); ++i)
    groups[find(i)].push_back(spans[i]);
  std::vector<std::vector<Span>> out;
  for (auto& [root, members] : groups)
    if (members.size() >= 2) out.push_back(std::move(members));
  return out;  // sorted by smallest member because keys are sorted roots
}

// Recomputes every decoded_* field from the distributions. Argmax ties go
// to the lowest index so decoding is deterministic.
inline void decode(Prediction& p) {
  switch (p.task) {
    case Task::classify:
      p.decoded_label = argmax_index(p.label_dist);
      break;
    case Task::seq_edit:
      p.decoded_symbols.clear();
      p.decoded_symbols.reserve(p.token_dists.size());
      for (const auto& dist : p.token_dists)
        p.decoded_symbols.push_back(
            p.alphabet[static_cast<size_t>(argmax_index(dist))]);
      break;
    case Task::coref:
      p.decoded_clusters = decode_clusters(p.link_probs);
      break;
    case Task::qa:
      break;  // the span itself is the decoding
  }
}

namespace detail {

inline void check_dist(const std::vector<double>& v, const std::string& what) {
  if (v.empty()) throw DataError(what + " is empty");
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0 && x <= 1.0))
      throw DataError(what + " has entry outside [0,1]");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError(what + " sums to " + std::to_string(sum) + ", not 1");
}

}  // namespace detail

inline void validate_prediction(const Prediction& p) {
  switch (p.task) {
    case Task::classify:
      detail::check_dist(p.label_dist, "label distribution");
      break;
    case Task::seq_edit:
      if (p.alphabet.empty()) throw DataError("empty edit alphabet");
      for (const auto& dist : p.token_dists) {
        if (dist.size() != p.alphabet.size())
          throw DataError("token distribution width does not match alphabet");
        detail::check_dist(dist, "token distribution");
      }
      break;
    case Task::coref:
      for (const auto& [pair, prob] : p.link_probs) {
        if (!(prob >= 0.0 && prob <= 1.0))
          throw DataError("link probability outside [0,1]");
        if (pair.second < pair.first)
          throw DataError("link pair not in canonical order");
      }
      break;
    case Task::qa:
      if (!(p.answer_confidence >= 0.0 && p.answer_confidence <= 1.0))
        throw DataError("answer confidence outside [0,1]");
      break;
  }
}

// ---------------------------------------------------------------------------
// Wire format, shared by the remote protocol and stored table payloads.

inline Json prediction_to_json(const Prediction& p) {
  Json j;
  switch (p.task) {
    case Task::classify:
      j["label_dist"] = p.label_dist;
      break;
    case Task::seq_edit:
      j["alphabet"] = p.alphabet;
      j["token_dists"] = p.token_dists;
      break;
    case Task::coref: {
      Json links = Json::array();
      for (const auto& [pair, prob] : p.link_probs)
        links.push_back(Json{{"a", span_to_json(pair.first)},
                             {"b", span_to_json(pair.second)},
                             {"p", prob}});
      j["links"] = std::move(links);
      break;
    }
    case Task::qa: {
      Json ans = span_to_json(p.answer_span);
      ans["confidence"] = p.answer_confidence;
      j["answer"] = std::move(ans);
      break;
    }
  }
  return j;
}

inline Prediction prediction_from_json(const Json& j, Task task) {
  Prediction p;
  p.task = task;
  switch (task) {
    case Task::classify:
      p.label_dist = j.at("label_dist").get<std::vector<double>>();
      break;
    case Task::seq_edit:
      p.alphabet = j.at("alphabet").get<std::vector<std::string>>();
      p.token_dists =
          j.at("token_dists").get<std::vector<std::vector<double>>>();
      break;
    case Task::coref:
      for (const auto& lj : j.value("links", Json::array())) {
        auto key = ordered_pair(span_from_json(lj.at("a")),
                                span_from_json(lj.at("b")));
        p.link_probs[key] = lj.at("p").get<double>();
      }
      break;
    case Task::qa: {
      const Json& ans = j.at("answer");
      p.answer_span = span_from_json(ans);
      p.answer_confidence = ans.value("confidence", 0.0);
      break;
    }
  }
  validate_prediction(p);
  decode(p);
  return p;
}

}  // namespace nameshift
