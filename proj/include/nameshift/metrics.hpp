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
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nameshift/corpus.hpp"
#include "nameshift/error.hpp"
#include "nameshift/perturb.hpp"
#include "nameshift/prediction.hpp"

namespace nameshift {

// One contiguous rewrite of the source: tokens [start, end) are replaced by
// `replacement` (empty replacement = deletion, empty range = insertion).
struct Edit {
  int start = 0;
  int end = 0;
  TokenSeq replacement;

  auto operator<=>(const Edit&) const = default;
};

using EditSet = std::vector<Edit>;

// Minimal-cost alignment (match 0, substitute 1, insert 1, delete 1) with
// maximal runs of non-match columns merged into single edits. Tie-breaking
// prefers matches, then substitution over separate insert + delete, then
// deletion, so the result is deterministic.
inline EditSet extract_edits(const TokenSeq& source, const TokenSeq& target) {
  const size_t n = source.size(), m = target.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) dp[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) dp[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j) {
      int diag = dp[i - 1][j - 1] + (source[i - 1] == target[j - 1] ? 0 : 1);
      dp[i][j] = std::min({diag, dp[i - 1][j] + 1, dp[i][j - 1] + 1});
    }

  // Walk back, emitting columns; then invert to chronological order.
  enum class Col { match, sub, del, ins };
  std::vector<Col> cols;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && source[i - 1] == target[j - 1] &&
        dp[i][j] == dp[i - 1][j - 1]) {
      cols.push_back(Col::match);
      --i, --j;
    } else if (i > 0 && j > 0 && dp[i][j] == dp[i - 1][j - 1] + 1) {
      cols.push_back(Col::sub);
      --i, --j;
    } else if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      cols.push_back(Col::del);
      --i;
    } else {
      cols.push_back(Col::ins);
      --j;
    }
  }
  std::reverse(cols.begin(), cols.end());

  EditSet out;
  size_t si = 0, ti = 0;
  for (size_t c = 0; c < cols.size();) {
    if (cols[c] == Col::match) {
      ++si, ++ti, ++c;
      continue;
    }
    Edit e;
    e.start = static_cast<int>(si);
    size_t t_begin = ti;
    while (c < cols.size() && cols[c] != Col::match) {
      if (cols[c] == Col::sub) ++si, ++ti;
      else if (cols[c] == Col::del) ++si;
      else ++ti;
      ++c;
    }
    e.end = static_cast<int>(si);
    e.replacement.assign(target.begin() + t_begin, target.begin() + ti);
    out.push_back(std::move(e));
  }
  return out;
}

inline TokenSeq apply_edits(const TokenSeq& source, const EditSet& edits) {
  TokenSeq out;
  int cursor = 0;
  for (const auto& e : edits) {
    if (e.start < cursor || e.end > static_cast<int>(source.size()) ||
        e.start > e.end)
      throw DataError("edit set is not sorted and within bounds");
    out.insert(out.end(), source.begin() + cursor, source.begin() + e.start);
    out.insert(out.end(), e.replacement.begin(), e.replacement.end());
    cursor = e.end;
  }
  out.insert(out.end(), source.begin() + cursor, source.end());
  return out;
}

namespace detail {

struct Counts {
  double tp = 0, fp = 0, fn = 0;

  void operator+=(const Counts& o) { tp += o.tp, fp += o.fp, fn += o.fn; }
  double precision() const { return tp + fp == 0 ? 1.0 : tp / (tp + fp); }
  double recall() const { return tp + fn == 0 ? 1.0 : tp / (tp + fn); }
  double f1() const {
    double denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2 * tp / denom;
  }
  double f05() const {
    double p = precision(), r = recall();
    double denom = 0.25 * p + r;
    return denom == 0 ? 0.0 : 1.25 * p * r / denom;
  }
};

inline Counts edit_counts(const EditSet& hyp, const EditSet& ref) {
  std::set<Edit> ref_set(ref.begin(), ref.end());
  Counts c;
  for (const auto& e : hyp)
    if (ref_set.count(e)) c.tp += 1;
  c.fp = static_cast<double>(hyp.size()) - c.tp;
  c.fn = static_cast<double>(ref.size()) - c.tp;
  return c;
}

}  // namespace detail

// F0.5 of hypothesis edits against the best-matching reference. A
// hypothesis that proposes nothing when no reference changes anything
// scores 1.
inline double edit_f05(const TokenSeq& source, const TokenSeq& hypothesis,
                       const std::vector<TokenSeq>& references) {
  if (references.empty()) throw DataError("edit scoring needs a reference");
  EditSet hyp = extract_edits(source, hypothesis);
  double best = 0.0;
  for (const auto& ref_seq : references) {
    EditSet ref = extract_edits(source, ref_seq);
    double f = (hyp.empty() && ref.empty())
                   ? 1.0
                   : detail::edit_counts(hyp, ref).f05();
    best = std::max(best, f);
  }
  return best;
}

// All unordered span pairs within a cluster, in canonical pair order.
inline std::set<std::pair<Span, Span>> cluster_links(
    const std::vector<Span>& cluster) {
  std::set<std::pair<Span, Span>> links;
  for (size_t i = 0; i < cluster.size(); ++i)
    for (size_t j = i + 1; j < cluster.size(); ++j)
      links.insert(ordered_pair(cluster[i], cluster[j]));
  return links;
}

namespace detail {

// Link counts restricted to the gold cluster holding the probed entity:
// gold links are that cluster's pairs; predicted links come from the
// predicted clusters containing any of its mentions.
inline Counts probed_link_counts(
    const std::vector<std::vector<Span>>& predicted,
    const std::vector<std::vector<Span>>& gold, int probed_cluster) {
  if (probed_cluster < 0 || probed_cluster >= static_cast<int>(gold.size()))
    throw DataError("probed cluster index out of range");
  const auto& probed = gold[static_cast<size_t>(probed_cluster)];
  std::set<Span> probed_spans(probed.begin(), probed.end());
  auto gold_links = cluster_links(probed);

  std::set<std::pair<Span, Span>> pred_links;
  for (const auto& cluster : predicted) {
    bool touches = std::any_of(cluster.begin(), cluster.end(),
                               [&](const Span& s) {
                                 return probed_spans.count(s) > 0;
                               });
    if (!touches) continue;
    auto links = cluster_links(cluster);
    pred_links.insert(links.begin(), links.end());
  }

  Counts c;
  for (const auto& l : pred_links)
    if (gold_links.count(l)) c.tp += 1;
  c.fp = static_cast<double>(pred_links.size()) - c.tp;
  c.fn = static_cast<double>(gold_links.size()) - c.tp;
  return c;
}

inline Counts answer_overlap_counts(const Span& predicted,
                                    const std::vector<Span>& golds) {
  Counts best;
  double best_f = -1.0;
  for (const auto& g : golds) {
    double overlap = 0;
    if (g.seg == predicted.seg)
      overlap = std::max(
          0, std::min(g.end, predicted.end) - std::max(g.start, predicted.start));
    Counts c;
    c.tp = overlap;
    c.fp = predicted.length() - overlap;
    c.fn = g.length() - overlap;
    if (c.f1() > best_f) {
      best_f = c.f1();
      best = c;
    }
  }
  return best;
}

}  // namespace detail

// F1 over coreference links of the probed entity's gold cluster.
inline double cluster_link_f1(const std::vector<std::vector<Span>>& predicted,
                              const std::vector<std::vector<Span>>& gold,
                              int probed_cluster) {
  return detail::probed_link_counts(predicted, gold, probed_cluster).f1();
}

// Token-overlap F1 of an answer span against the best gold span.
inline double token_f1(const Span& predicted, const std::vector<Span>& golds) {
  if (golds.empty()) throw DataError("answer scoring needs a gold span");
  return detail::answer_overlap_counts(predicted, golds).f1();
}

// Rebuilds the corrected token sequence from per-position edit symbols.
inline TokenSeq resolve_sequence(const TokenSeq& source,
                                 const std::vector<std::string>& symbols) {
  if (source.size() != symbols.size())
    throw DataError("symbol row count does not match source length");
  TokenSeq out;
  for (size_t i = 0; i < source.size(); ++i) {
    if (symbols[i] == kKeepSymbol)
      out.push_back(source[i]);
    else if (symbols[i] != kDeleteSymbol)
      out.push_back(symbols[i]);
  }
  return out;
}

inline TokenSeq flatten_segments(const std::vector<TokenSeq>& segments) {
  TokenSeq out;
  for (const auto& seg : segments) out.insert(out.end(), seg.begin(), seg.end());
  return out;
}

// ---------------------------------------------------------------------------
// Task metrics behind one interface. per_instance drives extremum tracking
// during probing; corpus pools counts over the dataset (micro).

class Metric {
 public:
  virtual ~Metric() = default;
  virtual std::string name() const = 0;
  virtual Task task() const = 0;
  virtual double per_instance(const Prediction& pred,
                              const AnnotatedInstance& inst) const = 0;
  virtual double corpus(const std::vector<Prediction>& preds,
                        const std::vector<AnnotatedInstance>& insts,
                        bool* degenerate = nullptr) const = 0;
};

using MetricPtr = std::shared_ptr<const Metric>;

namespace detail {

class BinaryF1 : public Metric {
 public:
  std::string name() const override { return "binary_f1"; }
  Task task() const override { return Task::classify; }

  double per_instance(const Prediction& pred,
                      const AnnotatedInstance& inst) const override {
    return pred.decoded_label == *inst.gold.class_label ? 1.0 : 0.0;
  }

  double corpus(const std::vector<Prediction>& preds,
                const std::vector<AnnotatedInstance>& insts,
                bool* degenerate) const override {
    Counts c;
    for (size_t i = 0; i < preds.size(); ++i) {
      bool gold_pos = *insts[i].gold.class_label == kPositiveClass;
      bool pred_pos = preds[i].decoded_label == kPositiveClass;
      if (gold_pos && pred_pos) c.tp += 1;
      else if (!gold_pos && pred_pos) c.fp += 1;
      else if (gold_pos && !pred_pos) c.fn += 1;
    }
    if (degenerate) *degenerate = (c.tp + c.fp + c.fn == 0);
    return c.f1();
  }

  static constexpr int kPositiveClass = 1;
};

class EditF05 : public Metric {
 public:
  std::string name() const override { return "edit_f05"; }
  Task task() const override { return Task::seq_edit; }

  double per_instance(const Prediction& pred,
                      const AnnotatedInstance& inst) const override {
    TokenSeq source = flatten_segments(inst.segments);
    return edit_f05(source, resolve_sequence(source, pred.decoded_symbols),
                    inst.gold.reference_sequences);
  }

  double corpus(const std::vector<Prediction>& preds,
                const std::vector<AnnotatedInstance>& insts,
                bool* degenerate) const override {
    Counts total;
    for (size_t i = 0; i < preds.size(); ++i) {
      TokenSeq source = flatten_segments(insts[i].segments);
      EditSet hyp = extract_edits(
          source, resolve_sequence(source, preds[i].decoded_symbols));
      Counts best;
      double best_f = -1.0;
      for (const auto& ref_seq : insts[i].gold.reference_sequences) {
        Counts c = edit_counts(hyp, extract_edits(source, ref_seq));
        double f = (hyp.empty() && c.fn == 0) ? 1.0 : c.f05();
        if (f > best_f) {
          best_f = f;
          best = c;
        }
      }
      total += best;
    }
    if (degenerate) *degenerate = (total.tp + total.fp + total.fn == 0);
    return (total.tp + total.fp + total.fn == 0) ? 1.0 : total.f05();
  }
};

class ClusterLinkF1 : public Metric {
 public:
  std::string name() const override { return "cluster_link_f1"; }
  Task task() const override { return Task::coref; }

  double per_instance(const Prediction& pred,
                      const AnnotatedInstance& inst) const override {
    return cluster_link_f1(pred.decoded_clusters, inst.gold.gold_clusters,
                           inst.gold.probed_cluster);
  }

  double corpus(const std::vector<Prediction>& preds,
                const std::vector<AnnotatedInstance>& insts,
                bool* degenerate) const override {
    Counts total;
    for (size_t i = 0; i < preds.size(); ++i)
      total += probed_link_counts(preds[i].decoded_clusters,
                                  insts[i].gold.gold_clusters,
                                  insts[i].gold.probed_cluster);
    if (degenerate) *degenerate = (total.tp + total.fp + total.fn == 0);
    return total.f1();
  }
};

class TokenF1 : public Metric {
 public:
  std::string name() const override { return "token_f1"; }
  Task task() const override { return Task::qa; }

  double per_instance(const Prediction& pred,
                      const AnnotatedInstance& inst) const override {
    return token_f1(pred.answer_span, inst.gold.answer_spans);
  }

  double corpus(const std::vector<Prediction>& preds,
                const std::vector<AnnotatedInstance>& insts,
                bool* degenerate) const override {
    Counts total;
    for (size_t i = 0; i < preds.size(); ++i)
      total += answer_overlap_counts(preds[i].answer_span,
                                     insts[i].gold.answer_spans);
    if (degenerate) *degenerate = (total.tp + total.fp + total.fn == 0);
    return total.f1();
  }
};

}  // namespace detail

inline MetricPtr make_metric(const std::string& name) {
  if (name == "binary_f1") return std::make_shared<detail::BinaryF1>();
  if (name == "edit_f05") return std::make_shared<detail::EditF05>();
  if (name == "cluster_link_f1")
    return std::make_shared<detail::ClusterLinkF1>();
  if (name == "token_f1") return std::make_shared<detail::TokenF1>();
  throw ConfigError("unknown metric '" + name +
                    "' (choices: binary_f1, edit_f05, cluster_link_f1, "
                    "token_f1)");
}

// ---------------------------------------------------------------------------
// Stability: a perturbed prediction counts as unchanged when its decoded
// output, carried back into the original coordinate system, equals the
// original decoded output. Positions inside replaced ranges are excluded,
// since the correct output there legitimately differs.

inline bool prediction_unchanged(const AnnotatedInstance& original_inst,
                                 const Prediction& original,
                                 const Prediction& perturbed,
                                 const SpanMap& map) {
  switch (original.task) {
    case Task::classify:
      return original.decoded_label == perturbed.decoded_label;
    case Task::seq_edit: {
      // Per-segment flat offsets on both sides.
      std::vector<int> orig_off{0}, pert_off{0};
      for (size_t seg = 0; seg < original_inst.segments.size(); ++seg) {
        int orig_len = original_inst.segment_length(static_cast<int>(seg));
        int delta = 0;
        for (const auto& rp : map.replaced(static_cast<int>(seg)))
          delta += (rp.new_end - rp.new_start) - (rp.orig_end - rp.orig_start);
        orig_off.push_back(orig_off.back() + orig_len);
        pert_off.push_back(pert_off.back() + orig_len + delta);
      }
      for (size_t seg = 0; seg < original_inst.segments.size(); ++seg) {
        int orig_len = original_inst.segment_length(static_cast<int>(seg));
        for (int pos = 0; pos < orig_len; ++pos) {
          bool inside = false;
          for (const auto& rp : map.replaced(static_cast<int>(seg)))
            if (pos >= rp.orig_start && pos < rp.orig_end) {
              inside = true;
              break;
            }
          if (inside) continue;
          auto mapped = map.forward_boundary(static_cast<int>(seg), pos);
          size_t o = static_cast<size_t>(orig_off[seg] + pos);
          size_t p = static_cast<size_t>(pert_off[seg] + *mapped);
          if (original.decoded_symbols.at(o) != perturbed.decoded_symbols.at(p))
            return false;
        }
      }
      return true;
    }
    case Task::coref: {
      std::vector<std::vector<Span>> mapped;
      for (const auto& cluster : perturbed.decoded_clusters) {
        std::vector<Span> back;
        for (const auto& s : cluster) {
          auto m = map.backward_span(s);
          if (!m) return false;  // undecidable counts as changed
          back.push_back(*m);
        }
        std::sort(back.begin(), back.end());
        mapped.push_back(std::move(back));
      }
      std::sort(mapped.begin(), mapped.end());
      auto orig = original.decoded_clusters;
      for (auto& c : orig) std::sort(c.begin(), c.end());
      std::sort(orig.begin(), orig.end());
      return mapped == orig;
    }
    case Task::qa: {
      bool orig_empty = original.answer_span.length() <= 0;
      bool pert_empty = perturbed.answer_span.length() <= 0;
      if (orig_empty || pert_empty) return orig_empty == pert_empty;
      auto back = map.backward_span(perturbed.answer_span);
      if (!back) return false;
      return *back == original.answer_span;
    }
  }
  return false;
}

struct PerturbedPrediction {
  const Prediction* prediction = nullptr;
  const SpanMap* span_map = nullptr;
};

inline double stability(
    const std::vector<AnnotatedInstance>& instances,
    const std::vector<Prediction>& originals,
    const std::vector<std::vector<PerturbedPrediction>>& perturbed) {
  if (instances.empty()) throw DataError("stability over an empty dataset");
  size_t stable = 0;
  for (size_t i = 0; i < instances.size(); ++i) {
    bool ok = true;
    for (const auto& pp : perturbed[i]) {
      if (!pp.span_map)
        throw DataError("instance '" + instances[i].id +
                        "': perturbed prediction lacks a span map");
      if (!prediction_unchanged(instances[i], originals[i], *pp.prediction,
                                *pp.span_map)) {
        ok = false;
        break;
      }
    }
    if (ok) ++stable;
  }
  return static_cast<double>(stable) / static_cast<double>(instances.size());
}

}  // namespace nameshift
