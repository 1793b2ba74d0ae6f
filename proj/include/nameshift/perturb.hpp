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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nameshift/corpus.hpp"
#include "nameshift/error.hpp"
#include "nameshift/rng.hpp"

namespace nameshift {

// Replacement text for one span part of one name, with the lexicon entries
// it was built from (two entries when a full span gets first + last glued
// together).
struct ReplacementPiece {
  TokenSeq surface;
  std::vector<LexiconEntry> sources;

  bool operator==(const ReplacementPiece&) const = default;
};

// A complete substitution decision: every covered name_id maps each span
// part it occurs with to a concrete surface. All spans sharing a name_id
// are rewritten from the same draw, so the substitution is consistent
// across segments.
struct Assignment {
  std::map<std::string, std::map<NamePart, ReplacementPiece>> names;

  bool empty() const { return names.empty(); }
  bool covers(const std::string& name_id) const {
    return names.count(name_id) > 0;
  }
  bool operator==(const Assignment&) const = default;
};

// One replaced region in both coordinate systems.
struct RangePair {
  int seg = 0;
  int orig_start = 0;
  int orig_end = 0;
  int new_start = 0;
  int new_end = 0;

  auto operator<=>(const RangePair&) const = default;
};

// Monotone alignment between original and rewritten token positions.
// Boundaries outside replaced regions shift by the accumulated length
// delta; a boundary strictly inside a replaced region has no image.
class SpanMap {
 public:
  SpanMap() = default;
  explicit SpanMap(size_t num_segments) : ranges_(num_segments) {}

  // Ranges must be appended left to right per segment.
  void add(const RangePair& rp) {
    ranges_[static_cast<size_t>(rp.seg)].push_back(rp);
  }

  size_t num_segments() const { return ranges_.size(); }

  const std::vector<RangePair>& replaced(int seg) const {
    return ranges_[static_cast<size_t>(seg)];
  }

  bool identity() const {
    for (const auto& seg : ranges_)
      if (!seg.empty()) return false;
    return true;
  }

  std::optional<int> forward_boundary(int seg, int pos) const {
    return map_boundary(seg, pos, /*forward=*/true);
  }
  std::optional<int> backward_boundary(int seg, int pos) const {
    return map_boundary(seg, pos, /*forward=*/false);
  }

  std::optional<Span> forward_span(const Span& s) const {
    auto a = forward_boundary(s.seg, s.start);
    auto b = forward_boundary(s.seg, s.end);
    if (!a || !b || *a >= *b) return std::nullopt;
    return Span{s.seg, *a, *b};
  }
  std::optional<Span> backward_span(const Span& s) const {
    auto a = backward_boundary(s.seg, s.start);
    auto b = backward_boundary(s.seg, s.end);
    if (!a || !b || *a >= *b) return std::nullopt;
    return Span{s.seg, *a, *b};
  }

 private:
  std::optional<int> map_boundary(int seg, int pos, bool forward) const {
    int offset = 0;
    for (const auto& rp : ranges_[static_cast<size_t>(seg)]) {
      int from_start = forward ? rp.orig_start : rp.new_start;
      int from_end = forward ? rp.orig_end : rp.new_end;
      int to_len = forward ? rp.new_end - rp.new_start
                           : rp.orig_end - rp.orig_start;
      if (from_end <= pos) {
        offset += to_len - (from_end - from_start);
      } else if (from_start < pos) {
        return std::nullopt;  // strictly inside a replaced region
      } else {
        break;
      }
    }
    return pos + offset;
  }

  std::vector<std::vector<RangePair>> ranges_;
};

struct PerturbedInstance {
  AnnotatedInstance instance;
  SpanMap span_map;
  Assignment assignment;
};

namespace detail {

// Which parts must be drawn from the lexicon for a name occurring with the
// given span parts. A name seen both whole and split contributes the split
// parts only: when first and last spans both exist, whole-name spans are
// rebuilt as first + last; when the split is partial, whole-name spans fall
// back to the drawn last name.
inline std::vector<NamePart> parts_to_draw(const std::set<NamePart>& present) {
  bool f = present.count(NamePart::first) > 0;
  bool l = present.count(NamePart::last) > 0;
  if (f && l) return {NamePart::first, NamePart::last};
  if (f && present.count(NamePart::full))
    return {NamePart::first, NamePart::last};
  if (f) return {NamePart::first};
  if (l) return {NamePart::last};
  return {NamePart::full};
}

inline TokenSeq concat(const TokenSeq& a, const TokenSeq& b) {
  TokenSeq out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Builds the per-part surfaces for one name from the drawn entries.
inline std::map<NamePart, ReplacementPiece> materialize_pieces(
    const std::set<NamePart>& present,
    const std::map<NamePart, LexiconEntry>& drawn) {
  std::map<NamePart, ReplacementPiece> pieces;
  if (present.count(NamePart::first))
    pieces[NamePart::first] = {drawn.at(NamePart::first).surface,
                               {drawn.at(NamePart::first)}};
  if (present.count(NamePart::last))
    pieces[NamePart::last] = {drawn.at(NamePart::last).surface,
                              {drawn.at(NamePart::last)}};
  if (present.count(NamePart::full)) {
    if (present.count(NamePart::first) && present.count(NamePart::last)) {
      pieces[NamePart::full] = {concat(drawn.at(NamePart::first).surface,
                                       drawn.at(NamePart::last).surface),
                                {drawn.at(NamePart::first),
                                 drawn.at(NamePart::last)}};
    } else if (drawn.count(NamePart::last)) {
      pieces[NamePart::full] = {drawn.at(NamePart::last).surface,
                                {drawn.at(NamePart::last)}};
    } else {
      pieces[NamePart::full] = {drawn.at(NamePart::full).surface,
                                {drawn.at(NamePart::full)}};
    }
  }
  return pieces;
}

// Per-name replacement demands of one instance, in first-appearance order.
struct NameDemand {
  std::string name_id;
  Gender gender = Gender::any;
  std::set<NamePart> present;
  std::vector<NamePart> to_draw;
  std::vector<std::vector<size_t>> candidates;  // per to_draw entry
};

inline std::vector<NameDemand> name_demands(const AnnotatedInstance& inst,
                                            const NameLexicon& lexicon,
                                            const std::string& entity_type) {
  std::vector<std::string> order;
  std::map<std::string, std::set<NamePart>> present;
  std::map<std::string, Gender> gender;
  for (const auto& m : inst.mentions) {
    if (m.entity_type != entity_type) continue;
    if (!present.count(m.name_id)) order.push_back(m.name_id);
    gender[m.name_id] = m.gender;
    for (const auto& ms : m.spans) present[m.name_id].insert(ms.part);
  }
  std::vector<NameDemand> out;
  for (const auto& id : order) {
    NameDemand d;
    d.name_id = id;
    d.gender = gender[id];
    d.present = present[id];
    d.to_draw = parts_to_draw(d.present);
    for (NamePart p : d.to_draw) {
      auto c = lexicon.compatible(entity_type, d.gender, p);
      if (c.empty())
        throw DataError("no lexicon entry compatible with mention '" + id +
                        "' (type '" + entity_type + "', gender " +
                        to_string(d.gender) + ", part " + to_string(p) + ")");
      d.candidates.push_back(std::move(c));
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace detail

// Draws one replacement per distinct name of `entity_type`, uniformly among
// lexicon entries compatible with the mention's gender and the span part.
// Names are drawn independently, so two names may receive the same entry.
inline Assignment sample_assignment(const AnnotatedInstance& inst,
                                    const NameLexicon& lexicon,
                                    const std::string& entity_type, Rng& rng) {
  Assignment out;
  for (const auto& d : detail::name_demands(inst, lexicon, entity_type)) {
    std::map<NamePart, LexiconEntry> drawn;
    for (size_t k = 0; k < d.to_draw.size(); ++k) {
      const auto& cand = d.candidates[k];
      drawn[d.to_draw[k]] = lexicon.entry(cand[rng.uniform_index(cand.size())]);
    }
    out.names[d.name_id] = detail::materialize_pieces(d.present, drawn);
  }
  return out;
}

// Every assignment the sampler could produce, in odometer order over the
// per-name candidate lists. Intended for brute-force verification on small
// lexicons; refuses to build more than `limit` assignments.
inline std::vector<Assignment> enumerate_assignments(
    const AnnotatedInstance& inst, const NameLexicon& lexicon,
    const std::string& entity_type, size_t limit = 1000000) {
  auto demands = detail::name_demands(inst, lexicon, entity_type);
  std::vector<const std::vector<size_t>*> dims;
  for (const auto& d : demands)
    for (const auto& cand : d.candidates) dims.push_back(&cand);

  size_t total = 1;
  for (const auto* cand : dims) {
    if (total > limit / cand->size())
      throw ConfigError("assignment space too large to enumerate");
    total *= cand->size();
  }

  std::vector<Assignment> out;
  out.reserve(total);
  std::vector<size_t> odo(dims.size(), 0);
  for (size_t n = 0; n < total; ++n) {
    Assignment a;
    size_t dim = 0;
    for (const auto& d : demands) {
      std::map<NamePart, LexiconEntry> drawn;
      for (size_t k = 0; k < d.to_draw.size(); ++k, ++dim)
        drawn[d.to_draw[k]] = lexicon.entry((*dims[dim])[odo[dim]]);
      a.names[d.name_id] = detail::materialize_pieces(d.present, drawn);
    }
    out.push_back(std::move(a));
    for (size_t k = dims.size(); k-- > 0;) {
      if (++odo[k] < dims[k]->size()) break;
      odo[k] = 0;
    }
  }
  return out;
}

// (original surface, replacement surface) pairs induced by an assignment,
// used to rewrite free-standing text such as reference sequences. Longest
// originals first so greedy matching prefers the most specific rewrite.
inline std::vector<std::pair<TokenSeq, TokenSeq>> surface_rewrites(
    const AnnotatedInstance& inst, const Assignment& a) {
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
  std::set<TokenSeq> seen;
  for (const auto& m : inst.mentions) {
    auto it = a.names.find(m.name_id);
    if (it == a.names.end()) continue;
    for (const auto& ms : m.spans) {
      auto pit = it->second.find(ms.part);
      if (pit == it->second.end()) continue;
      TokenSeq orig = span_tokens(inst, ms.span);
      if (!seen.insert(orig).second) continue;
      pairs.emplace_back(std::move(orig), pit->second.surface);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) {
                     return x.first.size() > y.first.size();
                   });
  return pairs;
}

// Greedy left-to-right application of surface rewrites to a token sequence.
inline TokenSeq rewrite_tokens(
    const TokenSeq& tokens,
    const std::vector<std::pair<TokenSeq, TokenSeq>>& rewrites) {
  TokenSeq out;
  size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (const auto& [from, to] : rewrites) {
      if (from.size() > tokens.size() - i) continue;
      if (std::equal(from.begin(), from.end(), tokens.begin() + i)) {
        out.insert(out.end(), to.begin(), to.end());
        i += from.size();
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(tokens[i++]);
  }
  return out;
}

// Rewrites every covered span, shifts the remaining spans and gold
// annotations into the new coordinate system, and records the alignment.
inline PerturbedInstance apply_assignment(const AnnotatedInstance& inst,
                                          const Assignment& a) {
  struct Edit {
    Span span;
    const TokenSeq* replacement;
  };
  std::vector<std::vector<Edit>> edits(inst.segments.size());
  std::set<std::string> matched;
  for (const auto& m : inst.mentions) {
    auto it = a.names.find(m.name_id);
    if (it == a.names.end()) continue;
    matched.insert(m.name_id);
    for (const auto& ms : m.spans) {
      auto pit = it->second.find(ms.part);
      if (pit == it->second.end())
        throw DataError("assignment for '" + m.name_id + "' lacks part " +
                        to_string(ms.part));
      edits[static_cast<size_t>(ms.span.seg)].push_back(
          {ms.span, &pit->second.surface});
    }
  }
  for (const auto& [id, pieces] : a.names)
    if (!matched.count(id))
      throw DataError("assignment references unknown name_id '" + id + "'");

  PerturbedInstance out;
  out.assignment = a;
  out.span_map = SpanMap(inst.segments.size());
  out.instance = inst;

  for (size_t seg = 0; seg < inst.segments.size(); ++seg) {
    auto& seg_edits = edits[seg];
    std::sort(seg_edits.begin(), seg_edits.end(),
              [](const Edit& x, const Edit& y) {
                return x.span.start < y.span.start;
              });
    const TokenSeq& src = inst.segments[seg];
    TokenSeq dst;
    int cursor = 0;
    for (const auto& e : seg_edits) {
      dst.insert(dst.end(), src.begin() + cursor, src.begin() + e.span.start);
      int new_start = static_cast<int>(dst.size());
      dst.insert(dst.end(), e.replacement->begin(), e.replacement->end());
      out.span_map.add({static_cast<int>(seg), e.span.start, e.span.end,
                        new_start, static_cast<int>(dst.size())});
      cursor = e.span.end;
    }
    dst.insert(dst.end(), src.begin() + cursor, src.end());
    out.instance.segments[seg] = std::move(dst);
  }

  auto shift = [&](Span& s, const char* what) {
    auto mapped = out.span_map.forward_span(s);
    if (!mapped)
      throw DataError("instance '" + inst.id + "': " + what +
                      " straddles a replaced region");
    s = *mapped;
  };
  for (auto& m : out.instance.mentions)
    for (auto& ms : m.spans) shift(ms.span, "mention span");
  for (auto& cluster : out.instance.gold.gold_clusters)
    for (auto& s : cluster) shift(s, "gold cluster span");
  for (auto& s : out.instance.gold.answer_spans) shift(s, "answer span");
  if (!out.instance.gold.reference_sequences.empty()) {
    auto rewrites = surface_rewrites(inst, a);
    for (auto& ref : out.instance.gold.reference_sequences)
      ref = rewrite_tokens(ref, rewrites);
  }
  return out;
}

// The assignment that maps a perturbed instance back onto the original
// surfaces: each covered (name, part) is sent to the text its spans carried
// before the rewrite.
inline Assignment inverse_assignment(const AnnotatedInstance& original,
                                     const Assignment& a) {
  Assignment inv;
  for (const auto& m : original.mentions) {
    auto it = a.names.find(m.name_id);
    if (it == a.names.end()) continue;
    for (const auto& ms : m.spans) {
      TokenSeq text = span_tokens(original, ms.span);
      auto& pieces = inv.names[m.name_id];
      auto pit = pieces.find(ms.part);
      if (pit != pieces.end()) {
        if (pit->second.surface != text)
          throw DataError("instance '" + original.id + "': spans of '" +
                          m.name_id + "' part " + to_string(ms.part) +
                          " carry different text; cannot invert");
        continue;
      }
      LexiconEntry src;
      src.surface = text;
      src.entity_type = m.entity_type;
      src.gender = m.gender;
      src.part = ms.part;
      pieces[ms.part] = {std::move(text), {std::move(src)}};
    }
  }
  return inv;
}

}  // namespace nameshift
