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
#include <compare>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nameshift/error.hpp"

namespace nameshift {

using Json = nlohmann::json;
using TokenSeq = std::vector<std::string>;

enum class Task { classify, seq_edit, coref, qa };
enum class Gender { male, female, any };
enum class NamePart { first, last, full };

inline const char* to_string(Task t) {
  switch (t) {
    case Task::classify: return "classify";
    case Task::seq_edit: return "seq_edit";
    case Task::coref: return "coref";
    case Task::qa: return "qa";
  }
  return "?";
}

inline const char* to_string(Gender g) {
  switch (g) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    case Gender::any: return "any";
  }
  return "?";
}

inline const char* to_string(NamePart p) {
  switch (p) {
    case NamePart::first: return "first";
    case NamePart::last: return "last";
    case NamePart::full: return "full";
  }
  return "?";
}

inline Task task_from_string(const std::string& s) {
  if (s == "classify") return Task::classify;
  if (s == "seq_edit") return Task::seq_edit;
  if (s == "coref") return Task::coref;
  if (s == "qa") return Task::qa;
  throw ParseError("unknown task: '" + s + "'");
}

inline Gender gender_from_string(const std::string& s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  if (s == "any") return Gender::any;
  throw ParseError("unknown gender: '" + s + "'");
}

inline NamePart part_from_string(const std::string& s) {
  if (s == "first") return NamePart::first;
  if (s == "last") return NamePart::last;
  if (s == "full") return NamePart::full;
  throw ParseError("unknown name part: '" + s + "'");
}

// True when a lexicon entry of gender `entry` may replace a mention of
// gender `mention`. `any` is a wildcard on either side.
inline bool gender_compatible(Gender entry, Gender mention) {
  return entry == mention || entry == Gender::any || mention == Gender::any;
}

// Half-open token range [start, end) within one segment.
struct Span {
  int seg = 0;
  int start = 0;
  int end = 0;

  auto operator<=>(const Span&) const = default;
  int length() const { return end - start; }
};

struct MentionSpan {
  Span span;
  NamePart part = NamePart::full;

  bool operator==(const MentionSpan&) const = default;
};

// All annotated occurrences of one distinct name. Mentions that co-refer
// (the same real-world name appearing several times, possibly across both
// segments) share a name_id and are always replaced consistently.
struct EntityMention {
  std::string name_id;
  std::string entity_type;
  Gender gender = Gender::any;
  std::vector<MentionSpan> spans;

  bool operator==(const EntityMention&) const = default;
};

// Exactly one variant is populated, matching the instance task.
struct GoldOutput {
  std::optional<int> class_label;                 // classify
  std::vector<TokenSeq> reference_sequences;      // seq_edit
  std::vector<std::vector<Span>> gold_clusters;   // coref
  int probed_cluster = -1;                        // coref: cluster under study
  std::vector<Span> answer_spans;                 // qa

  bool operator==(const GoldOutput&) const = default;
};

struct AnnotatedInstance {
  std::string id;
  Task task = Task::classify;
  std::vector<TokenSeq> segments;  // 1 or 2
  std::vector<EntityMention> mentions;
  GoldOutput gold;
  std::optional<double> annotator_confidence;  // per-instance P(z == z_hat | x)

  bool operator==(const AnnotatedInstance&) const = default;

  int segment_length(int seg) const {
    return static_cast<int>(segments[static_cast<size_t>(seg)].size());
  }
};

struct LexiconEntry {
  TokenSeq surface;
  std::string entity_type;
  Gender gender = Gender::any;
  NamePart part = NamePart::full;
  bool canonical = false;

  bool operator==(const LexiconEntry&) const = default;

  std::string surface_string() const {
    std::string out;
    for (const auto& t : surface) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  }
};

namespace detail {

inline bool token_ok(const std::string& t) {
  if (t.empty()) return false;
  for (unsigned char c : t)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
        c == '\f')
      return false;
  return true;
}

inline std::string span_str(const Span& s) {
  std::ostringstream os;
  os << "[seg " << s.seg << ", " << s.start << ", " << s.end << ")";
  return os.str();
}

}  // namespace detail

inline bool span_in_bounds(const Span& s, const AnnotatedInstance& inst) {
  return s.seg >= 0 && s.seg < static_cast<int>(inst.segments.size()) &&
         s.start >= 0 && s.start < s.end && s.end <= inst.segment_length(s.seg);
}

inline TokenSeq span_tokens(const AnnotatedInstance& inst, const Span& s) {
  const auto& seg = inst.segments[static_cast<size_t>(s.seg)];
  return TokenSeq(seg.begin() + s.start, seg.begin() + s.end);
}

// Checks every corpus invariant; throws DataError naming the instance and
// the offending field.
inline void validate_instance(const AnnotatedInstance& inst) {
  auto fail = [&](const std::string& msg) {
    throw DataError("instance '" + inst.id + "': " + msg);
  };
  if (inst.id.empty()) throw DataError("instance with empty id");
  if (inst.segments.empty() || inst.segments.size() > 2)
    fail("expected 1 or 2 segments, got " +
         std::to_string(inst.segments.size()));
  for (const auto& seg : inst.segments)
    for (const auto& tok : seg)
      if (!detail::token_ok(tok))
        fail("token '" + tok + "' is empty or contains whitespace");

  // Mention spans: in bounds, non-overlapping across the whole instance.
  std::vector<Span> all;
  std::map<std::string, std::pair<std::string, Gender>> name_profile;
  for (const auto& m : inst.mentions) {
    if (m.name_id.empty()) fail("mention with empty name_id");
    if (m.spans.empty()) fail("mention '" + m.name_id + "' has no spans");
    auto [it, inserted] = name_profile.emplace(
        m.name_id, std::make_pair(m.entity_type, m.gender));
    if (!inserted &&
        (it->second.first != m.entity_type || it->second.second != m.gender))
      fail("mentions sharing name_id '" + m.name_id +
           "' disagree on entity_type or gender");
    for (const auto& ms : m.spans) {
      if (!span_in_bounds(ms.span, inst))
        fail("span " + detail::span_str(ms.span) + " of mention '" +
             m.name_id + "' is out of bounds");
      all.push_back(ms.span);
    }
  }
  std::sort(all.begin(), all.end());
  for (size_t i = 1; i < all.size(); ++i)
    if (all[i].seg == all[i - 1].seg && all[i].start < all[i - 1].end)
      fail("overlapping mention spans " + detail::span_str(all[i - 1]) +
           " and " + detail::span_str(all[i]));

  // Gold variant must match the task.
  const GoldOutput& g = inst.gold;
  int populated = (g.class_label.has_value() ? 1 : 0) +
                  (!g.reference_sequences.empty() ? 1 : 0) +
                  (!g.gold_clusters.empty() ? 1 : 0) +
                  (!g.answer_spans.empty() ? 1 : 0);
  if (populated != 1) fail("gold must populate exactly one variant");
  switch (inst.task) {
    case Task::classify:
      if (!g.class_label) fail("classify gold needs class_label");
      if (*g.class_label < 0) fail("class_label must be >= 0");
      break;
    case Task::seq_edit:
      if (g.reference_sequences.empty())
        fail("seq_edit gold needs reference_sequences");
      for (const auto& ref : g.reference_sequences)
        for (const auto& tok : ref)
          if (!detail::token_ok(tok))
            fail("reference token '" + tok + "' is empty or has whitespace");
      break;
    case Task::coref: {
      if (g.gold_clusters.empty()) fail("coref gold needs gold_clusters");
      if (g.probed_cluster < 0 ||
          g.probed_cluster >= static_cast<int>(g.gold_clusters.size()))
        fail("probed_cluster index " + std::to_string(g.probed_cluster) +
             " out of range");
      for (const auto& cluster : g.gold_clusters)
        for (const auto& s : cluster)
          if (!span_in_bounds(s, inst))
            fail("gold cluster span " + detail::span_str(s) +
                 " is out of bounds");
      break;
    }
    case Task::qa:
      if (g.answer_spans.empty()) fail("qa gold needs answer_spans");
      for (const auto& s : g.answer_spans)
        if (!span_in_bounds(s, inst))
          fail("answer span " + detail::span_str(s) + " is out of bounds");
      break;
  }
  if (inst.annotator_confidence &&
      (*inst.annotator_confidence < 0.0 || *inst.annotator_confidence > 1.0))
    fail("annotator_confidence must be in [0,1]");
}

// ---------------------------------------------------------------------------
// JSON serialization

inline Json span_to_json(const Span& s) {
  return Json{{"seg", s.seg}, {"start", s.start}, {"end", s.end}};
}

inline Span span_from_json(const Json& j) {
  return Span{j.at("seg").get<int>(), j.at("start").get<int>(),
              j.at("end").get<int>()};
}

inline Json instance_to_json(const AnnotatedInstance& inst) {
  Json j;
  j["id"] = inst.id;
  j["task"] = to_string(inst.task);
  j["segments"] = inst.segments;
  Json ms = Json::array();
  for (const auto& m : inst.mentions) {
    Json spans = Json::array();
    for (const auto& s : m.spans) {
      Json sj = span_to_json(s.span);
      sj["part"] = to_string(s.part);
      spans.push_back(std::move(sj));
    }
    ms.push_back(Json{{"name_id", m.name_id},
                      {"type", m.entity_type},
                      {"gender", to_string(m.gender)},
                      {"spans", std::move(spans)}});
  }
  j["mentions"] = std::move(ms);
  Json gold;
  switch (inst.task) {
    case Task::classify:
      gold["class_label"] = *inst.gold.class_label;
      break;
    case Task::seq_edit:
      gold["reference_sequences"] = inst.gold.reference_sequences;
      break;
    case Task::coref: {
      Json clusters = Json::array();
      for (const auto& cluster : inst.gold.gold_clusters) {
        Json c = Json::array();
        for (const auto& s : cluster) c.push_back(span_to_json(s));
        clusters.push_back(std::move(c));
      }
      gold["gold_clusters"] = std::move(clusters);
      gold["probed_cluster"] = inst.gold.probed_cluster;
      break;
    }
    case Task::qa: {
      Json spans = Json::array();
      for (const auto& s : inst.gold.answer_spans)
        spans.push_back(span_to_json(s));
      gold["answer_spans"] = std::move(spans);
      break;
    }
  }
  j["gold"] = std::move(gold);
  if (inst.annotator_confidence)
    j["annotator_confidence"] = *inst.annotator_confidence;
  return j;
}

inline AnnotatedInstance instance_from_json(const Json& j) {
  AnnotatedInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.task = task_from_string(j.at("task").get<std::string>());
  inst.segments = j.at("segments").get<std::vector<TokenSeq>>();
  for (const auto& mj : j.value("mentions", Json::array())) {
    EntityMention m;
    m.name_id = mj.at("name_id").get<std::string>();
    m.entity_type = mj.at("type").get<std::string>();
    m.gender = gender_from_string(mj.value("gender", "any"));
    for (const auto& sj : mj.at("spans")) {
      MentionSpan ms;
      ms.span = span_from_json(sj);
      ms.part = part_from_string(sj.value("part", "full"));
      m.spans.push_back(std::move(ms));
    }
    inst.mentions.push_back(std::move(m));
  }
  const Json& gold = j.at("gold");
  if (gold.contains("class_label"))
    inst.gold.class_label = gold.at("class_label").get<int>();
  if (gold.contains("reference_sequences"))
    inst.gold.reference_sequences =
        gold.at("reference_sequences").get<std::vector<TokenSeq>>();
  if (gold.contains("gold_clusters")) {
    for (const auto& cj : gold.at("gold_clusters")) {
      std::vector<Span> cluster;
      for (const auto& sj : cj) cluster.push_back(span_from_json(sj));
      inst.gold.gold_clusters.push_back(std::move(cluster));
    }
    inst.gold.probed_cluster = gold.value("probed_cluster", -1);
  }
  if (gold.contains("answer_spans"))
    for (const auto& sj : gold.at("answer_spans"))
      inst.gold.answer_spans.push_back(span_from_json(sj));
  if (j.contains("annotator_confidence"))
    inst.annotator_confidence = j.at("annotator_confidence").get<double>();
  return inst;
}

inline Json lexicon_entry_to_json(const LexiconEntry& e) {
  Json j{{"surface", e.surface},
         {"type", e.entity_type},
         {"gender", to_string(e.gender)},
         {"part", to_string(e.part)}};
  if (e.canonical) j["canonical"] = true;
  return j;
}

inline LexiconEntry lexicon_entry_from_json(const Json& j) {
  LexiconEntry e;
  e.surface = j.at("surface").get<TokenSeq>();
  e.entity_type = j.at("type").get<std::string>();
  e.gender = gender_from_string(j.value("gender", "any"));
  e.part = part_from_string(j.value("part", "full"));
  e.canonical = j.value("canonical", false);
  return e;
}

// ---------------------------------------------------------------------------
// Name lexicon

class NameLexicon {
 public:
  NameLexicon() = default;

  // Adds an entry unless an identical (surface, type, gender, part) tuple is
  // already present. Returns false on a duplicate.
  bool add(LexiconEntry entry) {
    if (entry.surface.empty())
      throw ParseError("lexicon entry with empty surface");
    for (const auto& tok : entry.surface)
      if (!detail::token_ok(tok))
        throw ParseError("lexicon surface token '" + tok +
                         "' is empty or contains whitespace");
    auto key = std::make_tuple(entry.surface_string(), entry.entity_type,
                               entry.gender, entry.part);
    if (!seen_.insert(key).second) return false;
    index_[{entry.entity_type, entry.gender, entry.part}].push_back(
        entries_.size());
    entries_.push_back(std::move(entry));
    return true;
  }

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const LexiconEntry& entry(size_t i) const { return entries_[i]; }

  // Entry indices usable for a mention of (type, gender) needing `part`,
  // in insertion order. Gender matches exactly or through `any`.
  std::vector<size_t> compatible(const std::string& entity_type,
                                 Gender mention_gender, NamePart part) const {
    std::vector<size_t> out;
    for (Gender g : {Gender::male, Gender::female, Gender::any}) {
      if (!gender_compatible(g, mention_gender)) continue;
      auto it = index_.find({entity_type, g, part});
      if (it != index_.end())
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct IndexKey {
    std::string type;
    Gender gender;
    NamePart part;
    auto operator<=>(const IndexKey&) const = default;
  };

  std::vector<LexiconEntry> entries_;
  std::map<IndexKey, std::vector<size_t>> index_;
  std::set<std::tuple<std::string, std::string, Gender, NamePart>> seen_;
};

// ---------------------------------------------------------------------------
// File I/O (JSON-lines)

inline std::vector<AnnotatedInstance> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::vector<AnnotatedInstance> out;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    AnnotatedInstance inst;
    try {
      inst = instance_from_json(Json::parse(line));
    } catch (const Json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    validate_instance(inst);
    if (!ids.insert(inst.id).second)
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate id '" +
                      inst.id + "'");
    out.push_back(std::move(inst));
  }
  return out;
}

inline void save_dataset(const std::vector<AnnotatedInstance>& dataset,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  for (const auto& inst : dataset) out << instance_to_json(inst).dump() << "\n";
}

inline NameLexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lexicon file: " + path);
  NameLexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      lex.add(lexicon_entry_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lex;
}

inline void save_lexicon(const NameLexicon& lex, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  for (const auto& e : lex.entries())
    out << lexicon_entry_to_json(e).dump() << "\n";
}

}  // namespace nameshift
