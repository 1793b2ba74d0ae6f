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

#include <string>
#include <vector>

#include "nameshift/corpus.hpp"
#include "nameshift/oracle.hpp"

namespace nstest {

using nameshift::AnnotatedInstance;
using nameshift::Gender;
using nameshift::Json;
using nameshift::LexiconEntry;
using nameshift::NameLexicon;
using nameshift::NamePart;
using nameshift::Span;
using nameshift::Task;
using nameshift::TokenSeq;

// A classify instance with one full-name mention at the given position.
inline AnnotatedInstance classify_instance(const std::string& id, int label,
                                           const TokenSeq& tokens,
                                           int name_start, int name_end,
                                           Gender gender = Gender::any) {
  AnnotatedInstance inst;
  inst.id = id;
  inst.task = Task::classify;
  inst.segments = {tokens};
  nameshift::EntityMention m;
  m.name_id = "n1";
  m.entity_type = "person";
  m.gender = gender;
  m.spans = {{Span{0, name_start, name_end}, NamePart::full}};
  inst.mentions = {m};
  inst.gold.class_label = label;
  nameshift::validate_instance(inst);
  return inst;
}

inline LexiconEntry entry(const TokenSeq& surface,
                          const std::string& type = "person",
                          Gender gender = Gender::any,
                          NamePart part = NamePart::full,
                          bool canonical = false) {
  LexiconEntry e;
  e.surface = surface;
  e.entity_type = type;
  e.gender = gender;
  e.part = part;
  e.canonical = canonical;
  return e;
}

// A lexicon of single-token full names of type "person".
inline NameLexicon name_lexicon(const std::vector<std::string>& names) {
  NameLexicon lex;
  for (const auto& n : names) lex.add(entry({n}));
  return lex;
}

// Table oracle for classify: per-name rules plus a default.
inline nameshift::TableOracle classify_table(
    const std::vector<std::pair<TokenSeq, std::vector<double>>>& rules,
    const std::vector<double>& fallback) {
  Json rj = Json::array();
  for (const auto& [pattern, dist] : rules)
    rj.push_back(Json{{"pattern", pattern}, {"label_dist", dist}});
  return nameshift::TableOracle::from_json(
      Json{{"task", "classify"},
           {"rules", rj},
           {"default", Json{{"label_dist", fallback}}}});
}

}  // namespace nstest
