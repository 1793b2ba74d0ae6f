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

// Regenerates the bundled corpora under data/. Everything here is
// deterministic: fixed seeds, and raw mt19937 draws instead of
// distribution objects (whose output is implementation-defined).
//
// The classification corpus plants a name-label correlation in the
// training split only. Sentiment words come in a strong tier (always
// matching the label) and a weak tier (70% matching), while planted
// names match 95% of the time, so a trained bag-of-words model weighs
// the planted names heavier than a weak sentiment word. Test instances
// built around weak words are then flippable by name substitution
// alone, which is exactly what the probe and the defense demonstrate.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nameshift/corpus.hpp"

namespace ns = nameshift;
namespace fs = std::filesystem;

namespace {

struct NameDef {
  ns::TokenSeq toks;
  char group;  // 'A' label-1 leaning, 'B' label-0 leaning, 'N' neutral
};

const std::vector<NameDef> kNames = {
    {{"Amara"}, 'A'},          {{"Alden"}, 'A'},
    {{"Aurora"}, 'A'},         {{"Abram"}, 'A'},
    {{"Boris"}, 'B'},          {{"Breck"}, 'B'},
    {{"Bruna"}, 'B'},          {{"Mara", "Grim"}, 'B'},
    {{"Jordan"}, 'N'},         {{"Leslie"}, 'N'},
    {{"Morgan"}, 'N'},         {{"Casey"}, 'N'},
    {{"Riley"}, 'N'},          {{"Jean", "Paul"}, 'N'},
    {{"Van", "der", "Berg"}, 'N'},
};

const std::vector<std::string> kStrongWords[2] = {{"dreadful", "dismal"},
                                                  {"superb", "stellar"}};
const std::vector<std::string> kWeakWords[2] = {{"rough", "patchy"},
                                                {"fine", "decent"}};

std::vector<size_t> group_indices(char group) {
  std::vector<size_t> out;
  for (size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i].group == group) out.push_back(i);
  return out;
}

ns::AnnotatedInstance classify_instance(const std::string& id, int label,
                                        const NameDef& name,
                                        const ns::TokenSeq& tail) {
  ns::AnnotatedInstance inst;
  inst.id = id;
  inst.task = ns::Task::classify;
  ns::TokenSeq tokens = name.toks;
  tokens.insert(tokens.end(), tail.begin(), tail.end());
  inst.segments = {tokens};
  ns::EntityMention m;
  m.name_id = "n1";
  m.entity_type = "person";
  m.gender = ns::Gender::any;
  m.spans = {{ns::Span{0, 0, static_cast<int>(name.toks.size())},
              ns::NamePart::full}};
  inst.mentions = {m};
  inst.gold.class_label = label;
  ns::validate_instance(inst);
  return inst;
}

// ---- spurious-correlation classification corpus ----

void write_classify_corpus(const fs::path& dir) {
  std::mt19937 rng(7);
  auto pick = [&](const std::vector<size_t>& pool) {
    return pool[rng() % pool.size()];
  };
  auto coin = [&](double p) { return (rng() % 10000) / 10000.0 < p; };
  const auto a_pool = group_indices('A');
  const auto b_pool = group_indices('B');
  const auto n_pool = group_indices('N');

  std::vector<ns::AnnotatedInstance> train;
  for (int i = 0; i < 400; ++i) {
    int label = i % 2;
    size_t name;
    if (coin(0.5)) {
      name = pick(n_pool);
    } else {
      bool own = coin(0.95);
      const auto& pool = (label == 1) == own ? a_pool : b_pool;
      name = pick(pool);
    }
    ns::TokenSeq tail;
    if (coin(0.6)) {
      tail = {"said", "the", "launch", "was", kStrongWords[label][0],
              kStrongWords[label][1]};
    } else {
      int word_label = coin(0.7) ? label : 1 - label;
      tail = {"noted", "the", "update", "was",
              kWeakWords[word_label][rng() % 2]};
    }
    char id[32];
    std::snprintf(id, sizeof(id), "cls-train-%03d", i);
    train.push_back(classify_instance(id, label, kNames[name], tail));
  }
  ns::save_dataset(train, (dir / "classify_train.jsonl").string());

  // Test split: 20 strong instances no substitution can flip, 20 weak
  // instances with neutral names (flippable downward), and 20 weak
  // instances already carrying a wrong-leaning name (fixable upward).
  std::mt19937 trng(11);
  auto tpick = [&](const std::vector<size_t>& pool) {
    return pool[trng() % pool.size()];
  };
  std::vector<ns::AnnotatedInstance> test;
  auto add = [&](int label, bool strong, size_t name) {
    ns::TokenSeq tail;
    if (strong) {
      tail = {"said", "the", "launch", "was", kStrongWords[label][0],
              kStrongWords[label][1]};
    } else {
      tail = {"noted", "the", "update", "was",
              kWeakWords[label][trng() % 2]};
    }
    char id[32];
    std::snprintf(id, sizeof(id), "cls-test-%03zu", test.size());
    test.push_back(classify_instance(id, label, kNames[name], tail));
  };
  for (int i = 0; i < 20; ++i) add(i % 2, true, n_pool[i % n_pool.size()]);
  for (int i = 0; i < 20; ++i) add(i % 2, false, n_pool[(i + 3) % n_pool.size()]);
  for (int i = 0; i < 10; ++i) add(1, false, tpick(b_pool));
  for (int i = 0; i < 10; ++i) add(0, false, tpick(a_pool));
  ns::save_dataset(test, (dir / "classify_test.jsonl").string());
}

void write_lexicons(const fs::path& dir) {
  ns::NameLexicon lex;
  for (const auto& n : kNames) {
    ns::LexiconEntry e;
    e.surface = n.toks;
    e.entity_type = "person";
    e.gender = ns::Gender::any;
    e.part = ns::NamePart::full;
    lex.add(e);
  }
  ns::save_lexicon(lex, (dir / "person_lexicon.jsonl").string());

  // Canonical replacements: names the training split treats evenhandedly.
  // One male plus two female entries so mixed-gender resolution has both.
  ns::NameLexicon canon;
  auto canonical = [&](const char* name, ns::Gender g) {
    ns::LexiconEntry e;
    e.surface = {name};
    e.entity_type = "person";
    e.gender = g;
    e.part = ns::NamePart::full;
    e.canonical = true;
    canon.add(e);
  };
  canonical("Jordan", ns::Gender::male);
  canonical("Leslie", ns::Gender::female);
  canonical("Morgan", ns::Gender::female);
  ns::save_lexicon(canon, (dir / "canonical_person.jsonl").string());
}

void write_bow_spec(const fs::path& dir) {
  ns::Json spec{{"train",
                 ns::Json{{"dataset", "classify_train.jsonl"},
                          {"epochs", 300},
                          {"lr", 0.5},
                          {"l2", 0.0},
                          {"seed", 42}}}};
  std::ofstream out(dir / "bow_spec.json");
  out << spec.dump(2) << "\n";
}

// ---- corpus and rules for the HTTP oracle round-trip ----

void write_remote_corpus(const fs::path& dir) {
  std::mt19937 rng(13);
  const std::vector<ns::TokenSeq> tails = {
      {"visited", "the", "harbor", "today"},
      {"filed", "a", "complaint", "downtown"},
      {"opened", "the", "exhibit", "early"},
  };
  std::vector<ns::AnnotatedInstance> corpus;
  for (int i = 0; i < 100; ++i) {
    const NameDef& name = kNames[i % kNames.size()];
    char id[32];
    std::snprintf(id, sizeof(id), "rem-%03d", i);
    corpus.push_back(classify_instance(id, static_cast<int>(rng() % 2), name,
                                       tails[i % tails.size()]));
  }
  ns::save_dataset(corpus, (dir / "remote_corpus.jsonl").string());

  ns::Json rules = ns::Json::array();
  auto rule = [&](const ns::TokenSeq& pattern, double p0, double p1) {
    rules.push_back(ns::Json{{"pattern", pattern},
                             {"label_dist", std::vector<double>{p0, p1}}});
  };
  for (const auto& n : kNames) {
    if (n.group == 'A') rule(n.toks, 0.15, 0.85);
    if (n.group == 'B') rule(n.toks, 0.9, 0.1);
  }
  rule({"Jordan"}, 0.35, 0.65);
  rule({"Leslie"}, 0.45, 0.55);
  rule({"Morgan"}, 0.25, 0.75);
  rule({"Riley"}, 0.4, 0.6);
  ns::Json oracle{{"task", "classify"},
                  {"rules", rules},
                  {"default", ns::Json{{"label_dist",
                                        std::vector<double>{0.3, 0.7}}}}};
  std::ofstream out(dir / "remote_rules.json");
  out << oracle.dump(2) << "\n";
}

// ---- token-edit corpus: a correction engine that unravels near B names ----

void write_gec_corpus(const fs::path& dir) {
  struct Row {
    ns::TokenSeq before;  // after the name
    ns::TokenSeq after;
    size_t name;  // index into kNames
  };
  const std::vector<Row> rows = {
      {{"have", "walked", "the", "dogs"}, {"has", "walked", "the", "dog"}, 8},
      {{"goed", "to", "the", "market"}, {"went", "to", "the", "market"}, 9},
      {{"eated", "lunch", "near", "the", "bridge"},
       {"ate", "lunch", "near", "the", "bridge"},
       10},
      {{"runed", "past", "the", "station"},
       {"ran", "past", "the", "station"},
       12},
      {{"have", "seen", "the", "dogs", "before"},
       {"has", "seen", "the", "dog", "before"},
       13},
      {{"goed", "home", "with", "the", "team"},
       {"went", "home", "with", "the", "team"},
       14},
      {{"eated", "the", "last", "apple"}, {"ate", "the", "last", "apple"}, 11},
      {{"runed", "the", "whole", "race"}, {"ran", "the", "whole", "race"}, 8},
  };
  std::vector<ns::AnnotatedInstance> corpus;
  for (size_t i = 0; i < rows.size(); ++i) {
    const NameDef& name = kNames[rows[i].name];
    ns::AnnotatedInstance inst;
    inst.id = "gec-" + std::to_string(i);
    inst.task = ns::Task::seq_edit;
    ns::TokenSeq tokens = name.toks;
    tokens.insert(tokens.end(), rows[i].before.begin(), rows[i].before.end());
    inst.segments = {tokens};
    ns::EntityMention m;
    m.name_id = "n1";
    m.entity_type = "person";
    m.gender = ns::Gender::any;
    m.spans = {{ns::Span{0, 0, static_cast<int>(name.toks.size())},
                ns::NamePart::full}};
    inst.mentions = {m};
    ns::TokenSeq ref = name.toks;
    ref.insert(ref.end(), rows[i].after.begin(), rows[i].after.end());
    inst.gold.reference_sequences = {ref};
    ns::validate_instance(inst);
    corpus.push_back(std::move(inst));
  }
  ns::save_dataset(corpus, (dir / "gec_corpus.jsonl").string());

  auto corrections = [] {
    ns::Json edits = ns::Json::array();
    auto edit = [&](const char* trigger, const char* effect, double prob) {
      edits.push_back(
          ns::Json{{"trigger", trigger}, {"effect", effect}, {"prob", prob}});
    };
    edit("have", "has", 0.9);
    edit("goed", "went", 0.9);
    edit("eated", "ate", 0.9);
    edit("runed", "ran", 0.85);
    edit("dogs", "dog", 0.85);
    return edits;
  };
  ns::Json rules = ns::Json::array();
  for (const auto& n : kNames) {
    if (n.group != 'B') continue;
    ns::Json edits = corrections();
    // The planted failure mode: these names also make it delete articles.
    edits.push_back(ns::Json{
        {"trigger", "the"}, {"effect", "<del>"}, {"prob", 0.7}});
    rules.push_back(ns::Json{{"pattern", n.toks}, {"edits", edits}});
  }
  ns::Json oracle{{"task", "seq_edit"},
                  {"rules", rules},
                  {"default", ns::Json{{"edits", corrections()}}}};
  std::ofstream out(dir / "gec_rules.json");
  out << oracle.dump(2) << "\n";
}

// ---- coreference corpus: name/pronoun links that fall apart near B names ----

void write_coref_corpus(const fs::path& dir) {
  const std::vector<size_t> leads = {10, 9, 13, 12, 14, 8};
  std::vector<ns::AnnotatedInstance> corpus;
  for (size_t i = 0; i < leads.size(); ++i) {
    const NameDef& name = kNames[leads[i]];
    ns::AnnotatedInstance inst;
    inst.id = "coref-" + std::to_string(i);
    inst.task = ns::Task::coref;
    ns::TokenSeq seg0 = name.toks;
    ns::TokenSeq rest = {"met", "the", "mayor", "yesterday"};
    seg0.insert(seg0.end(), rest.begin(), rest.end());
    inst.segments = {seg0, {"She", "thanked", "everyone", "afterwards"}};
    ns::EntityMention m;
    m.name_id = "n1";
    m.entity_type = "person";
    m.gender = ns::Gender::female;
    int len = static_cast<int>(name.toks.size());
    m.spans = {{ns::Span{0, 0, len}, ns::NamePart::full}};
    inst.mentions = {m};
    inst.gold.gold_clusters = {{ns::Span{0, 0, len}, ns::Span{1, 0, 1}}};
    inst.gold.probed_cluster = 0;
    ns::validate_instance(inst);
    corpus.push_back(std::move(inst));
  }
  ns::save_dataset(corpus, (dir / "coref_corpus.jsonl").string());

  ns::Json rules = ns::Json::array();
  for (const auto& n : kNames) {
    double p = n.group == 'B' ? 0.35 : 0.9;
    ns::Json links = ns::Json::array();
    links.push_back(ns::Json{{"a", n.toks}, {"b", ns::TokenSeq{"She"}},
                             {"p", p}});
    rules.push_back(ns::Json{{"pattern", n.toks}, {"links", links}});
  }
  ns::Json oracle{{"task", "coref"},
                  {"rules", rules},
                  {"default", ns::Json{{"links", ns::Json::array()}}}};
  std::ofstream out(dir / "coref_rules.json");
  out << oracle.dump(2) << "\n";
}

// ---- span extraction corpus: B names drag the answer to a distractor ----

void write_qa_corpus(const fs::path& dir) {
  const std::vector<size_t> leads = {8, 11, 9, 14, 10, 13};
  std::vector<ns::AnnotatedInstance> corpus;
  for (size_t i = 0; i < leads.size(); ++i) {
    const NameDef& name = kNames[leads[i]];
    ns::AnnotatedInstance inst;
    inst.id = "qa-" + std::to_string(i);
    inst.task = ns::Task::qa;
    ns::TokenSeq seg0 = name.toks;
    ns::TokenSeq rest = {"waited", "near", "the", "depot"};
    seg0.insert(seg0.end(), rest.begin(), rest.end());
    inst.segments = {seg0, {"police", "searched", "by", "the", "office"}};
    ns::EntityMention m;
    m.name_id = "n1";
    m.entity_type = "person";
    m.gender = ns::Gender::any;
    int len = static_cast<int>(name.toks.size());
    m.spans = {{ns::Span{0, 0, len}, ns::NamePart::full}};
    inst.mentions = {m};
    inst.gold.answer_spans = {ns::Span{0, len + 2, len + 4}};
    ns::validate_instance(inst);
    corpus.push_back(std::move(inst));
  }
  ns::save_dataset(corpus, (dir / "qa_corpus.jsonl").string());

  ns::Json rules = ns::Json::array();
  for (const auto& n : kNames) {
    if (n.group != 'B') continue;
    rules.push_back(ns::Json{{"pattern", n.toks},
                             {"answer", ns::TokenSeq{"the", "office"}},
                             {"confidence", 0.6}});
  }
  ns::Json oracle{{"task", "qa"},
                  {"rules", rules},
                  {"default", ns::Json{{"answer", ns::TokenSeq{"the", "depot"}},
                                       {"confidence", 0.85}}}};
  std::ofstream out(dir / "qa_rules.json");
  out << oracle.dump(2) << "\n";
}

void write_frequencies(const fs::path& dir) {
  // Rough corpus counts for the frequency grouping demo. Casey is left
  // out on purpose: absent names must surface with frequency 0.
  std::ofstream out(dir / "name_frequencies.csv");
  out << "Jordan,900\n"
      << "Leslie,700\n"
      << "Morgan,650\n"
      << "Riley,500\n"
      << "Amara,300\n"
      << "Alden,280\n"
      << "Aurora,260\n"
      << "Abram,240\n"
      << "Boris,220\n"
      << "Breck,200\n"
      << "Bruna,180\n"
      << "Jean Paul,120\n"
      << "Mara Grim,60\n"
      << "Van der Berg,40\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate the bundled synthetic corpora"};
  std::string out_dir = "data";
  app.add_option("--out-dir", out_dir, "directory to write into");
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);
    fs::path dir(out_dir);
    write_classify_corpus(dir);
    write_lexicons(dir);
    write_bow_spec(dir);
    write_remote_corpus(dir);
    write_gec_corpus(dir);
    write_coref_corpus(dir);
    write_qa_corpus(dir);
    write_frequencies(dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote corpora to " << out_dir << "\n";
  return 0;
}
