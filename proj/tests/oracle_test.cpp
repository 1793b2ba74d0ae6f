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

#include "nameshift/oracle.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"

namespace ns = nameshift;
namespace fs = std::filesystem;
using nstest::classify_instance;

namespace {

ns::AnnotatedInstance seq_instance(const ns::TokenSeq& tokens) {
  ns::AnnotatedInstance inst;
  inst.id = "s";
  inst.task = ns::Task::seq_edit;
  inst.segments = {tokens};
  ns::EntityMention m;
  m.name_id = "n1";
  m.entity_type = "person";
  m.gender = ns::Gender::any;
  m.spans = {{ns::Span{0, 0, 1}, ns::NamePart::full}};
  inst.mentions = {m};
  inst.gold.reference_sequences = {tokens};
  ns::validate_instance(inst);
  return inst;
}

}  // namespace

TEST(Decode, ArgmaxTieGoesToLowestIndex) {
  ns::Prediction p;
  p.task = ns::Task::classify;
  p.label_dist = {0.5, 0.5};
  ns::decode(p);
  EXPECT_EQ(p.decoded_label, 0);
}

TEST(Decode, ClustersAreTransitiveClosureAboveHalf) {
  ns::Span a{0, 0, 1}, b{0, 2, 3}, c{1, 0, 1}, d{1, 2, 3}, e{1, 4, 5};
  ns::Prediction p;
  p.task = ns::Task::coref;
  p.link_probs[{a, b}] = 0.9;
  p.link_probs[{b, c}] = 0.6;
  p.link_probs[{d, e}] = 0.5;  // not above the threshold
  ns::decode(p);
  ASSERT_EQ(p.decoded_clusters.size(), 1u);
  EXPECT_EQ(p.decoded_clusters[0], (std::vector<ns::Span>{a, b, c}));
}

TEST(PredictionJson, RoundTripAllTasks) {
  ns::Prediction cls;
  cls.task = ns::Task::classify;
  cls.label_dist = {0.25, 0.75};
  ns::decode(cls);
  EXPECT_EQ(ns::prediction_from_json(ns::prediction_to_json(cls),
                                     ns::Task::classify),
            cls);

  ns::Prediction se;
  se.task = ns::Task::seq_edit;
  se.alphabet = {ns::kKeepSymbol, ns::kDeleteSymbol, "ran"};
  se.token_dists = {{1.0, 0.0, 0.0}, {0.2, 0.0, 0.8}};
  ns::decode(se);
  EXPECT_EQ(ns::prediction_from_json(ns::prediction_to_json(se),
                                     ns::Task::seq_edit),
            se);

  ns::Prediction co;
  co.task = ns::Task::coref;
  co.link_probs[{ns::Span{0, 0, 1}, ns::Span{0, 3, 4}}] = 0.7;
  ns::decode(co);
  EXPECT_EQ(ns::prediction_from_json(ns::prediction_to_json(co),
                                     ns::Task::coref),
            co);

  ns::Prediction qa;
  qa.task = ns::Task::qa;
  qa.answer_span = ns::Span{1, 2, 4};
  qa.answer_confidence = 0.65;
  EXPECT_EQ(ns::prediction_from_json(ns::prediction_to_json(qa), ns::Task::qa),
            qa);
}

TEST(ValidatePrediction, RejectsMalformedOutputs) {
  ns::Prediction p;
  p.task = ns::Task::classify;
  p.label_dist = {0.5, 0.2};
  EXPECT_THROW(ns::validate_prediction(p), ns::DataError);

  ns::Prediction co;
  co.task = ns::Task::coref;
  co.link_probs[{ns::Span{0, 3, 4}, ns::Span{0, 0, 1}}] = 0.7;
  EXPECT_THROW(ns::validate_prediction(co), ns::DataError);

  ns::Prediction qa;
  qa.task = ns::Task::qa;
  qa.answer_confidence = 1.5;
  EXPECT_THROW(ns::validate_prediction(qa), ns::DataError);
}

TEST(TableOracle, FirstMatchingRuleWins) {
  auto t = ns::TableOracle::from_json(
      ns::Json{{"task", "classify"},
               {"rules",
                {ns::Json{{"pattern", {"Kim"}}, {"label_dist", {0.9, 0.1}}},
                 ns::Json{{"pattern", {"Kim"}}, {"label_dist", {0.1, 0.9}}}}},
               {"default", {{"label_dist", {0.5, 0.5}}}}});
  auto inst = classify_instance("a", 0, {"Kim", "slept"}, 0, 1);
  EXPECT_EQ(t.predict(inst).label_dist, (std::vector<double>{0.9, 0.1}));
  auto other = classify_instance("b", 0, {"Bo", "slept"}, 0, 1);
  EXPECT_EQ(t.predict(other).label_dist, (std::vector<double>{0.5, 0.5}));
}

TEST(TableOracle, PatternsMatchWithinOneSegmentOnly) {
  auto t = ns::TableOracle::from_json(
      ns::Json{{"task", "classify"},
               {"rules",
                {ns::Json{{"pattern", {"left", "She"}},
                          {"label_dist", {0.9, 0.1}}},
                 ns::Json{{"pattern", {"She", "waved"}},
                          {"label_dist", {0.2, 0.8}}}}},
               {"default", {{"label_dist", {0.5, 0.5}}}}});
  ns::AnnotatedInstance inst;
  inst.id = "a";
  inst.task = ns::Task::classify;
  inst.segments = {{"Kim", "left"}, {"She", "waved"}};
  ns::EntityMention m;
  m.name_id = "n1";
  m.entity_type = "person";
  m.gender = ns::Gender::any;
  m.spans = {{ns::Span{0, 0, 1}, ns::NamePart::full}};
  inst.mentions = {m};
  inst.gold.class_label = 0;
  ns::validate_instance(inst);
  // "left She" straddles the segment boundary, so the second rule fires.
  EXPECT_EQ(t.predict(inst).label_dist, (std::vector<double>{0.2, 0.8}));
}

TEST(TableOracle, ConstructionErrors) {
  EXPECT_THROW(ns::TableOracle::from_json(ns::Json{
                   {"task", "classify"},
                   {"rules", ns::Json::array()}}),
               ns::ParseError);
  EXPECT_THROW(
      ns::TableOracle::from_json(ns::Json{
          {"task", "classify"},
          {"rules",
           {ns::Json{{"pattern", ns::Json::array()},
                     {"label_dist", {1.0}}}}},
          {"default", {{"label_dist", {1.0}}}}}),
      ns::ParseError);
  EXPECT_THROW(ns::TableOracle::from_file("/nonexistent/oracle.json"),
               ns::ParseError);
}

TEST(TableOracle, MalformedDistributionFailsAtPredictTime) {
  auto t = ns::TableOracle::from_json(
      ns::Json{{"task", "classify"},
               {"default", {{"label_dist", {0.5, 0.2}}}}});
  auto inst = classify_instance("a", 0, {"Kim", "slept"}, 0, 1);
  EXPECT_THROW(t.predict(inst), ns::DataError);
}

TEST(TableOracle, SeqEditAlphabetAndDistributions) {
  auto t = ns::TableOracle::from_json(ns::Json{
      {"task", "seq_edit"},
      {"rules",
       {ns::Json{{"pattern", {"Kim"}},
                 {"edits",
                  {ns::Json{{"trigger", "goed"},
                            {"effect", "went"},
                            {"prob", 0.8}},
                   ns::Json{{"trigger", "the"},
                            {"effect", "<del>"},
                            {"prob", 0.6}}}}}}},
      {"default",
       {{"edits",
         {ns::Json{{"trigger", "goed"}, {"effect", "ate"}, {"prob", 1.0}}}}}}});
  auto inst = seq_instance({"Kim", "goed", "to", "the", "shop"});
  auto p = t.predict(inst);
  EXPECT_EQ(p.alphabet, (std::vector<std::string>{
                            ns::kKeepSymbol, ns::kDeleteSymbol, "ate",
                            "went"}));
  ASSERT_EQ(p.token_dists.size(), 5u);
  EXPECT_EQ(p.token_dists[0], (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
  EXPECT_EQ(p.token_dists[1][3], 0.8);  // goed -> went
  EXPECT_NEAR(p.token_dists[1][0], 0.2, 1e-15);
  EXPECT_EQ(p.token_dists[3][1], 0.6);  // the -> <del>
  EXPECT_EQ(p.decoded_symbols,
            (std::vector<std::string>{ns::kKeepSymbol, "went", ns::kKeepSymbol,
                                      ns::kDeleteSymbol, ns::kKeepSymbol}));

  auto fallback = t.predict(seq_instance({"Bo", "goed", "home"}));
  EXPECT_EQ(fallback.decoded_symbols,
            (std::vector<std::string>{ns::kKeepSymbol, "ate",
                                      ns::kKeepSymbol}));
}

TEST(TableOracle, CorefAnchorsResolveToFirstOccurrence) {
  auto t = ns::TableOracle::from_json(ns::Json{
      {"task", "coref"},
      {"default",
       {{"links",
         {ns::Json{{"a", {"Ann"}}, {"b", {"She"}}, {"p", 0.8}},
          ns::Json{{"a", {"Bo"}}, {"b", {"Nobody"}}, {"p", 0.9}},
          ns::Json{{"a", {"Ann"}}, {"b", {"Ann"}}, {"p", 0.9}}}}}}});
  ns::AnnotatedInstance inst;
  inst.id = "c";
  inst.task = ns::Task::coref;
  inst.segments = {{"Ann", "met", "Bo"}, {"She", "smiled", "at", "Ann"}};
  ns::EntityMention m;
  m.name_id = "n1";
  m.entity_type = "person";
  m.gender = ns::Gender::female;
  m.spans = {{ns::Span{0, 0, 1}, ns::NamePart::full}};
  inst.mentions = {m};
  inst.gold.gold_clusters = {{ns::Span{0, 0, 1}, ns::Span{1, 0, 1}}};
  inst.gold.probed_cluster = 0;
  ns::validate_instance(inst);
  auto p = t.predict(inst);
  ASSERT_EQ(p.link_probs.size(), 1u);
  auto key = std::make_pair(ns::Span{0, 0, 1}, ns::Span{1, 0, 1});
  ASSERT_TRUE(p.link_probs.count(key));
  EXPECT_EQ(p.link_probs.at(key), 0.8);
  ASSERT_EQ(p.decoded_clusters.size(), 1u);
}

TEST(TableOracle, QaAnswerResolvesOrComesBackEmpty) {
  auto t = ns::TableOracle::from_json(
      ns::Json{{"task", "qa"},
               {"rules",
                {ns::Json{{"pattern", {"depot"}},
                          {"answer", {"the", "depot"}},
                          {"confidence", 0.85}}}},
               {"default", {{"answer", {"nowhere"}}, {"confidence", 0.4}}}});
  ns::AnnotatedInstance inst;
  inst.id = "q";
  inst.task = ns::Task::qa;
  inst.segments = {{"Kim", "waited", "near", "the", "depot"}};
  ns::EntityMention m;
  m.name_id = "n1";
  m.entity_type = "person";
  m.gender = ns::Gender::any;
  m.spans = {{ns::Span{0, 0, 1}, ns::NamePart::full}};
  inst.mentions = {m};
  inst.gold.answer_spans = {ns::Span{0, 3, 5}};
  ns::validate_instance(inst);
  auto p = t.predict(inst);
  EXPECT_EQ(p.answer_span, (ns::Span{0, 3, 5}));
  EXPECT_EQ(p.answer_confidence, 0.85);

  inst.segments = {{"Kim", "waited", "outside"}};
  inst.gold.answer_spans = {ns::Span{0, 2, 3}};
  ns::validate_instance(inst);
  auto q = t.predict(inst);
  EXPECT_EQ(q.answer_span, (ns::Span{0, 0, 0}));  // "nowhere" is absent
  EXPECT_EQ(q.answer_confidence, 0.4);
}

TEST(TableOracle, DeterministicAcrossIdenticalConstructions) {
  ns::Json spec{{"task", "classify"},
                {"rules",
                 {ns::Json{{"pattern", {"Kim"}},
                           {"label_dist", {0.311, 0.689}}}}},
                {"default", {{"label_dist", {0.5, 0.5}}}}};
  auto t1 = ns::TableOracle::from_json(spec);
  auto t2 = ns::TableOracle::from_json(spec);
  EXPECT_EQ(t1.identity(), t2.identity());
  auto inst = classify_instance("a", 0, {"Kim", "slept"}, 0, 1);
  EXPECT_EQ(t1.predict(inst), t2.predict(inst));
}

TEST(BowClassifier, InterceptIsTheClassPrior) {
  std::vector<ns::AnnotatedInstance> data = {
      classify_instance("a", 1, {"Kim", "fine", "day"}, 0, 1),
      classify_instance("b", 1, {"Kim", "nice", "day"}, 0, 1),
      classify_instance("c", 1, {"Kim", "warm", "day"}, 0, 1),
      classify_instance("d", 0, {"Kim", "awful", "day"}, 0, 1)};
  auto m = ns::BowClassifier::train(data, {});
  auto oov = classify_instance("x", 0, {"Zed", "zzz", "yyy"}, 0, 1);
  auto p = m.predict(oov);
  ASSERT_EQ(p.label_dist.size(), 2u);
  EXPECT_NEAR(p.label_dist[0], 0.25, 1e-12);
  EXPECT_NEAR(p.label_dist[1], 0.75, 1e-12);
}

TEST(BowClassifier, LearnsSeparableVocabulary) {
  std::vector<ns::AnnotatedInstance> data;
  for (int i = 0; i < 4; ++i) {
    data.push_back(classify_instance("p" + std::to_string(i), 1,
                                     {"Kim", "good", "work"}, 0, 1));
    data.push_back(classify_instance("n" + std::to_string(i), 0,
                                     {"Kim", "bad", "work"}, 0, 1));
  }
  auto m = ns::BowClassifier::train(data, {});
  auto pos = m.predict(classify_instance("t1", 1, {"Bo", "good", "work"}, 0, 1));
  auto neg = m.predict(classify_instance("t2", 0, {"Bo", "bad", "work"}, 0, 1));
  EXPECT_EQ(pos.decoded_label, 1);
  EXPECT_EQ(neg.decoded_label, 0);
  EXPECT_GT(pos.label_dist[1], 0.9);
  EXPECT_GT(neg.label_dist[0], 0.9);
}

TEST(BowClassifier, TrainingIsDeterministic) {
  std::vector<ns::AnnotatedInstance> data = {
      classify_instance("a", 1, {"Kim", "good"}, 0, 1),
      classify_instance("b", 0, {"Kim", "bad"}, 0, 1)};
  auto m1 = ns::BowClassifier::train(data, {});
  auto m2 = ns::BowClassifier::train(data, {});
  EXPECT_EQ(m1.to_json().dump(), m2.to_json().dump());
  EXPECT_EQ(m1.identity(), m2.identity());
}

TEST(BowClassifier, TrainSpecResolvesDatasetNextToSpecFile) {
  fs::path dir = fs::temp_directory_path() / "nameshift_bow_test";
  fs::create_directories(dir);
  std::vector<ns::AnnotatedInstance> data = {
      classify_instance("a", 1, {"Kim", "good"}, 0, 1),
      classify_instance("b", 0, {"Kim", "bad"}, 0, 1)};
  ns::save_dataset(data, (dir / "train.jsonl").string());
  {
    std::ofstream out(dir / "spec.json");
    out << ns::Json{{"train",
                     {{"dataset", "train.jsonl"},
                      {"epochs", 50},
                      {"lr", 0.5},
                      {"l2", 0.0},
                      {"seed", 3}}}}
               .dump();
  }
  auto trained = ns::BowClassifier::from_file((dir / "spec.json").string());
  {
    std::ofstream out(dir / "model.json");
    out << trained.to_json().dump();
  }
  auto loaded = ns::BowClassifier::from_file((dir / "model.json").string());
  EXPECT_EQ(trained.identity(), loaded.identity());
  auto inst = classify_instance("t", 1, {"Bo", "good"}, 0, 1);
  EXPECT_EQ(trained.predict(inst), loaded.predict(inst));
  fs::remove_all(dir);
}

TEST(BowClassifier, ConstructionErrors) {
  std::vector<ns::AnnotatedInstance> one_class = {
      classify_instance("a", 1, {"Kim", "good"}, 0, 1)};
  EXPECT_THROW(ns::BowClassifier::train(one_class, {}), ns::ConfigError);
  EXPECT_THROW(ns::BowClassifier::from_json(ns::Json{
                   {"vocab", {"a"}},
                   {"bias", {0.0, 0.0}},
                   {"weights", {{0.0}}}}),
               ns::ParseError);
}

TEST(CachingOracle, MemoizesByTokenContent) {
  auto backend = std::make_shared<ns::TableOracle>(ns::TableOracle::from_json(
      ns::Json{{"task", "classify"},
               {"rules",
                {ns::Json{{"pattern", {"Kim"}}, {"label_dist", {0.9, 0.1}}}}},
               {"default", {{"label_dist", {0.5, 0.5}}}}}));
  ns::CachingOracle cached(backend);
  EXPECT_EQ(cached.task(), backend->task());
  EXPECT_EQ(cached.identity(), backend->identity());

  auto a = classify_instance("a", 0, {"Kim", "slept"}, 0, 1);
  auto same_text = classify_instance("a2", 1, {"Kim", "slept"}, 0, 1);
  auto b = classify_instance("b", 0, {"Bo", "slept"}, 0, 1);
  auto first = cached.predict_batch({a, same_text, b});
  EXPECT_EQ(cached.backend_calls(), 1u);
  EXPECT_EQ(cached.cache_size(), 2u);
  EXPECT_EQ(first[0], first[1]);
  EXPECT_EQ(first[0], backend->predict(a));

  auto second = cached.predict_batch({a, same_text, b});
  EXPECT_EQ(cached.backend_calls(), 1u);  // everything was a hit
  EXPECT_EQ(second, first);

  cached.predict(classify_instance("c", 0, {"Cy", "slept", "in"}, 0, 1));
  EXPECT_EQ(cached.backend_calls(), 2u);
  EXPECT_EQ(cached.cache_size(), 3u);
}

TEST(OracleSpec, ParsesKindAndParam) {
  auto t = ns::OracleSpec::parse("table:data/rules.json");
  EXPECT_EQ(t.kind, ns::OracleSpec::Kind::table);
  EXPECT_EQ(t.param, "data/rules.json");
  auto r = ns::OracleSpec::parse("remote:http://localhost:8080");
  EXPECT_EQ(r.kind, ns::OracleSpec::Kind::remote);
  EXPECT_EQ(r.param, "http://localhost:8080");
  EXPECT_THROW(ns::OracleSpec::parse("tablerules.json"), ns::ConfigError);
  EXPECT_THROW(ns::OracleSpec::parse("magic:x"), ns::ConfigError);
  EXPECT_THROW(ns::OracleSpec::parse("bow:"), ns::ConfigError);
}
