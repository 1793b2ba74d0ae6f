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
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nameshift/corpus.hpp"
#include "nameshift/error.hpp"
#include "nameshift/prediction.hpp"

namespace nameshift {

// Black-box prediction source. Implementations must be deterministic
// (identical segments give identical predictions) and safe to call from
// several threads at once.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual Task task() const = 0;
  virtual std::string identity() const = 0;
  virtual std::vector<Prediction> predict_batch(
      const std::vector<AnnotatedInstance>& batch) = 0;

  Prediction predict(const AnnotatedInstance& inst) {
    if (inst.task != task())
      throw ConfigError("instance '" + inst.id + "' has task " +
                        to_string(inst.task) + " but the oracle answers " +
                        to_string(task()));
    return predict_batch({inst}).front();
  }
};

using OraclePtr = std::shared_ptr<Oracle>;

namespace detail {

inline std::string segments_key(const std::vector<TokenSeq>& segments) {
  return Json(segments).dump();
}

inline std::string hash_hex(const std::string& s) {
  std::ostringstream os;
  os << std::hex << std::hash<std::string>{}(s);
  return os.str();
}

// First occurrence of `needle` across segments, in segment order.
inline std::optional<Span> find_subsequence(
    const std::vector<TokenSeq>& segments, const TokenSeq& needle) {
  if (needle.empty()) return std::nullopt;
  for (size_t seg = 0; seg < segments.size(); ++seg) {
    const TokenSeq& hay = segments[seg];
    if (needle.size() > hay.size()) continue;
    for (size_t i = 0; i + needle.size() <= hay.size(); ++i)
      if (std::equal(needle.begin(), needle.end(), hay.begin() + i))
        return Span{static_cast<int>(seg), static_cast<int>(i),
                    static_cast<int>(i + needle.size())};
  }
  return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Table oracle: a deterministic test double. Rules are tried in file order;
// the first rule whose pattern occurs as a contiguous token run in any
// segment supplies the response, the default otherwise.
//
// File format (whole-file JSON):
//   {"task": "classify",
//    "rules": [{"pattern": ["Novell"], "label_dist": [0.2, 0.8]}, ...],
//    "default": {"label_dist": [0.9, 0.1]}}
//
// Rule payloads by task:
//   classify: "label_dist": [p0, p1, ...]
//   seq_edit: "edits": [{"trigger": tok, "effect": sym, "prob": p}, ...]
//             every position whose token equals `trigger` gets p on `effect`
//             and 1-p on the keep symbol; untouched positions keep with 1.0
//   coref:    "links": [{"a": [tok,...], "b": [tok,...], "p": p}, ...]
//             anchors resolve to their first occurrence; links whose anchor
//             is absent are dropped
//   qa:       "answer": [tok,...], "confidence": p
//             resolved to its first occurrence; absent -> empty span
class TableOracle : public Oracle {
 public:
  struct SeqEdit {
    std::string trigger;
    std::string effect;
    double prob = 1.0;
  };
  struct Link {
    TokenSeq a;
    TokenSeq b;
    double p = 0.0;
  };
  struct Payload {
    std::vector<double> label_dist;
    std::vector<SeqEdit> edits;
    std::vector<Link> links;
    TokenSeq answer;
    double confidence = 0.0;
  };
  struct Rule {
    TokenSeq pattern;
    Payload payload;
  };

  static TableOracle from_json(const Json& j) {
    TableOracle t;
    t.task_ = task_from_string(j.at("task").get<std::string>());
    if (!j.contains("default"))
      throw ParseError("table oracle needs a \"default\" payload");
    t.default_ = parse_payload(j.at("default"), t.task_);
    for (const auto& rj : j.value("rules", Json::array())) {
      Rule r;
      r.pattern = rj.at("pattern").get<TokenSeq>();
      if (r.pattern.empty()) throw ParseError("table rule with empty pattern");
      r.payload = parse_payload(rj, t.task_);
      t.rules_.push_back(std::move(r));
    }
    t.identity_ = "table:" + detail::hash_hex(j.dump());
    t.build_alphabet();
    return t;
  }

  static TableOracle from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open table oracle file: " + path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    return from_json(j);
  }

  Task task() const override { return task_; }
  std::string identity() const override { return identity_; }

  std::vector<Prediction> predict_batch(
      const std::vector<AnnotatedInstance>& batch) override {
    std::vector<Prediction> out;
    out.reserve(batch.size());
    for (const auto& inst : batch) out.push_back(respond(inst));
    return out;
  }

 private:
  static Payload parse_payload(const Json& j, Task task) {
    Payload p;
    switch (task) {
      case Task::classify:
        p.label_dist = j.at("label_dist").get<std::vector<double>>();
        break;
      case Task::seq_edit:
        for (const auto& ej : j.value("edits", Json::array())) {
          SeqEdit e;
          e.trigger = ej.at("trigger").get<std::string>();
          e.effect = ej.at("effect").get<std::string>();
          e.prob = ej.value("prob", 1.0);
          p.edits.push_back(std::move(e));
        }
        break;
      case Task::coref:
        for (const auto& lj : j.value("links", Json::array())) {
          Link l;
          l.a = lj.at("a").get<TokenSeq>();
          l.b = lj.at("b").get<TokenSeq>();
          l.p = lj.at("p").get<double>();
          p.links.push_back(std::move(l));
        }
        break;
      case Task::qa:
        p.answer = j.value("answer", TokenSeq{});
        p.confidence = j.value("confidence", 0.0);
        break;
    }
    return p;
  }

  void build_alphabet() {
    if (task_ != Task::seq_edit) return;
    std::set<std::string> effects;
    for (const auto& e : default_.edits) effects.insert(e.effect);
    for (const auto& r : rules_)
      for (const auto& e : r.payload.edits) effects.insert(e.effect);
    alphabet_ = {kKeepSymbol, kDeleteSymbol};
    for (const auto& s : effects)
      if (s != kKeepSymbol && s != kDeleteSymbol) alphabet_.push_back(s);
  }

  const Payload& select(const AnnotatedInstance& inst) const {
    for (const auto& r : rules_)
      if (detail::find_subsequence(inst.segments, r.pattern)) return r.payload;
    return default_;
  }

  Prediction respond(const AnnotatedInstance& inst) const {
    const Payload& pay = select(inst);
    Prediction p;
    p.task = task_;
    switch (task_) {
      case Task::classify:
        p.label_dist = pay.label_dist;
        break;
      case Task::seq_edit: {
        p.alphabet = alphabet_;
        size_t keep = 0;
        std::vector<double> keep_dist(alphabet_.size(), 0.0);
        keep_dist[keep] = 1.0;
        for (const auto& seg : inst.segments) {
          for (const auto& tok : seg) {
            const SeqEdit* hit = nullptr;
            for (const auto& e : pay.edits)
              if (e.trigger == tok) {
                hit = &e;
                break;
              }
            if (!hit) {
              p.token_dists.push_back(keep_dist);
              continue;
            }
            std::vector<double> dist(alphabet_.size(), 0.0);
            size_t idx = static_cast<size_t>(
                std::find(alphabet_.begin(), alphabet_.end(), hit->effect) -
                alphabet_.begin());
            dist[idx] += hit->prob;
            dist[keep] += 1.0 - hit->prob;
            p.token_dists.push_back(std::move(dist));
          }
        }
        break;
      }
      case Task::coref:
        for (const auto& l : pay.links) {
          auto a = detail::find_subsequence(inst.segments, l.a);
          auto b = detail::find_subsequence(inst.segments, l.b);
          if (!a || !b || *a == *b) continue;
          p.link_probs[ordered_pair(*a, *b)] = l.p;
        }
        break;
      case Task::qa: {
        auto s = detail::find_subsequence(inst.segments, pay.answer);
        p.answer_span = s ? *s : Span{0, 0, 0};
        p.answer_confidence = pay.confidence;
        break;
      }
    }
    validate_prediction(p);
    decode(p);
    return p;
  }

  Task task_ = Task::classify;
  std::vector<Rule> rules_;
  Payload default_;
  std::vector<std::string> alphabet_;
  std::string identity_;
};

// ---------------------------------------------------------------------------
// Bag-of-words softmax classifier. The intercept is pinned to the empirical
// log class prior and never trained, so an input sharing no vocabulary with
// the training data scores exactly the prior. Training is full-batch
// gradient descent from zero weights, deterministic by construction.
class BowClassifier : public Oracle {
 public:
  struct HyperParams {
    int epochs = 300;
    double lr = 0.5;
    double l2 = 0.0;
    uint64_t seed = 1;
  };

  static BowClassifier train(const std::vector<AnnotatedInstance>& data,
                             const HyperParams& hp) {
    BowClassifier m;
    std::set<int> labels;
    std::set<std::string> vocab_set;
    for (const auto& inst : data) {
      if (inst.task != Task::classify)
        throw ConfigError("classifier training needs classify instances, '" +
                          inst.id + "' is " + to_string(inst.task));
      labels.insert(*inst.gold.class_label);
      for (const auto& seg : inst.segments)
        for (const auto& tok : seg) vocab_set.insert(tok);
    }
    if (labels.size() < 2)
      throw ConfigError("classifier training needs at least 2 classes, got " +
                        std::to_string(labels.size()));
    size_t k = static_cast<size_t>(*labels.rbegin()) + 1;
    m.vocab_.assign(vocab_set.begin(), vocab_set.end());
    std::map<std::string, size_t> vindex;
    for (size_t i = 0; i < m.vocab_.size(); ++i) vindex[m.vocab_[i]] = i;

    std::vector<std::vector<std::pair<size_t, double>>> feats(data.size());
    std::vector<size_t> y(data.size());
    std::vector<double> prior(k, 0.0);
    for (size_t i = 0; i < data.size(); ++i) {
      std::map<size_t, double> counts;
      for (const auto& seg : data[i].segments)
        for (const auto& tok : seg) counts[vindex[tok]] += 1.0;
      feats[i].assign(counts.begin(), counts.end());
      y[i] = static_cast<size_t>(*data[i].gold.class_label);
      prior[y[i]] += 1.0;
    }
    m.bias_.resize(k);
    for (size_t c = 0; c < k; ++c)
      m.bias_[c] = std::log(std::max(prior[c] / data.size(), 1e-12));
    m.weights_.assign(k, std::vector<double>(m.vocab_.size(), 0.0));

    double n = static_cast<double>(data.size());
    std::vector<std::vector<double>> grad(
        k, std::vector<double>(m.vocab_.size(), 0.0));
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
      for (auto& row : grad) std::fill(row.begin(), row.end(), 0.0);
      for (size_t i = 0; i < data.size(); ++i) {
        std::vector<double> p = m.class_probs(feats[i]);
        for (size_t c = 0; c < k; ++c) {
          double coef = p[c] - (y[i] == c ? 1.0 : 0.0);
          for (const auto& [f, v] : feats[i]) grad[c][f] += coef * v;
        }
      }
      for (size_t c = 0; c < k; ++c)
        for (size_t f = 0; f < m.vocab_.size(); ++f)
          m.weights_[c][f] -=
              hp.lr * (grad[c][f] / n + hp.l2 * m.weights_[c][f]);
    }
    m.refresh_identity();
    return m;
  }

  static BowClassifier from_json(const Json& j) {
    BowClassifier m;
    m.vocab_ = j.at("vocab").get<std::vector<std::string>>();
    m.bias_ = j.at("bias").get<std::vector<double>>();
    m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
    if (m.weights_.size() != m.bias_.size())
      throw ParseError("classifier weights and bias disagree on class count");
    for (const auto& row : m.weights_)
      if (row.size() != m.vocab_.size())
        throw ParseError("classifier weight row does not match vocabulary");
    m.refresh_identity();
    return m;
  }

  // Loads either a trained model or a training spec of the form
  // {"train": {"dataset": path, "epochs": ..., "lr": ..., "l2": ...,
  // "seed": ...}}; the dataset path is taken relative to `path`'s directory.
  static BowClassifier from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open classifier file: " + path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    if (!j.contains("train")) return from_json(j);
    const Json& t = j.at("train");
    std::filesystem::path dataset =
        std::filesystem::path(path).parent_path() /
        t.at("dataset").get<std::string>();
    HyperParams hp;
    hp.epochs = t.value("epochs", hp.epochs);
    hp.lr = t.value("lr", hp.lr);
    hp.l2 = t.value("l2", hp.l2);
    hp.seed = t.value("seed", hp.seed);
    return train(load_dataset(dataset.string()), hp);
  }

  Json to_json() const {
    return Json{
        {"vocab", vocab_}, {"bias", bias_}, {"weights", weights_}};
  }

  Task task() const override { return Task::classify; }
  std::string identity() const override { return identity_; }

  std::vector<Prediction> predict_batch(
      const std::vector<AnnotatedInstance>& batch) override {
    std::vector<Prediction> out;
    out.reserve(batch.size());
    for (const auto& inst : batch) {
      std::map<size_t, double> counts;
      for (const auto& seg : inst.segments)
        for (const auto& tok : seg) {
          auto it = std::lower_bound(vocab_.begin(), vocab_.end(), tok);
          if (it != vocab_.end() && *it == tok)
            counts[static_cast<size_t>(it - vocab_.begin())] += 1.0;
        }
      Prediction p;
      p.task = Task::classify;
      p.label_dist = class_probs({counts.begin(), counts.end()});
      decode(p);
      out.push_back(std::move(p));
    }
    return out;
  }

  size_t num_classes() const { return bias_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }

 private:
  std::vector<double> class_probs(
      const std::vector<std::pair<size_t, double>>& feats) const {
    std::vector<double> z = bias_;
    for (size_t c = 0; c < z.size(); ++c)
      for (const auto& [f, v] : feats) z[c] += weights_[c][f] * v;
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& x : z) {
      x = std::exp(x - zmax);
      sum += x;
    }
    for (double& x : z) x /= sum;
    return z;
  }

  void refresh_identity() { identity_ = "bow:" + detail::hash_hex(to_json().dump()); }

  std::vector<std::string> vocab_;  // sorted
  std::vector<double> bias_;
  std::vector<std::vector<double>> weights_;
  std::string identity_;
};

// ---------------------------------------------------------------------------
// Memoizing wrapper. Perturbations repeat the same rewritten text across
// draws, so predictions are cached by full token content. Values are
// deterministic, making concurrent last-write-wins races benign.
class CachingOracle : public Oracle {
 public:
  explicit CachingOracle(OraclePtr backend) : backend_(std::move(backend)) {}

  Task task() const override { return backend_->task(); }
  std::string identity() const override { return backend_->identity(); }

  std::vector<Prediction> predict_batch(
      const std::vector<AnnotatedInstance>& batch) override {
    std::vector<Prediction> out(batch.size());
    std::vector<size_t> misses;
    std::vector<std::string> keys(batch.size());
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (size_t i = 0; i < batch.size(); ++i) {
        keys[i] = cache_key(batch[i]);
        auto it = cache_.find(keys[i]);
        if (it != cache_.end())
          out[i] = it->second;
        else
          misses.push_back(i);
      }
    }
    if (!misses.empty()) {
      std::vector<AnnotatedInstance> ask;
      ask.reserve(misses.size());
      for (size_t i : misses) ask.push_back(batch[i]);
      std::vector<Prediction> fresh = backend_->predict_batch(ask);
      backend_calls_ += 1;
      std::lock_guard<std::mutex> lock(mu_);
      for (size_t k = 0; k < misses.size(); ++k) {
        out[misses[k]] = fresh[k];
        cache_[keys[misses[k]]] = std::move(fresh[k]);
      }
    }
    return out;
  }

  size_t backend_calls() const { return backend_calls_.load(); }
  size_t cache_size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
  }

 private:
  std::string cache_key(const AnnotatedInstance& inst) const {
    return backend_->identity() + '|' + to_string(inst.task) + '|' +
           detail::segments_key(inst.segments);
  }

  OraclePtr backend_;
  mutable std::mutex mu_;
  std::map<std::string, Prediction> cache_;
  std::atomic<size_t> backend_calls_{0};
};

// Parsed form of the CLI's --oracle argument: "table:<path>", "bow:<path>",
// or "remote:<url>".
struct OracleSpec {
  enum class Kind { table, bow, remote };
  Kind kind = Kind::table;
  std::string param;

  static OracleSpec parse(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
      throw ConfigError("oracle spec needs the form kind:<param>, got '" + s +
                        "'");
    std::string kind = s.substr(0, colon);
    OracleSpec spec;
    spec.param = s.substr(colon + 1);
    if (kind == "table")
      spec.kind = Kind::table;
    else if (kind == "bow")
      spec.kind = Kind::bow;
    else if (kind == "remote")
      spec.kind = Kind::remote;
    else
      throw ConfigError("unknown oracle kind '" + kind + "'");
    if (spec.param.empty())
      throw ConfigError("oracle spec '" + s + "' has an empty parameter");
    return spec;
  }
};

}  // namespace nameshift
