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

#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <utility>

#include "httplib.h"
#include "nameshift/oracle.hpp"
#include "nameshift/prediction.hpp"

namespace nameshift {

// In-process implementation of the prediction protocol, answering from a
// table oracle. fail_every_n > 0 turns every n-th request into a 503 so
// clients can exercise their retry path deterministically.
class MockPredictServer {
 public:
  explicit MockPredictServer(TableOracle oracle, int fail_every_n = 0)
      : oracle_(std::move(oracle)), fail_every_n_(fail_every_n) {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
    server_.Post("/v1/predict", [this](const httplib::Request& req,
                                       httplib::Response& res) {
      handle_predict(req, res);
    });
  }

  ~MockPredictServer() { stop(); }

  // Binds 127.0.0.1 on a free port (or `port` if given) and serves on a
  // background thread. Returns the bound port.
  int start(int port = 0) {
    if (port == 0) {
      port_ = server_.bind_to_any_port("127.0.0.1");
    } else {
      server_.bind_to_port("127.0.0.1", port);
      port_ = port;
    }
    if (port_ <= 0) throw OracleError("mock server could not bind a port");
    thread_ = std::thread([this]() { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }
  size_t requests_served() const { return requests_.load(); }
  size_t failures_injected() const { return failures_.load(); }

 private:
  void handle_predict(const httplib::Request& req, httplib::Response& res) {
    size_t n = ++requests_;
    if (fail_every_n_ > 0 && n % static_cast<size_t>(fail_every_n_) == 0) {
      ++failures_;
      res.status = 503;
      res.set_content("injected transient failure", "text/plain");
      return;
    }
    Json request;
    try {
      request = Json::parse(req.body);
    } catch (const Json::exception& e) {
      res.status = 400;
      res.set_content(std::string("bad json: ") + e.what(), "text/plain");
      return;
    }
    try {
      Task task = task_from_string(request.at("task").get<std::string>());
      if (task != oracle_.task()) {
        res.status = 400;
        res.set_content("server answers " +
                            std::string(to_string(oracle_.task())) +
                            " requests only",
                        "text/plain");
        return;
      }
      std::vector<AnnotatedInstance> batch;
      for (const auto& ij : request.at("instances")) {
        AnnotatedInstance inst;
        inst.id = "remote";
        inst.task = task;
        inst.segments = ij.at("segments").get<std::vector<TokenSeq>>();
        batch.push_back(std::move(inst));
      }
      Json preds = Json::array();
      for (const auto& p : oracle_.predict_batch(batch))
        preds.push_back(prediction_to_json(p));
      res.set_content(Json{{"predictions", std::move(preds)}}.dump(),
                      "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(std::string("bad request: ") + e.what(), "text/plain");
    }
  }

  TableOracle oracle_;
  int fail_every_n_ = 0;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<size_t> requests_{0};
  std::atomic<size_t> failures_{0};
};

}  // namespace nameshift
