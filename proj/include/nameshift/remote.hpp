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

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "nameshift/error.hpp"
#include "nameshift/oracle.hpp"
#include "nameshift/prediction.hpp"

namespace nameshift {

// HTTP client for the prediction protocol:
//   POST /v1/predict
//   request  {"task": ..., "instances": [{"segments": [[tok, ...], ...]}]}
//   response {"predictions": [...]}        (status 200 only on success)
// Batches are capped at batch_size instances per call; non-200 answers and
// transport errors are retried with exponential backoff. One connection is
// shared, serialized by a mutex.
struct RemoteOptions {
  size_t batch_size = 16;
  int retries = 4;  // attempts beyond the first
  int backoff_ms = 50;
  int timeout_s = 10;
};

class RemoteOracle : public Oracle {
 public:
  using Options = RemoteOptions;

  RemoteOracle(std::string url, Task task, Options options = Options())
      : url_(std::move(url)), task_(task), options_(options),
        client_(url_.c_str()) {
    client_.set_connection_timeout(options_.timeout_s, 0);
    client_.set_read_timeout(options_.timeout_s, 0);
    client_.set_keep_alive(true);
  }

  Task task() const override { return task_; }
  std::string identity() const override { return "remote:" + url_; }

  std::vector<Prediction> predict_batch(
      const std::vector<AnnotatedInstance>& batch) override {
    std::vector<Prediction> out;
    out.reserve(batch.size());
    for (size_t begin = 0; begin < batch.size();
         begin += options_.batch_size) {
      size_t end = std::min(batch.size(), begin + options_.batch_size);
      Json request;
      request["task"] = to_string(task_);
      Json instances = Json::array();
      for (size_t i = begin; i < end; ++i)
        instances.push_back(Json{{"segments", batch[i].segments}});
      request["instances"] = std::move(instances);

      Json response = post_with_retries(request);
      const Json& preds = response.at("predictions");
      if (preds.size() != end - begin)
        throw OracleError("remote oracle returned " +
                              std::to_string(preds.size()) +
                              " predictions for " +
                              std::to_string(end - begin) + " instances",
                          /*partial_results=*/true);
      for (const auto& pj : preds) out.push_back(prediction_from_json(pj, task_));
    }
    return out;
  }

 private:
  Json post_with_retries(const Json& request) {
    std::string body = request.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(
            options_.backoff_ms * (1 << (attempt - 1))));
      httplib::Result res;
      {
        std::lock_guard<std::mutex> lock(mu_);
        res = client_.Post("/v1/predict", body, "application/json");
      }
      if (!res) {
        last_error = "transport error " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      try {
        return Json::parse(res->body);
      } catch (const Json::exception& e) {
        last_error = std::string("malformed response: ") + e.what();
      }
    }
    throw OracleError("remote oracle at " + url_ + " failed after " +
                          std::to_string(options_.retries + 1) +
                          " attempts (" + last_error + ")",
                      /*partial_results=*/true);
  }

  std::string url_;
  Task task_;
  Options options_;
  std::mutex mu_;
  httplib::Client client_;
};

}  // namespace nameshift
