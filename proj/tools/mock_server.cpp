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

// Serves a table oracle over HTTP for exercising the remote oracle path.
// Prints the base URL on stdout once the socket is bound.

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "nameshift/mock_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Serve a table oracle over HTTP"};
  std::string table;
  int port = 0;
  int fail_every_n = 0;
  app.add_option("--table", table, "table oracle JSON file")->required();
  app.add_option("--port", port, "port to bind (default: any free port)");
  app.add_option("--fail-every-n", fail_every_n,
                 "return 503 on every n-th request (0 disables)");
  CLI11_PARSE(app, argc, argv);

  try {
    nameshift::MockPredictServer server(
        nameshift::TableOracle::from_file(table), fail_every_n);
    server.start(port);
    std::cout << server.url() << std::endl;
    while (true) std::this_thread::sleep_for(std::chrono::seconds(3600));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
