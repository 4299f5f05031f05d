// Copyright 2026 The latentsplit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Writes a synthetic blob dataset, for CLI tests and manual experiments.

#include <string>

#include "CLI11.hpp"
#include "latentsplit/io.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  latentsplit::testing::BlobSpec spec;
  std::string out;
  std::string format = "jsonl";
  CLI::App app{"synthetic blob dataset"};
  app.add_option("-o,--output", out)->required();
  app.add_option("--format", format);
  app.add_option("-n", spec.n);
  app.add_option("-d,--dim", spec.dim);
  app.add_option("--blobs", spec.blobs);
  app.add_option("--classes", spec.classes);
  app.add_option("--spread", spec.spread);
  app.add_option("--seed", spec.seed);
  app.add_flag("--text", spec.with_text);
  app.add_flag("--metadata", spec.with_metadata);
  CLI11_PARSE(app, argc, argv);
  latentsplit::write_dataset(latentsplit::testing::make_blobs(spec), out,
                             latentsplit::parse_dataset_format(format));
  return 0;
}
