// Copyright 2026 The bdrne Authors.
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

// Command-line driver for pricing studies.
//
//   bdrne run <config.json> [--out DIR] [--only-variant NAME] [--only-N N]
//   bdrne verify <result-dir>
//
// Exit status: 0 on success, 2 when a row did not converge (run) or failed
// re-certification (verify), 1 on configuration or I/O errors.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bdrne/experiment.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_override,
                const std::string& only_variant, std::optional<std::size_t> only_n) {
  using namespace bdrne::experiment;
  ExperimentConfig cfg = load_config(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  StudyFilter filter;
  if (!only_variant.empty()) {
    (void)row_kind_from(only_variant);
    filter.only_variant = only_variant;
  }
  filter.only_N = only_n;

  const auto rows = run_study(cfg, filter);
  emit_results(rows, cfg, cfg.out_dir);

  int code = 0;
  for (const auto& r : rows) {
    std::cout << to_string(r.key.kind) << " eps=" << r.key.eps << " N=" << r.key.N << " p=(";
    for (std::size_t j = 0; j < r.prices.size(); ++j) std::cout << (j ? ", " : "") << r.prices[j];
    std::cout << ") gap=" << r.gap << " iters=" << r.iterations << " " << r.status
              << (r.interval_flag ? " [interval re-validation failed]" : "") << "\n";
    if (r.status != "converged") code = 2;
  }
  std::cout << rows.size() << " rows written to " << cfg.out_dir << "\n";
  return code;
}

int verify_command(const std::string& dir) {
  using namespace bdrne::experiment;
  const auto report = verify_results(dir);
  int code = 0;
  for (const auto& v : report) {
    std::cout << (v.certified ? "PASS " : "FAIL ") << to_string(v.row.key.kind)
              << " eps=" << v.row.key.eps << " N=" << v.row.key.N
              << " gap=" << v.recomputed_gap << "\n";
    if (!v.certified) code = 2;
  }
  std::cout << report.size() << " rows checked\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian distributionally robust Nash equilibria for MNL price competition"};
  app.require_subcommand(1);

  std::string config_path, out_dir, only_variant, verify_dir;
  std::optional<std::size_t> only_n;
  auto* run = app.add_subcommand("run", "solve every variant of a study and write results");
  run->add_option("config", config_path, "study configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--only-variant", only_variant,
                  "bdrne | bane | drne_empirical | empirical_ne | true_empirical | true_plugin");
  run->add_option("--only-N", only_n, "restrict the sample-size sweep to one N");

  auto* verify = app.add_subcommand("verify", "re-certify the equilibria in a result directory");
  verify->add_option("dir", verify_dir, "directory holding results.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return run_command(config_path, out_dir, only_variant, only_n);
    return verify_command(verify_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
