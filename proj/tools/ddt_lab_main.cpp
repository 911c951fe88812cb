// Copyright 2026 The ddt-lab Authors
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

// ddt-lab command line: runs scenarios through the C interface.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ddtlab/ddtlab.h"

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kInternal = 4 };

int exit_code(ddt_status st) {
  switch (st) {
    case DDT_OK:
      return kOk;
    case DDT_ERR_CONFIG:
      return kConfig;
    case DDT_ERR_IO:
      return kIo;
    default:
      return kInternal;
  }
}

int report(ddt_status st) {
  std::cerr << "ddt-lab: " << ddt_last_error() << "\n";
  return exit_code(st);
}

struct ScenarioHandle {
  ddt_scenario* ptr = nullptr;
  ~ScenarioHandle() { ddt_scenario_free(ptr); }
};

struct BatchHandle {
  ddt_batch* ptr = nullptr;
  ~BatchHandle() { ddt_batch_free(ptr); }
};

// A path that exists is loaded from disk; otherwise a reference scenario
// with that name is used.
ddt_status open_scenario(const std::string& arg, ScenarioHandle& h) {
  std::error_code ec;
  if (std::filesystem::exists(arg, ec)) return ddt_scenario_load(arg.c_str(), &h.ptr);
  for (size_t i = 0; i < ddt_reference_count(); ++i) {
    if (arg == ddt_reference_name(i)) return ddt_scenario_reference(arg.c_str(), &h.ptr);
  }
  return ddt_scenario_load(arg.c_str(), &h.ptr);
}

std::string take(char* s) {
  std::string out = s == nullptr ? std::string() : std::string(s);
  ddt_string_free(s);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-lock / DDT man-in-the-middle simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ddt_version()));

  std::string scenario_arg;
  std::uint64_t runs = 1;
  std::optional<std::uint64_t> seed;
  std::string trace_path;
  std::string summary_path;
  std::string format = "json";

  auto* run = app.add_subcommand("run", "Run a scenario for one or more seeded runs");
  run->add_option("--scenario", scenario_arg, "Scenario file or reference name")->required();
  run->add_option("--runs", runs, "Number of runs")->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1000000}));
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--trace", trace_path, "Write the JSONL trace here");
  run->add_option("--summary", summary_path, "Write the summary here instead of stdout");
  run->add_option("--format", format, "Summary format")->check(CLI::IsMember({"json", "text"}));

  auto* scenarios = app.add_subcommand("scenarios", "Reference scenarios");
  scenarios->require_subcommand(1);
  auto* list = scenarios->add_subcommand("list", "List the shipped reference scenarios");

  auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
  validate->add_option("--scenario", scenario_arg, "Scenario file or reference name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  if (list->parsed()) {
    for (size_t i = 0; i < ddt_reference_count(); ++i) {
      ScenarioHandle h;
      std::string desc;
      if (ddt_scenario_reference(ddt_reference_name(i), &h.ptr) == DDT_OK) {
        char* canon = nullptr;
        // The description is the second field of the canonical form.
        if (ddt_scenario_canonical_json(h.ptr, &canon) == DDT_OK) {
          std::string text = take(canon);
          auto key = text.find("\"description\": \"");
          if (key != std::string::npos) {
            auto start = key + 16;
            desc = text.substr(start, text.find('"', start) - start);
          }
        }
      }
      std::cout << ddt_reference_name(i) << "\t" << desc << "\n";
    }
    return kOk;
  }

  ScenarioHandle scenario;
  if (ddt_status st = open_scenario(scenario_arg, scenario); st != DDT_OK) return report(st);

  if (validate->parsed()) {
    std::cout << "ok " << take([&] {
      char* name = nullptr;
      ddt_scenario_name(scenario.ptr, &name);
      return name;
    }()) << "\n";
    return kOk;
  }

  if (seed) ddt_scenario_set_seed(scenario.ptr, *seed);
  BatchHandle batch;
  if (ddt_status st = ddt_run_batch(scenario.ptr, runs, &batch.ptr); st != DDT_OK) {
    return report(st);
  }
  const ddt_format fmt = format == "text" ? DDT_FORMAT_TEXT : DDT_FORMAT_JSON;
  if (!trace_path.empty()) {
    if (ddt_status st = ddt_batch_write_trace(batch.ptr, trace_path.c_str()); st != DDT_OK) {
      return report(st);
    }
  }
  if (!summary_path.empty()) {
    if (ddt_status st = ddt_batch_write_summary(batch.ptr, fmt, summary_path.c_str());
        st != DDT_OK) {
      return report(st);
    }
  } else {
    char* text = nullptr;
    if (ddt_status st = ddt_batch_summary(batch.ptr, fmt, &text); st != DDT_OK) return report(st);
    std::cout << take(text);
  }
  return kOk;
}
