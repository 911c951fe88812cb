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

#include "ddtlab/ddtlab.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "ddtlab/harness.hpp"

struct ddt_scenario {
  ddtlab::harness::Scenario scenario;
};

struct ddt_batch {
  ddtlab::harness::BatchResult result;
};

namespace {

thread_local std::string g_last_error;

ddt_status set_error(ddt_status status, const std::string& what) {
  g_last_error = what;
  return status;
}

ddt_status status_of(ddtlab::Errc code) {
  switch (code) {
    case ddtlab::Errc::config:
      return DDT_ERR_CONFIG;
    case ddtlab::Errc::io:
      return DDT_ERR_IO;
    case ddtlab::Errc::invalid_parameter:
      return DDT_ERR_ARGUMENT;
    default:
      return DDT_ERR_INTERNAL;
  }
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
ddt_status guarded(Fn&& fn) {
  try {
    fn();
    return DDT_OK;
  } catch (const ddtlab::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(DDT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(DDT_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

ddt_status null_argument(const char* what) {
  return set_error(DDT_ERR_ARGUMENT, std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* ddt_version(void) { return "0.1.0"; }

const char* ddt_last_error(void) { return g_last_error.c_str(); }

void ddt_string_free(char* s) { std::free(s); }

ddt_status ddt_scenario_parse(const char* json, size_t len, ddt_scenario** out) {
  if (json == nullptr) return null_argument("json");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<ddt_scenario>();
    s->scenario = ddtlab::harness::parse_scenario(std::string_view(json, len));
    *out = s.release();
  });
}

ddt_status ddt_scenario_load(const char* path, ddt_scenario** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  std::ifstream f(path, std::ios::binary);
  if (!f) return set_error(DDT_ERR_IO, std::string("cannot read ") + path);
  std::ostringstream text;
  text << f.rdbuf();
  if (f.bad()) return set_error(DDT_ERR_IO, std::string("failed reading ") + path);
  const std::string body = text.str();
  return ddt_scenario_parse(body.data(), body.size(), out);
}

ddt_status ddt_scenario_reference(const char* name, ddt_scenario** out) {
  if (name == nullptr) return null_argument("name");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  const auto* ref = ddtlab::harness::find_reference(name);
  if (ref == nullptr) {
    return set_error(DDT_ERR_CONFIG, std::string("no reference scenario named ") + name);
  }
  return ddt_scenario_parse(ref->json.data(), ref->json.size(), out);
}

void ddt_scenario_free(ddt_scenario* s) { delete s; }

ddt_status ddt_scenario_set_seed(ddt_scenario* s, uint64_t seed) {
  if (s == nullptr) return null_argument("scenario");
  s->scenario.seed = seed;
  return DDT_OK;
}

ddt_status ddt_scenario_name(const ddt_scenario* s, char** out) {
  if (s == nullptr) return null_argument("scenario");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = dup_string(s->scenario.name); });
}

ddt_status ddt_scenario_canonical_json(const ddt_scenario* s, char** out) {
  if (s == nullptr) return null_argument("scenario");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = dup_string(ddtlab::harness::canonical_json(s->scenario)); });
}

ddt_status ddt_run_batch(const ddt_scenario* s, uint64_t runs, ddt_batch** out) {
  if (s == nullptr) return null_argument("scenario");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  if (runs == 0) return set_error(DDT_ERR_ARGUMENT, "runs must be >= 1");
  return guarded([&] {
    auto b = std::make_unique<ddt_batch>();
    b->result = ddtlab::harness::run_batch(s->scenario, runs);
    *out = b.release();
  });
}

void ddt_batch_free(ddt_batch* b) { delete b; }

ddt_status ddt_batch_summary(const ddt_batch* b, ddt_format format, char** out) {
  if (b == nullptr) return null_argument("batch");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    const auto& sum = b->result.summary;
    *out = dup_string(format == DDT_FORMAT_TEXT ? ddtlab::harness::summary_text(sum)
                                                : ddtlab::harness::summary_json(sum));
  });
}

ddt_status ddt_batch_trace_jsonl(const ddt_batch* b, char** out) {
  if (b == nullptr) return null_argument("batch");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = dup_string(ddtlab::harness::traces_jsonl(b->result.traces)); });
}

ddt_status ddt_batch_write_summary(const ddt_batch* b, ddt_format format, const char* path) {
  if (b == nullptr) return null_argument("batch");
  if (path == nullptr) return null_argument("path");
  return guarded([&] {
    const auto& sum = b->result.summary;
    ddtlab::harness::emit(format == DDT_FORMAT_TEXT ? ddtlab::harness::summary_text(sum)
                                                    : ddtlab::harness::summary_json(sum),
                          path);
  });
}

ddt_status ddt_batch_write_trace(const ddt_batch* b, const char* path) {
  if (b == nullptr) return null_argument("batch");
  if (path == nullptr) return null_argument("path");
  return guarded(
      [&] { ddtlab::harness::emit(ddtlab::harness::traces_jsonl(b->result.traces), path); });
}

uint64_t ddt_batch_completions(const ddt_batch* b) {
  return b == nullptr ? 0 : b->result.summary.completions;
}

uint64_t ddt_batch_aborts(const ddt_batch* b) {
  return b == nullptr ? 0 : b->result.summary.abort_count();
}

size_t ddt_reference_count(void) { return ddtlab::harness::reference_scenarios().size(); }

const char* ddt_reference_name(size_t index) {
  const auto& all = ddtlab::harness::reference_scenarios();
  return index < all.size() ? all[index].name.c_str() : nullptr;
}

const char* ddt_reference_json(size_t index) {
  const auto& all = ddtlab::harness::reference_scenarios();
  return index < all.size() ? all[index].json.c_str() : nullptr;
}

}  // extern "C"
