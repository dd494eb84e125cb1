// Copyright 2026 The advmoco Authors.
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

#include "advmoco/advmoco.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "advmoco/experiment.hpp"
#include "advmoco/losses.hpp"
#include "advmoco/memqueue.hpp"

struct amc_options {
  advmoco::CommandOptions value;
};

struct amc_config {
  advmoco::ExperimentConfig value;
};

struct amc_queue {
  advmoco::DecayedQueue value;
};

namespace {

thread_local std::string g_last_error;

amc_status fail(amc_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `fn`, mapping exceptions to status codes.
template <typename Fn>
amc_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return AMC_OK;
  } catch (const advmoco::UsageError& e) {
    return fail(AMC_ERR_USAGE, e.what());
  } catch (const advmoco::NanLossError& e) {
    return fail(AMC_ERR_NAN, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(AMC_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(AMC_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(AMC_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(AMC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AMC_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define AMC_REQUIRE(ptr) \
  if (!(ptr)) return fail(AMC_ERR_INVALID_ARGUMENT, #ptr " is NULL")

}  // namespace

extern "C" {

const char* amc_last_error(void) { return g_last_error.c_str(); }
const char* amc_version(void) { return "0.1.0"; }
void amc_string_free(char* s) { std::free(s); }

amc_status amc_options_create(amc_options** out) {
  AMC_REQUIRE(out);
  return guarded([&] { *out = new amc_options{}; });
}
void amc_options_destroy(amc_options* options) { delete options; }

amc_status amc_options_set_config_path(amc_options* o, const char* path) {
  AMC_REQUIRE(o);
  AMC_REQUIRE(path);
  o->value.config_path = path;
  return AMC_OK;
}
amc_status amc_options_set_seed(amc_options* o, uint64_t seed) {
  AMC_REQUIRE(o);
  o->value.seed = seed;
  return AMC_OK;
}
amc_status amc_options_set_out(amc_options* o, const char* dir) {
  AMC_REQUIRE(o);
  AMC_REQUIRE(dir);
  o->value.out = dir;
  return AMC_OK;
}
amc_status amc_options_set_resume(amc_options* o, int resume) {
  AMC_REQUIRE(o);
  o->value.resume = resume != 0;
  return AMC_OK;
}
amc_status amc_options_set_force(amc_options* o, int force) {
  AMC_REQUIRE(o);
  o->value.force = force != 0;
  return AMC_OK;
}
amc_status amc_options_add_override(amc_options* o, const char* kv) {
  AMC_REQUIRE(o);
  AMC_REQUIRE(kv);
  o->value.overrides.emplace_back(kv);
  return AMC_OK;
}

amc_status amc_run_command(const char* name, const amc_options* o) {
  AMC_REQUIRE(name);
  AMC_REQUIRE(o);
  using Command = void (*)(const advmoco::CommandOptions&, std::ostream&);
  static const std::map<std::string, Command> commands{
      {"synth", advmoco::cmd_synth},       {"pretrain", advmoco::cmd_pretrain}, {"probe", advmoco::cmd_probe},
      {"eval", advmoco::cmd_eval},         {"diagnose", advmoco::cmd_diagnose}, {"ablate", advmoco::cmd_ablate},
      {"plot", advmoco::cmd_plot}};
  const auto it = commands.find(name);
  if (it == commands.end()) return fail(AMC_ERR_USAGE, std::string("unknown command: ") + name);
  return guarded([&] { it->second(o->value, std::cout); });
}

amc_status amc_print_config(const amc_options* o, char** out_text) {
  AMC_REQUIRE(o);
  AMC_REQUIRE(out_text);
  return guarded([&] { *out_text = copy_string(advmoco::cmd_print_config(o->value)); });
}

amc_status amc_config_create_default(amc_config** out) {
  AMC_REQUIRE(out);
  return guarded([&] { *out = new amc_config{}; });
}
amc_status amc_config_load(const char* path, amc_config** out) {
  AMC_REQUIRE(path);
  AMC_REQUIRE(out);
  return guarded([&] { *out = new amc_config{advmoco::load_config(path)}; });
}
void amc_config_destroy(amc_config* c) { delete c; }
amc_status amc_config_set(amc_config* c, const char* key, const char* value) {
  AMC_REQUIRE(c);
  AMC_REQUIRE(key);
  AMC_REQUIRE(value);
  return guarded([&] {
    advmoco::ExperimentConfig next = c->value;
    advmoco::set_config_value(next, key, value);
    advmoco::validate(next);
    c->value = std::move(next);
  });
}
amc_status amc_config_dump(const amc_config* c, char** out_text) {
  AMC_REQUIRE(c);
  AMC_REQUIRE(out_text);
  return guarded([&] { *out_text = copy_string(advmoco::dump_config(c->value)); });
}
amc_status amc_config_hash(const amc_config* c, char** out_hex) {
  AMC_REQUIRE(c);
  AMC_REQUIRE(out_hex);
  return guarded([&] { *out_hex = copy_string(advmoco::config_hash(c->value)); });
}

amc_status amc_decay_weight(double t, int64_t position, double* out) {
  AMC_REQUIRE(out);
  return guarded([&] { *out = advmoco::decay_weight(t, position); });
}

amc_status amc_entropy(const double* p, size_t n, double* out) {
  AMC_REQUIRE(p);
  AMC_REQUIRE(out);
  return guarded([&] { *out = advmoco::entropy({p, n}); });
}

amc_status amc_decayed_infonce(const double* queries, const double* positives, size_t batch, const double* negatives,
                               const double* weights, size_t count, size_t dim, double temperature, double* out_loss,
                               double* grad_queries) {
  AMC_REQUIRE(queries);
  AMC_REQUIRE(positives);
  AMC_REQUIRE(negatives);
  AMC_REQUIRE(weights);
  AMC_REQUIRE(out_loss);
  return guarded([&] {
    using advmoco::Matrix;
    const auto b = static_cast<Eigen::Index>(batch), k = static_cast<Eigen::Index>(count),
               d = static_cast<Eigen::Index>(dim);
    const Matrix q = Eigen::Map<const Matrix>(queries, b, d);
    const Matrix p = Eigen::Map<const Matrix>(positives, b, d);
    const Matrix n = Eigen::Map<const Matrix>(negatives, k, d);
    const advmoco::Vector w = Eigen::Map<const advmoco::Vector>(weights, k);
    const auto r = advmoco::decayed_infonce({q, p, n, w, temperature});
    *out_loss = r.value;
    if (grad_queries) Eigen::Map<Matrix>(grad_queries, b, d) = r.grad_queries;
  });
}

amc_status amc_queue_create(int capacity, int dim, double decay, amc_queue** out) {
  AMC_REQUIRE(out);
  return guarded([&] { *out = new amc_queue{advmoco::DecayedQueue(capacity, dim, decay)}; });
}
void amc_queue_destroy(amc_queue* q) { delete q; }
amc_status amc_queue_enqueue(amc_queue* q, const double* keys, size_t rows, int64_t step) {
  AMC_REQUIRE(q);
  AMC_REQUIRE(keys);
  return guarded([&] {
    const advmoco::Matrix m = Eigen::Map<const advmoco::Matrix>(keys, static_cast<Eigen::Index>(rows), q->value.dim());
    q->value.enqueue_batch(m, step);
  });
}
amc_status amc_queue_size(const amc_queue* q, int* out) {
  AMC_REQUIRE(q);
  AMC_REQUIRE(out);
  *out = q->value.size();
  return AMC_OK;
}
amc_status amc_queue_snapshot(const amc_queue* q, double* keys, double* weights) {
  AMC_REQUIRE(q);
  return guarded([&] {
    if (q->value.empty()) return;
    const auto s = q->value.snapshot();
    if (keys) Eigen::Map<advmoco::Matrix>(keys, s.keys.rows(), s.keys.cols()) = s.keys;
    if (weights) Eigen::Map<advmoco::Vector>(weights, s.weights.size()) = s.weights;
  });
}

}  // extern "C"
