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

/* C interface to the advmoco library. Every function returns an amc_status;
 * on failure amc_last_error() describes the problem for the calling thread. */
#ifndef ADVMOCO_ADVMOCO_H_
#define ADVMOCO_ADVMOCO_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ADVMOCO_BUILDING_LIBRARY)
#define AMC_API __attribute__((visibility("default")))
#else
#define AMC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amc_status {
  AMC_OK = 0,
  AMC_ERR_INVALID_ARGUMENT = 1,
  AMC_ERR_USAGE = 2,
  AMC_ERR_NAN = 3,
  AMC_ERR_IO = 4,
  AMC_ERR_INTERNAL = 5
} amc_status;

typedef struct amc_options amc_options;
typedef struct amc_config amc_config;
typedef struct amc_queue amc_queue;

AMC_API const char* amc_last_error(void);
AMC_API const char* amc_version(void);
/* Frees strings returned through char** out-parameters. */
AMC_API void amc_string_free(char* s);

/* Command options: the flags shared by every subcommand. */
AMC_API amc_status amc_options_create(amc_options** out);
AMC_API void amc_options_destroy(amc_options* options);
AMC_API amc_status amc_options_set_config_path(amc_options* options, const char* path);
AMC_API amc_status amc_options_set_seed(amc_options* options, uint64_t seed);
AMC_API amc_status amc_options_set_out(amc_options* options, const char* dir);
AMC_API amc_status amc_options_set_resume(amc_options* options, int resume);
AMC_API amc_status amc_options_set_force(amc_options* options, int force);
/* "key=value" with a dotted key, e.g. "train.drop_count=8". */
AMC_API amc_status amc_options_add_override(amc_options* options, const char* key_value);

/* Runs synth, pretrain, probe, eval, diagnose, ablate or plot. Progress goes
 * to standard output. */
AMC_API amc_status amc_run_command(const char* name, const amc_options* options);
/* Fully resolved config as YAML. */
AMC_API amc_status amc_print_config(const amc_options* options, char** out_text);

/* Configs. */
AMC_API amc_status amc_config_create_default(amc_config** out);
AMC_API amc_status amc_config_load(const char* path, amc_config** out);
AMC_API void amc_config_destroy(amc_config* config);
AMC_API amc_status amc_config_set(amc_config* config, const char* key, const char* value);
AMC_API amc_status amc_config_dump(const amc_config* config, char** out_text);
AMC_API amc_status amc_config_hash(const amc_config* config, char** out_hex);

/* Numerics. */
AMC_API amc_status amc_decay_weight(double t, int64_t position, double* out);
AMC_API amc_status amc_entropy(const double* p, size_t n, double* out);
/* Row-major inputs: queries and positives are batch x dim, negatives count x
 * dim, weights has count entries. grad_queries (batch x dim) may be NULL. */
AMC_API amc_status amc_decayed_infonce(const double* queries, const double* positives, size_t batch,
                                       const double* negatives, const double* weights, size_t count, size_t dim,
                                       double temperature, double* out_loss, double* grad_queries);

/* Decayed key queue. Position 0 holds the newest key. */
AMC_API amc_status amc_queue_create(int capacity, int dim, double decay, amc_queue** out);
AMC_API void amc_queue_destroy(amc_queue* queue);
AMC_API amc_status amc_queue_enqueue(amc_queue* queue, const double* keys, size_t rows, int64_t step);
AMC_API amc_status amc_queue_size(const amc_queue* queue, int* out);
/* keys: size x dim row-major, weights: size entries; either may be NULL. */
AMC_API amc_status amc_queue_snapshot(const amc_queue* queue, double* keys, double* weights);

#ifdef __cplusplus
}
#endif

#endif /* ADVMOCO_ADVMOCO_H_ */
