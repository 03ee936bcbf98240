#ifndef STYLESTRUCT_H
#define STYLESTRUCT_H

/* C interface to the structure/style generator pipeline.
 *
 * Every call returns an sts_status. On failure sts_last_error() holds a
 * message for the calling thread until its next failing call. Handles are
 * opaque and owned by the caller, who releases them with the matching
 * *_destroy function. Strings returned by the library stay valid while
 * the handle that produced them is alive. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define STS_API __declspec(dllexport)
#else
#define STS_API __attribute__((visibility("default")))
#endif

typedef enum sts_status {
    STS_OK = 0,
    STS_ERR_USAGE = 1,       /* bad argument, configuration or shape */
    STS_ERR_DATA = 2,        /* unreadable or malformed file, missing checkpoint */
    STS_ERR_DIVERGENCE = 3,  /* training halted by the divergence guard */
    STS_ERR_INTERRUPTED = 4, /* stop requested; a checkpoint was written */
    STS_ERR_INTERNAL = 5
} sts_status;

typedef struct sts_config sts_config;
typedef struct sts_generators sts_generators;
typedef struct sts_text sts_text;

STS_API const char* sts_last_error(void);
STS_API const char* sts_version(void);

/* ---- text results ---- */
STS_API const char* sts_text_data(const sts_text* t);
STS_API void sts_text_destroy(sts_text* t);

/* ---- configuration ---- */
STS_API sts_status sts_config_create(sts_config** out);
STS_API void sts_config_destroy(sts_config* c);
/* Reads `key = value` lines on top of the current values. */
STS_API sts_status sts_config_load(sts_config* c, const char* path);
STS_API sts_status sts_config_set(sts_config* c, const char* key, const char* value);
/* Canonical text of every key; `out_dir` is reported separately. */
STS_API sts_status sts_config_serialize(const sts_config* c, sts_text** out);
STS_API sts_status sts_config_out_dir(const sts_config* c, const char** out);

/* ---- training ---- */
typedef struct sts_train_result {
    uint64_t start_iteration;
    uint64_t end_iteration;
    uint64_t total_iterations;
    int complete;
    int early_stopped;
    double test_accuracy; /* fcn phase; negative otherwise */
} sts_train_result;

/* Runs one phase ("fcn", "structure", "style", "joint"). `budget` caps the
 * iterations executed in this call; 0 means no cap. */
STS_API sts_status sts_train(const sts_config* c, const char* phase, uint64_t budget, sts_train_result* out);

/* Asks a running sts_train to checkpoint and return STS_ERR_INTERRUPTED.
 * Only sets an atomic flag, so it is safe inside a signal handler. */
STS_API void sts_request_stop(void);
STS_API void sts_clear_stop(void);

/* ---- generation ---- */

/* `path` is a checkpoint file or a training output directory. */
STS_API sts_status sts_generators_load(const char* path, sts_generators** out);
STS_API void sts_generators_destroy(sts_generators* g);
STS_API const char* sts_generators_checkpoint_id(const sts_generators* g);
STS_API int sts_generators_scale_divisor(const sts_generators* g);

/* Writes `count` samples; count 0 writes nothing. */
STS_API sts_status sts_sample(sts_generators* g, uint64_t seed, int64_t count, const char* out_dir);

typedef enum sts_walk_mode { STS_WALK_STRUCTURE = 0, STS_WALK_STYLE = 1 } sts_walk_mode;

typedef struct sts_walk_options {
    sts_walk_mode mode;
    uint64_t seed;
    int dims;   /* default 10 */
    double step; /* default 0.1 */
    int frames; /* default 7 */
} sts_walk_options;

STS_API void sts_walk_defaults(sts_walk_options* o);
/* `summary` (optional) receives the walked dims and clamped frames. */
STS_API sts_status sts_walk(sts_generators* g, const sts_walk_options* o, const char* out_dir, sts_text** summary);

typedef struct sts_render_options {
    const char* normals_file; /* PPM normal image, or NULL */
    int use_scene_seed;
    uint64_t scene_seed;
    uint64_t seed;
    int64_t count;
    int strict;
} sts_render_options;

STS_API void sts_render_defaults(sts_render_options* o);
/* `warnings` (optional) receives one line per repaired input problem. */
STS_API sts_status sts_render(sts_generators* g, const sts_render_options* o, const char* out_dir,
                              sts_text** warnings);

/* Writes the ground-truth normals of a box-world scene at the image side of
 * scale 1/divisor. */
STS_API sts_status sts_export_scene_normals(uint64_t scene_seed, int scale_divisor, const char* path);

/* ---- diagnostics ---- */
STS_API sts_status sts_audit(int scale_divisor, sts_text** out);

/* Scope "ops", "networks" or "all". `passed` receives 1 when every case
 * is within tolerance. `corrupt_fixture` adds a case with a wrong backward. */
STS_API sts_status sts_gradcheck(const char* scope, int corrupt_fixture, int* passed, sts_text** report);
STS_API sts_status sts_gradcheck_cases(const char* scope, sts_text** names);

#ifdef __cplusplus
}
#endif

#endif
