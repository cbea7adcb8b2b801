/* C API for the vascl library: neighborhood-guided contrastive training on
 * embedding data, with evaluation and representation-space analysis.
 *
 * All functions return a vascl_status; on failure a human-readable message
 * is available through vascl_last_error() (thread-local). Objects returned
 * through out-parameters are owned by the caller and released with the
 * matching _close/_free function.
 */
#ifndef VASCL_H
#define VASCL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vascl_status {
    VASCL_OK = 0,
    VASCL_ERR_CONFIG = 2,  /* invalid configuration / arguments */
    VASCL_ERR_DATA = 3,    /* unreadable or malformed data/checkpoint */
    VASCL_ERR_NUMERIC = 4  /* numerical failure (non-finite values, ...) */
} vascl_status;

typedef struct vascl_checkpoint vascl_checkpoint; /* opaque trained model */
typedef struct vascl_dataset vascl_dataset;       /* opaque embedding dataset */

const char* vascl_version(void);

/* Message describing the most recent failure on this thread ("" if none). */
const char* vascl_last_error(void);

/* Runs a full training job from a JSON config file, writing metrics.jsonl,
 * best.ckpt, final.ckpt and the resolved config into out_dir. */
vascl_status vascl_train(const char* config_path, const char* out_dir);

vascl_status vascl_checkpoint_open(const char* path, vascl_checkpoint** out);
void vascl_checkpoint_close(vascl_checkpoint* ckpt);

/* Loads either embedding file format (text records or VEMB binary). */
vascl_status vascl_dataset_open(const char* path, vascl_dataset** out);
void vascl_dataset_close(vascl_dataset* dataset);

int64_t vascl_dataset_size(const vascl_dataset* dataset);
int64_t vascl_dataset_dim(const vascl_dataset* dataset);
int vascl_dataset_has_labels(const vascl_dataset* dataset);

/* tasks: comma-separated subset of spearman,clustering,probe,purity,triples.
 * pairs_path may be NULL (required only for the spearman task). The result
 * is a JSON document; free it with vascl_string_free. */
vascl_status vascl_eval(const vascl_checkpoint* ckpt, const vascl_dataset* dataset,
                        const char* tasks, const char* pairs_path, uint64_t seed,
                        char** out_json);

/* Side-by-side representation comparison of two checkpoints on one dataset.
 * out_json and out_csv each receive an allocated report (either may be NULL
 * to skip that rendering). */
vascl_status vascl_analyze(const vascl_checkpoint* a, const vascl_checkpoint* b,
                           const vascl_dataset* dataset, uint64_t seed, char** out_json,
                           char** out_csv);

void vascl_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* VASCL_H */
