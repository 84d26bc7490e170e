#ifndef STRUTSKIT_H
#define STRUTSKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StrutskitStatus {
  STRUTSKIT_STATUS_OK = 0,
  STRUTSKIT_STATUS_NULL_ARGUMENT = 1,
  STRUTSKIT_STATUS_INVALID_UTF8 = 2,
  STRUTSKIT_STATUS_STARTUP_FAILED = 3,
  STRUTSKIT_STATUS_INVALID_CONFIG = 4,
  STRUTSKIT_STATUS_NOT_FOUND = 5,
  STRUTSKIT_STATUS_PANIC = 6,
} StrutskitStatus;

/*
 A loaded portal: config, templates, credential store and sessions.
 */
typedef struct StrutskitApp StrutskitApp;

/*
 A parsed framework config.
 */
typedef struct StrutskitConfig StrutskitConfig;

/*
 Bytes owned by the library.
 */
typedef struct StrutskitBuffer {
  uint8_t *data;
  size_t len;
} StrutskitBuffer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Loads and cross-checks the asset directories. On success `*out_app`
 receives a handle to free with [`strutskit_app_free`].

 # Safety
 The path arguments are NUL-terminated strings; `out_app` is writable.
 */
enum StrutskitStatus strutskit_app_open(const char *config_dir,
                                        const char *data_dir,
                                        const char *template_dir,
                                        struct StrutskitApp **out_app);

/*
 # Safety
 `app` is null or a handle from [`strutskit_app_open`] not yet freed.
 */
void strutskit_app_free(struct StrutskitApp *app);

/*
 Answers one raw HTTP/1.1 request. `*out_response` receives the full
 response (status line, headers, body). Malformed requests produce the
 matching 4xx response rather than an error status.

 # Safety
 `app` is a live handle; `request` points to `request_len` readable
 bytes; `out_response` is writable.
 */
enum StrutskitStatus strutskit_app_handle_request(const struct StrutskitApp *app,
                                                  const uint8_t *request,
                                                  size_t request_len,
                                                  struct StrutskitBuffer *out_response);

/*
 Runs the static checker. `*out_report` receives one finding per line
 followed by an `N errors, M warnings` summary; `*out_errors` receives
 the error count.

 # Safety
 The path arguments are NUL-terminated strings; the out pointers are
 writable.
 */
enum StrutskitStatus strutskit_check(const char *config_dir,
                                     const char *data_dir,
                                     const char *template_dir,
                                     char **out_report,
                                     size_t *out_errors);

/*
 Parses a framework config document. On success `*out_config`
 receives a handle to free with [`strutskit_config_free`].

 # Safety
 `xml` is a NUL-terminated string; `out_config` is writable.
 */
enum StrutskitStatus strutskit_config_parse(const char *xml, struct StrutskitConfig **out_config);

/*
 # Safety
 `config` is null or a handle from [`strutskit_config_parse`] not yet
 freed.
 */
void strutskit_config_free(struct StrutskitConfig *config);

/*
 Number of action mappings, or 0 for a null handle.

 # Safety
 `config` is null or a live handle.
 */
size_t strutskit_config_mapping_count(const struct StrutskitConfig *config);

/*
 Resolves `forward_name` for the mapping that answers `action_path`,
 local forwards first, then global ones. `*out_path` receives the
 target path.

 # Safety
 `config` is a live handle; the string arguments are NUL-terminated;
 `out_path` is writable.
 */
enum StrutskitStatus strutskit_config_resolve_forward(const struct StrutskitConfig *config,
                                                      const char *action_path,
                                                      const char *forward_name,
                                                      char **out_path);

/*
 Renders the route table, one mapping per line sorted by path.

 # Safety
 `config` is a live handle; `out_table` is writable.
 */
enum StrutskitStatus strutskit_config_routes(const struct StrutskitConfig *config,
                                             char **out_table);

/*
 Message for the last failed call on this thread, or null. Valid until
 the next call into this library on the same thread.
 */
const char *strutskit_last_error_message(void);

/*
 # Safety
 `s` is null or a string returned by this library not yet freed.
 */
void strutskit_string_free(char *s);

/*
 # Safety
 `buffer` was filled by this library and not yet freed.
 */
void strutskit_buffer_free(struct StrutskitBuffer buffer);

/*
 Library version as a static NUL-terminated string.
 */
const char *strutskit_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRUTSKIT_H */
