#ifndef CYCLEPROMPT_CYCLEPROMPT_H
#define CYCLEPROMPT_CYCLEPROMPT_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(CYCLEPROMPT_BUILDING_LIBRARY)
#define CP_API __attribute__((visibility("default")))
#else
#define CP_API
#endif

/* Return codes. CP_OK, CP_PARTIAL and CP_ERR_CONFIG double as process exit
   codes; cp_exit_code maps the rest. */
typedef enum cp_status {
  CP_OK = 0,
  CP_PARTIAL = 1,       /* batch finished with FAILED or PENDING tasks */
  CP_ERR_CONFIG = 2,    /* invalid config, bad input, missing provider role */
  CP_ERR_FINGERPRINT = 3,
  CP_ERR_IO = 4,
  CP_ERR_PROVIDER = 5,
  CP_ERR_FORMAT = 6,    /* malformed input files, unsupported export */
  CP_ERR_ARGUMENT = 7,  /* NULL handle or out pointer */
  CP_ERR_INTERNAL = 8
} cp_status;

typedef struct cp_session cp_session;

/* Called after each task settles; status is "done" or "failed". */
typedef void (*cp_task_callback)(const char* task_id, const char* status, const char* detail, void* user);

/* Message of the last failing call on this thread; never NULL. */
CP_API const char* cp_last_error(void);

CP_API const char* cp_version(void);

/* config_path may be NULL (built-in defaults only). overrides_json is a JSON
   merge patch applied on top of the file, or NULL. */
CP_API cp_status cp_session_open(const char* config_path, const char* overrides_json, cp_session** out);

/* Session over an existing run directory, using the config stored there.
   overrides_json (or NULL) is merged on top; resume refuses any override that
   changes the fingerprint. */
CP_API cp_status cp_session_open_run(const char* run_dir, const char* overrides_json, cp_session** out);

CP_API void cp_session_close(cp_session* session);

CP_API cp_status cp_set_task_callback(cp_session* session, cp_task_callback callback, void* user);

/* Resolved configuration as JSON. Free with cp_string_free. */
CP_API cp_status cp_config_json(cp_session* session, char** out);

CP_API cp_status cp_run(cp_session* session);
CP_API cp_status cp_resume(cp_session* session);

/* Writes eval.json into the run directory; *summary_json (optional) gets the
   report. */
CP_API cp_status cp_eval(cp_session* session, char** summary_json);

/* format: "completions", "compat" or "requests". out_path may be NULL for the
   default location inside the run directory. */
CP_API cp_status cp_export(cp_session* session, const char* format, const char* out_path, char** written_path);

CP_API cp_status cp_report(cp_session* session, char** written_path);

/* One line per provider role. Returns CP_ERR_PROVIDER when any check fails,
   CP_ERR_CONFIG when a binding is invalid. */
CP_API cp_status cp_doctor(cp_session* session, int offline, char** text);

/* Manifest without timestamps, as JSON. */
CP_API cp_status cp_manifest_json(cp_session* session, char** out);

CP_API void cp_string_free(char* s);

/* 0, 1 or 2 for a status, following the command-line convention. */
CP_API int cp_exit_code(cp_status status);

#ifdef __cplusplus
}
#endif

#endif
