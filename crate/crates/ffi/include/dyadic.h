#ifndef DYADIC_H
#define DYADIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum DyadicStatus {
  DYADIC_STATUS_OK = 0,
  DYADIC_STATUS_NULL_ARGUMENT = 1,
  DYADIC_STATUS_INVALID_UTF8 = 2,
  DYADIC_STATUS_PARSE_ERROR = 3,
  DYADIC_STATUS_UNSUPPORTED_CLASS = 4,
  DYADIC_STATUS_NOT_IN_DYADIC_CLASS = 5,
  DYADIC_STATUS_REASONER_INEXACT = 6,
  DYADIC_STATUS_NOT_A_DYADIC_PAIR = 7,
  DYADIC_STATUS_NO_TERMINATION_CERTIFICATE = 8,
  DYADIC_STATUS_INVALID_QUERY = 9,
  DYADIC_STATUS_OTHER = 10,
  DYADIC_STATUS_PANIC = 11,
} DyadicStatus;

// Certain-answer oracle used by [`dyadic_answer`] and [`dyadic_check`].
typedef enum DyadicOracle {
  // Chase without budget; only for chase-terminating classes.
  DYADIC_ORACLE_CHASE = 0,
  // Chase within the budget; fails with `REASONER_INEXACT` when it runs out.
  DYADIC_ORACLE_BOUNDED = 1,
} DyadicOracle;

// A finished chase run.
typedef struct DyadicChase DyadicChase;

// A parsed program: facts, rules and queries.
typedef struct DyadicProgram DyadicProgram;

// Chase limits. A zero field means no limit on that dimension.
typedef struct DyadicBudget {
  size_t max_atoms;
  uint32_t max_level;
} DyadicBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dyadic_version(void);

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *dyadic_last_error(void);

// The default budget: 100000 atoms, 64 levels.
struct DyadicBudget dyadic_budget_default(void);

// Parses a program. `allow_reserved` accepts `__`-prefixed predicates.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum DyadicStatus dyadic_program_parse(const char *text,
                                       bool allow_reserved,
                                       struct DyadicProgram **out);

// # Safety
// `program` must come from [`dyadic_program_parse`] or be null.
void dyadic_program_free(struct DyadicProgram *program);

// # Safety
// `program` must be a live handle or null (gives 0).
size_t dyadic_program_num_facts(const struct DyadicProgram *program);

// # Safety
// `program` must be a live handle or null (gives 0).
size_t dyadic_program_num_rules(const struct DyadicProgram *program);

// # Safety
// `program` must be a live handle or null (gives 0).
size_t dyadic_program_num_queries(const struct DyadicProgram *program);

// Canonical text of the program. Free with [`dyadic_string_free`].
//
// # Safety
// `program` must be a live handle and `out` a valid pointer.
enum DyadicStatus dyadic_program_to_string(const struct DyadicProgram *program, char **out);

// Membership in every class as a JSON object keyed by class name, each
// value `{"member": bool, "witness": string|null}`.
//
// # Safety
// `program` must be a live handle and `out` a valid pointer.
enum DyadicStatus dyadic_classify_json(const struct DyadicProgram *program, char **out);

// Membership in one class, e.g. `"Guarded"` or `"Dyadic-Shy"`.
//
// # Safety
// `program` must be a live handle, `class` a NUL-terminated string and
// `out` a valid pointer.
enum DyadicStatus dyadic_is_member(const struct DyadicProgram *program,
                                   const char *class_,
                                   bool *out);

// Chases the program's facts with its rules. A budget with both fields zero
// needs a termination certificate.
//
// # Safety
// `program` must be a live handle and `out` a valid pointer.
enum DyadicStatus dyadic_chase(const struct DyadicProgram *program,
                               struct DyadicBudget budget,
                               struct DyadicChase **out);

// # Safety
// `chase` must come from [`dyadic_chase`] or be null.
void dyadic_chase_free(struct DyadicChase *chase);

// Number of atoms; 0 for null.
//
// # Safety
// `chase` must be a live handle or null.
size_t dyadic_chase_len(const struct DyadicChase *chase);

// Whether the run reached a fixpoint; false for null.
//
// # Safety
// `chase` must be a live handle or null.
bool dyadic_chase_is_complete(const struct DyadicChase *chase);

// Atoms in derivation order, one `atom.` per line.
//
// # Safety
// `chase` must be a live handle and `out` a valid pointer.
enum DyadicStatus dyadic_chase_to_string(const struct DyadicChase *chase, char **out);

// Certain answers through the dyadic decomposition for `class` (a base
// class name; a `Dyadic-` prefix is accepted). `query` is a 0-based index
// into the program's queries or an inline query. The result has one
// comma-separated tuple per line, or `true`/`false` for a Boolean query.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum DyadicStatus dyadic_answer(const struct DyadicProgram *program,
                                const char *query,
                                const char *class_,
                                enum DyadicOracle oracle,
                                struct DyadicBudget budget,
                                char **out);

// Decides whether the comma-separated `tuple` is a certain answer.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum DyadicStatus dyadic_check(const struct DyadicProgram *program,
                               const char *query,
                               const char *class_,
                               const char *tuple,
                               enum DyadicOracle oracle,
                               struct DyadicBudget budget,
                               bool *out);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library or be null.
void dyadic_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYADIC_H */
