/* triguard: finite-model toolkit for guarded logics with a universal role and
 * transitive guards.
 *
 * C API over the C++ core: opaque handles, integer status codes, UTF-8
 * strings. Every function returns TG_OK (0) on success; on failure the
 * thread-local message of tg_last_error() describes the problem. Strings
 * returned through char** are heap-allocated; release them with
 * tg_string_free. Handles are released with the matching *_free call.
 */
#ifndef TRIGUARD_H
#define TRIGUARD_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct tg_signature tg_signature;
typedef struct tg_formula tg_formula;
typedef struct tg_structure tg_structure;
typedef struct tg_nf_iter tg_nf_iter;

enum {
  TG_OK = 0,
  TG_ERR_SYNTAX = 1,
  TG_ERR_SIGNATURE = 2,
  TG_ERR_ARITY = 3,
  TG_ERR_FRAGMENT = 4,
  TG_ERR_SHAPE = 5,
  TG_ERR_DOMAIN = 6,
  TG_ERR_CONSTRUCTION = 7,
  TG_ERR_IO = 8,
  TG_ERR_OTHER = 9,
  /* tg_find / tg_finsat verdicts */
  TG_ABSENT = 100
};

const char* tg_version(void);
/* Thread-local message of the most recent failing call. */
const char* tg_last_error(void);
void tg_string_free(char* s);

/* --- signatures ---------------------------------------------------------- */

/* Parses a header block: `rel R/2; const c; universal U; transitive T;
 * aux Aux;`. */
int tg_signature_parse(const char* text, tg_signature** out);
int tg_signature_format(const tg_signature* sig, char** out);
void tg_signature_free(tg_signature* sig);

/* --- formulas ------------------------------------------------------------ */

int tg_formula_parse(const tg_signature* sig, const char* text, tg_formula** out);
/* Parses a full formula file (header block + formula). */
int tg_formula_load(const char* file_text, tg_signature** sig_out, tg_formula** out);
int tg_formula_print(const tg_formula* f, char** out);
/* JSON fragment-membership report (GF, TGF, GFU, GF+TG, GFU+TG, TGF+TG). */
int tg_classify(const tg_formula* f, const tg_signature* sig, char** json_out);
int tg_tgf_to_gfu(const tg_formula* f, const tg_signature* sig, tg_formula** out);
int tg_gfu_to_tgf(const tg_formula* f, const tg_signature* sig, tg_formula** out);
void tg_formula_free(tg_formula* f);

/* --- normal form ---------------------------------------------------------- */

/* Lazy enumeration of normal-form disjuncts; tg_enhance != 0 additionally
 * rewrites each disjunct into the enhanced transitive-guard shape. */
int tg_normalize_begin(const tg_formula* f, const tg_signature* sig, int tg_enhance,
                       tg_nf_iter** out);
/* Yields the next disjunct as a formula file text (header + sentence);
 * returns TG_ABSENT when exhausted. */
int tg_normalize_next(tg_nf_iter* it, char** file_text_out);
void tg_nf_iter_free(tg_nf_iter* it);

/* --- structures ----------------------------------------------------------- */

/* JSON-lines: {"domain":[...],"constants":{...}} then {"rel":...,"tuple":[...]}
 * per fact; formatting is canonical and round-trips bit-exactly. */
int tg_structure_parse(const tg_signature* sig, const char* jsonl, tg_structure** out);
int tg_structure_format(const tg_structure* s, char** jsonl_out);
int tg_structure_size(const tg_structure* s);
void tg_structure_free(tg_structure* s);

/* --- model checking ------------------------------------------------------- */

/* Evaluates a sentence (standard FO semantics). verdict: 0/1. */
int tg_evaluate(const tg_structure* s, const tg_formula* f, int* verdict);
/* Checks a normal-form sentence conjunct by conjunct; flags bit 1: require
 * U-biquity, bit 2: require transitivity. Writes a JSON report. */
int tg_check(const tg_structure* s, const tg_formula* f, const tg_signature* sig, int flags,
             int* verdict, char** report_json_out);

/* --- bounded model search -------------------------------------------------- */

/* config_json keys (all optional): max_size, ubiquitous, transitive,
 * ramified, max_fact_elems, seed. Returns TG_ABSENT when no model exists
 * within the bound. */
int tg_find(const tg_formula* f, const tg_signature* sig, const char* config_json,
            tg_structure** out);

/* --- saturation ------------------------------------------------------------ */

/* options_json keys: max_seed_size, constants, tg, check_steps, trace_path.
 * Runs the U-saturation pipeline: bounded search for a U-biquitous model of
 * the sentence, phi* construction, seed search, saturation. Writes the trace
 * as JSON-lines to trace_path when given; stats_json_out reports sizes and
 * step counts. Returns TG_ABSENT when no seed exists within the bound. */
int tg_saturate(const tg_formula* f, const tg_signature* sig, const char* options_json,
                tg_structure** model_out, char** stats_json_out);

/* --- finite satisfiability -------------------------------------------------- */

/* options_json keys: logic ("gftg"|"gfutg"), alpha_max, beta_max, find_max.
 * Returns TG_OK with a certificate on yes, TG_ABSENT on "no within budgets". */
int tg_finsat(const tg_formula* f, const tg_signature* sig, const char* options_json,
              tg_structure** certificate_out, char** stats_json_out);

#ifdef __cplusplus
}
#endif

#endif /* TRIGUARD_H */
