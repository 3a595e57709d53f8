#ifndef TRIGUARD_PARSER_HPP
#define TRIGUARD_PARSER_HPP

#include <string>
#include <utility>

#include "ast.hpp"
#include "signature.hpp"

namespace triguard {

/// Parses a formula against a declared signature. Grammar (ASCII):
///   formula := iff ; iff := impl ('<->' impl)* ; impl := or ('->' impl)?
///   or := and ('|' and)* ; and := unit ('&' unit)*
///   unit := '!' unit | ('forall'|'exists') var+ unit | '(' formula ')' | atom
///   atom := IDENT '(' term (',' term)* ')' | term '=' term
/// Binders are renamed apart globally during parsing; identifiers matching a
/// declared constant denote that constant.
Formula parse_formula(const std::string& text, const Signature& sig);

/// Parses a formula file: signature header statements followed by one formula.
std::pair<Signature, Formula> parse_formula_file(const std::string& text);

/// Formats a formula file (header block + formula text).
std::string format_formula_file(const Signature& sig, const Formula& f);

}  // namespace triguard

#endif
