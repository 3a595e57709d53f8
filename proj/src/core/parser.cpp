#include "parser.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace triguard {

namespace {

enum class Tok {
  Ident, LParen, RParen, Comma, Eq, And, Or, Not, Implies, Iff, Forall, Exists, End
};

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= s_.size()) {
      tok_ = {Tok::End, "", line_, col_};
      return;
    }
    char c = s_[pos_];
    auto punct = [&](Tok k, int len, const char* txt) {
      tok_ = {k, txt, line_, col_};
      pos_ += static_cast<size_t>(len);
      col_ += len;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
        ++col_;
      }
      std::string w = s_.substr(start, pos_ - start);
      Tok k = w == "forall" ? Tok::Forall : w == "exists" ? Tok::Exists : Tok::Ident;
      tok_ = {k, w, line_, tok_.col};
      return;
    }
    switch (c) {
      case '(': punct(Tok::LParen, 1, "("); return;
      case ')': punct(Tok::RParen, 1, ")"); return;
      case ',': punct(Tok::Comma, 1, ","); return;
      case '=': punct(Tok::Eq, 1, "="); return;
      case '&': punct(Tok::And, 1, "&"); return;
      case '|': punct(Tok::Or, 1, "|"); return;
      case '!': punct(Tok::Not, 1, "!"); return;
      case '<':
        if (s_.compare(pos_, 3, "<->") == 0) {
          punct(Tok::Iff, 3, "<->");
          return;
        }
        break;
      case '-':
        if (s_.compare(pos_, 2, "->") == 0) {
          punct(Tok::Implies, 2, "->");
          return;
        }
        break;
      default: break;
    }
    fail(ErrorKind::Syntax, "unexpected character '" + std::string(1, c) + "' at " +
                                std::to_string(line_) + ":" + std::to_string(col_));
  }

  const std::string& s_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_{Tok::End, "", 1, 1};
};

class Parser {
 public:
  Parser(const std::string& text, const Signature& sig) : lex_(text), sig_(sig) {
    seed_used_names(text);
  }

  Formula parse() {
    Formula f = formula();
    if (lex_.peek().kind != Tok::End)
      err("trailing input after formula");
    return f;
  }

 private:
  [[noreturn]] void err(const std::string& msg) const {
    const Token& t = lex_.peek();
    fail(ErrorKind::Syntax,
         msg + " at " + std::to_string(t.line) + ":" + std::to_string(t.col));
  }

  void seed_used_names(const std::string& text) {
    // Every identifier in the input counts as taken, so fresh binder names
    // never collide with anything the user wrote.
    size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = i;
        while (i < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
          ++i;
        used_.insert(text.substr(start, i - start));
      } else {
        ++i;
      }
    }
  }

  Formula formula() {
    Formula f = impl();
    while (lex_.peek().kind == Tok::Iff) {
      lex_.take();
      f = Formula::iff(std::move(f), impl());
    }
    return f;
  }

  Formula impl() {
    Formula f = disj();
    if (lex_.peek().kind == Tok::Implies) {
      lex_.take();
      return Formula::implies(std::move(f), impl());
    }
    return f;
  }

  Formula disj() {
    Formula f = conj();
    while (lex_.peek().kind == Tok::Or) {
      lex_.take();
      f = Formula::lor(std::move(f), conj());
    }
    return f;
  }

  Formula conj() {
    Formula f = unit();
    while (lex_.peek().kind == Tok::And) {
      lex_.take();
      f = Formula::land(std::move(f), unit());
    }
    return f;
  }

  Formula unit() {
    if (pushback_) return atom();
    switch (lex_.peek().kind) {
      case Tok::Not:
        lex_.take();
        return Formula::negate(unit());
      case Tok::Forall:
      case Tok::Exists: {
        bool universal = lex_.take().kind == Tok::Forall;
        return quantifier(universal);
      }
      case Tok::LParen: {
        lex_.take();
        Formula f = formula();
        if (lex_.peek().kind != Tok::RParen) err("expected ')'");
        lex_.take();
        return f;
      }
      case Tok::Ident:
        return atom();
      default:
        err("expected formula");
    }
  }

  Formula quantifier(bool universal) {
    std::vector<std::string> user_vars;
    // Identifiers are quantified variables until one begins an atom: either a
    // declared relation applied to arguments, or the left side of an equality.
    for (;;) {
      if (lex_.peek().kind != Tok::Ident) break;
      Token save = lex_.take();
      Tok next = lex_.peek().kind;
      bool atom_head = next == Tok::Eq ||
                       (next == Tok::LParen && sig_.relation_index(save.text) >= 0);
      if (!user_vars.empty() && atom_head) {
        pushback_ = save;  // first token of the body's atom
        break;
      }
      user_vars.push_back(save.text);
    }
    if (user_vars.empty()) err("expected quantified variable");
    std::vector<std::string> fresh;
    for (const auto& v : user_vars) {
      if (sig_.constant_index(v) >= 0)
        fail(ErrorKind::Syntax, "quantified variable " + v + " shadows a constant");
      std::string name = rename_apart(v);
      fresh.push_back(name);
      scope_.push_back({v, name});
    }
    Formula body = unit();
    scope_.resize(scope_.size() - user_vars.size());
    return Formula::quant(universal ? NodeKind::Forall : NodeKind::Exists, std::move(fresh),
                          std::move(body));
  }

  std::string rename_apart(const std::string& v) {
    bool bound_before = bound_once_.count(v) > 0;
    bound_once_.insert(v);
    if (!bound_before) {
      used_.insert(v);
      return v;
    }
    for (int i = 2;; ++i) {
      std::string cand = v + "_" + std::to_string(i);
      if (!used_.count(cand)) {
        used_.insert(cand);
        return cand;
      }
    }
  }

  Token take_token() {
    if (pushback_) {
      Token t = *pushback_;
      pushback_.reset();
      return t;
    }
    return lex_.take();
  }

  Term term_from_ident(const Token& t) {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == t.text) return Term::var(it->second);
    int c = sig_.constant_index(t.text);
    if (c >= 0) return Term::constant(t.text, c);
    return Term::var(t.text);  // free variable
  }

  Formula atom() {
    Token head = take_token();
    if (head.kind != Tok::Ident) err("expected atom");
    if (lex_.peek().kind == Tok::LParen) {
      int rel = sig_.relation_index(head.text);
      if (rel < 0)
        fail(ErrorKind::Arity, "undeclared relation " + head.text + " at " +
                                   std::to_string(head.line) + ":" + std::to_string(head.col));
      lex_.take();
      std::vector<Term> args;
      for (;;) {
        Token t = lex_.take();
        if (t.kind != Tok::Ident) err("expected term");
        args.push_back(term_from_ident(t));
        Token sep = lex_.take();
        if (sep.kind == Tok::RParen) break;
        if (sep.kind != Tok::Comma) err("expected ',' or ')'");
      }
      if (static_cast<int>(args.size()) != sig_.arity(rel))
        fail(ErrorKind::Arity,
             "arity mismatch for " + head.text + ": expected " + std::to_string(sig_.arity(rel)) +
                 ", got " + std::to_string(args.size()) + " at " + std::to_string(head.line) +
                 ":" + std::to_string(head.col));
      return Formula::atom(rel, head.text, std::move(args));
    }
    Term lhs = term_from_ident(head);
    if (lex_.peek().kind != Tok::Eq) err("expected '=' or '(' after identifier");
    lex_.take();
    Token t = lex_.take();
    if (t.kind != Tok::Ident) err("expected term after '='");
    return Formula::equal(lhs, term_from_ident(t));
  }

  Lexer lex_;
  const Signature& sig_;
  std::set<std::string> used_;
  std::set<std::string> bound_once_;
  std::vector<std::pair<std::string, std::string>> scope_;
  std::optional<Token> pushback_;
};

}  // namespace

Formula parse_formula(const std::string& text, const Signature& sig) {
  return Parser(text, sig).parse();
}

std::pair<Signature, Formula> parse_formula_file(const std::string& text) {
  auto [sig, offset] = parse_signature_header(text);
  std::string rest = text.substr(offset);
  Formula f = parse_formula(rest, sig);
  return {std::move(sig), std::move(f)};
}

std::string format_formula_file(const Signature& sig, const Formula& f) {
  return sig.format() + f.print() + "\n";
}

}  // namespace triguard
