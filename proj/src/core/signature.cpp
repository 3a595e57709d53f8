#include "signature.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace triguard {

int Signature::add_relation(const std::string& name, int arity) {
  if (name.empty()) fail(ErrorKind::Signature, "empty relation name");
  if (arity < 1) fail(ErrorKind::Signature, "relation " + name + " must have positive arity");
  if (arity > kMaxArity)
    fail(ErrorKind::Signature,
         "relation " + name + " exceeds the supported arity " + std::to_string(kMaxArity));
  if (rel_index_.count(name)) {
    int i = rel_index_.at(name);
    if (relations_[static_cast<size_t>(i)].arity != arity)
      fail(ErrorKind::Signature, "relation " + name + " redeclared with different arity");
    return i;
  }
  if (const_index_.count(name))
    fail(ErrorKind::Signature, "name " + name + " already declared as a constant");
  relations_.push_back({name, arity});
  int i = static_cast<int>(relations_.size()) - 1;
  rel_index_[name] = i;
  return i;
}

void Signature::add_constant(const std::string& name) {
  if (name.empty()) fail(ErrorKind::Signature, "empty constant name");
  if (rel_index_.count(name))
    fail(ErrorKind::Signature, "name " + name + " already declared as a relation");
  if (const_index_.count(name)) return;
  constants_.push_back(name);
  const_index_[name] = static_cast<int>(constants_.size()) - 1;
}

void Signature::check_special(int rel, const char* role) const {
  if (relations_[static_cast<size_t>(rel)].arity != 2)
    fail(ErrorKind::Signature,
         std::string(role) + " symbol " + relations_[static_cast<size_t>(rel)].name +
             " must be binary");
}

void Signature::set_universal(const std::string& name) {
  int i = rel_index_.count(name) ? rel_index_.at(name) : add_relation(name, 2);
  check_special(i, "universal");
  if (std::find(transitive_.begin(), transitive_.end(), i) != transitive_.end())
    fail(ErrorKind::Signature, "universal symbol must not be transitive");
  universal_ = i;
}

void Signature::set_transitive(const std::string& name) {
  int i = rel_index_.count(name) ? rel_index_.at(name) : add_relation(name, 2);
  check_special(i, "transitive");
  if (i == universal_) fail(ErrorKind::Signature, "universal symbol must not be transitive");
  if (i == aux_) fail(ErrorKind::Signature, "aux symbol must not be transitive");
  if (!is_transitive(i)) {
    transitive_.push_back(i);
    std::sort(transitive_.begin(), transitive_.end());
  }
}

void Signature::set_aux(const std::string& name) {
  int i = rel_index_.count(name) ? rel_index_.at(name) : add_relation(name, 2);
  check_special(i, "aux");
  if (std::find(transitive_.begin(), transitive_.end(), i) != transitive_.end())
    fail(ErrorKind::Signature, "aux symbol must not be transitive");
  aux_ = i;
}

int Signature::relation_index(const std::string& name) const {
  auto it = rel_index_.find(name);
  return it == rel_index_.end() ? -1 : it->second;
}

int Signature::constant_index(const std::string& name) const {
  auto it = const_index_.find(name);
  return it == const_index_.end() ? -1 : it->second;
}

bool Signature::is_transitive(int rel) const {
  return std::binary_search(transitive_.begin(), transitive_.end(), rel);
}

int Signature::width() const {
  int w = 0;
  for (const auto& r : relations_) w = std::max(w, r.arity);
  return w;
}

std::string Signature::fresh_name(const std::string& stem) const {
  for (int i = 1;; ++i) {
    std::string name = "_" + stem + std::to_string(i);
    if (!rel_index_.count(name) && !const_index_.count(name)) return name;
  }
}

std::string Signature::format() const {
  std::ostringstream out;
  for (const auto& r : relations_) out << "rel " << r.name << "/" << r.arity << ";\n";
  for (const auto& c : constants_) out << "const " << c << ";\n";
  if (universal_ >= 0) out << "universal " << relations_[static_cast<size_t>(universal_)].name << ";\n";
  for (int t : transitive_) out << "transitive " << relations_[static_cast<size_t>(t)].name << ";\n";
  if (aux_ >= 0) out << "aux " << relations_[static_cast<size_t>(aux_)].name << ";\n";
  return out.str();
}

bool Signature::operator==(const Signature& o) const {
  if (relations_.size() != o.relations_.size() || constants_ != o.constants_ ||
      universal_ != o.universal_ || aux_ != o.aux_ || transitive_ != o.transitive_)
    return false;
  for (size_t i = 0; i < relations_.size(); ++i)
    if (relations_[i].name != o.relations_[i].name || relations_[i].arity != o.relations_[i].arity)
      return false;
  return true;
}

namespace {

struct HeaderScanner {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size()) {
      if (std::isspace(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      } else if (s[pos] == '#') {  // comment to end of line
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }
  bool at_word(const char* w) {
    skip_ws();
    size_t n = std::char_traits<char>::length(w);
    if (s.compare(pos, n, w) != 0) return false;
    size_t end = pos + n;
    if (end < s.size() &&
        (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
      return false;
    return true;
  }
  std::string word() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    if (start == pos) fail(ErrorKind::Syntax, "expected identifier in signature header at offset " +
                                               std::to_string(pos));
    return s.substr(start, pos - start);
  }
  void expect(char c) {
    skip_ws();
    if (pos >= s.size() || s[pos] != c)
      fail(ErrorKind::Syntax, std::string("expected '") + c + "' in signature header at offset " +
                                  std::to_string(pos));
    ++pos;
  }
};

}  // namespace

std::pair<Signature, size_t> parse_signature_header(const std::string& text) {
  Signature sig;
  HeaderScanner sc{text};
  for (;;) {
    sc.skip_ws();
    if (sc.at_word("rel")) {
      sc.word();
      std::string name = sc.word();
      sc.expect('/');
      sc.skip_ws();
      size_t start = sc.pos;
      while (sc.pos < text.size() && std::isdigit(static_cast<unsigned char>(text[sc.pos]))) ++sc.pos;
      if (start == sc.pos) fail(ErrorKind::Syntax, "expected arity after '/'");
      sig.add_relation(name, std::stoi(text.substr(start, sc.pos - start)));
      sc.expect(';');
    } else if (sc.at_word("const")) {
      sc.word();
      sig.add_constant(sc.word());
      sc.expect(';');
    } else if (sc.at_word("universal")) {
      sc.word();
      sig.set_universal(sc.word());
      sc.expect(';');
    } else if (sc.at_word("transitive")) {
      sc.word();
      sig.set_transitive(sc.word());
      sc.expect(';');
    } else if (sc.at_word("aux")) {
      sc.word();
      sig.set_aux(sc.word());
      sc.expect(';');
    } else {
      break;
    }
  }
  return {std::move(sig), sc.pos};
}

}  // namespace triguard
