#ifndef TRIGUARD_COMMON_HPP
#define TRIGUARD_COMMON_HPP

#include <array>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace triguard {

// Engine-wide cap on relation arity. Fact tuples are stored inline; the
// signature loader rejects wider relations up front.
inline constexpr int kMaxArity = 6;

enum class ErrorKind {
  Syntax,        // lexical or grammar error in formula/signature text
  Signature,     // invariant violation in a signature declaration
  Arity,         // undeclared symbol or arity mismatch
  Fragment,      // input outside the required fragment
  Shape,         // sentence not of the required normal-form shape
  Domain,        // element outside a structure's domain, bad tuple, ...
  Construction,  // a paper-side precondition failed (signals an upstream bug)
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// Inline tuple of element ids, up to kMaxArity wide.
struct Tup {
  uint8_t n = 0;
  std::array<int32_t, kMaxArity> e{};

  Tup() = default;
  Tup(std::initializer_list<int32_t> xs) {
    for (int32_t x : xs) push(x);
  }
  static Tup from(const std::vector<int>& xs) {
    Tup t;
    for (int x : xs) t.push(x);
    return t;
  }
  void push(int32_t x) {
    if (n >= kMaxArity) fail(ErrorKind::Domain, "tuple wider than max arity");
    e[n++] = x;
  }
  int size() const { return n; }
  int32_t operator[](int i) const { return e[static_cast<size_t>(i)]; }
  int32_t& operator[](int i) { return e[static_cast<size_t>(i)]; }
  bool operator==(const Tup& o) const {
    if (n != o.n) return false;
    for (int i = 0; i < n; ++i)
      if (e[static_cast<size_t>(i)] != o.e[static_cast<size_t>(i)]) return false;
    return true;
  }
  bool operator<(const Tup& o) const {
    if (n != o.n) return n < o.n;
    for (int i = 0; i < n; ++i) {
      auto a = e[static_cast<size_t>(i)], b = o.e[static_cast<size_t>(i)];
      if (a != b) return a < b;
    }
    return false;
  }
  bool contains(int32_t x) const {
    for (int i = 0; i < n; ++i)
      if (e[static_cast<size_t>(i)] == x) return true;
    return false;
  }
  std::vector<int> to_vector() const {
    return std::vector<int>(e.begin(), e.begin() + n);
  }
};

struct TupHash {
  size_t operator()(const Tup& t) const {
    uint64_t h = 0x9e3779b97f4a7c15ull ^ t.n;
    for (int i = 0; i < t.n; ++i) {
      h ^= static_cast<uint64_t>(static_cast<uint32_t>(t.e[static_cast<size_t>(i)])) + 0x9e3779b9u +
           (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
    }
    return static_cast<size_t>(h ^ (h >> 33));
  }
};

}  // namespace triguard

#endif
