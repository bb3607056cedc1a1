#pragma once

#include <stdexcept>
#include <string>

namespace isoyamabe {

enum class Errc {
  invalid_argument,  // caller handed in something malformed
  domain,            // well-formed input outside an operation's precondition
  convergence,       // an iterative method gave up
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace isoyamabe
