#pragma once

#include <stdexcept>
#include <string>

namespace delib {

// Every failure surfaced by the library carries a stable code (E_*) so the
// command-line front end can print it verbatim and map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace delib
