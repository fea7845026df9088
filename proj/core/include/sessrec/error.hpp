#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sessrec {

// Error carrying the pipeline stage it originated from, so the CLI can emit
// structured failure messages naming the failing stage and input.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

[[noreturn]] inline void fail(const std::string& stage, const std::string& message) {
  throw Error(stage, message);
}

inline void require(bool cond, const std::string& stage, const std::string& message) {
  if (!cond) fail(stage, message);
}

}  // namespace sessrec
