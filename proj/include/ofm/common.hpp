#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace ofm {

inline constexpr double kPi = std::numbers::pi;

// Input violates a documented precondition (bad norm, empty range, ...).
class DegenerateInput : public std::invalid_argument {
 public:
  explicit DegenerateInput(const std::string& msg) : std::invalid_argument(msg) {}
};

// A learned representation collapsed (e.g. near-equal extremal eigenvalues),
// so the requested quantity has no stable value.
class DegenerateRepresentation : public std::runtime_error {
 public:
  explicit DegenerateRepresentation(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace ofm
