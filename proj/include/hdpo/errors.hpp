#pragma once

#include <stdexcept>
#include <string>

namespace hdpo {

// A loss or ratio became non-finite; `where` names the offending term.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, std::string where)
      : std::runtime_error(what + " [" + where + "]"), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

// Raised when conditioning on R=1 is impossible because the reference policy
// has zero mass on correct trajectories (the cliff case).
class DegenerateConditional : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hdpo
