#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cbso {

// Flat parameter vector playing the role of reward params, policy params,
// or a synthetic decision variable. Dimension is fixed for a run.
using ParamVector = Eigen::VectorXd;

enum class ErrorCode {
  NonPositiveCoefficient,
  EqualSigmas,
  BadExponent,
  SingularSystem,
  NonFiniteIterate,
  UnknownProblem,
  InfeasibleEverywhere,
  Diverged,
  EmptyWindow,
  ConfigError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.allFinite();
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

}  // namespace cbso
