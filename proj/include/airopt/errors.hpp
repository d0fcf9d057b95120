#ifndef AIROPT_ERRORS_HPP
#define AIROPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace airopt {

// Bad user input: config files, CLI arguments, malformed CSV data.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric invariant broke mid-run (NaN/Inf state). Carries enough context
// to locate the offending iterate.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& msg, long iteration, int agent)
      : std::runtime_error(msg), iteration(iteration), agent(agent) {}
  long iteration = -1;
  int agent = -1;
};

}  // namespace airopt

#endif
