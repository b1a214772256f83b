#pragma once

#include <stdexcept>
#include <string>

namespace addfunc {

// Rejected before any estimation work starts: bad mode/parameter combinations,
// malformed experiment grids, unknown config keys, ...
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data (histogram CSV, sample lists). Carries a 1-based line
// number when one is known, -1 otherwise.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg, long line_no = -1)
      : std::runtime_error(line_no > 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
        line(line_no) {}
  long line;
};

// Estimation failed at run time: insufficient data, non-finite intermediate,
// unsupported derivative order, ...
struct EstimatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace addfunc
