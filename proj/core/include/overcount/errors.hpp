#pragma once

#include <stdexcept>
#include <string>

namespace overcount {

/// Malformed user input: bad CSV, ragged rows, negative counts, bad options.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace overcount
