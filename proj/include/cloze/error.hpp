#pragma once

#include <stdexcept>
#include <string>

namespace cloze {

// Raised for invalid input data: malformed files, schema violations and
// degenerate statistical designs. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cloze
