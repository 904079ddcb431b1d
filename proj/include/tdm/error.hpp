#pragma once

#include <stdexcept>
#include <string>

namespace tdm {

/// Root of every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidNodeId : public Error {
 public:
  using Error::Error;
};

}  // namespace tdm
